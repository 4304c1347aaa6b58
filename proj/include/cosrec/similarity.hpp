#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>

#include "cosrec/core.hpp"

namespace cosrec {

/// Penalty smoothing map psi: a nondecreasing function [0,1] -> [0,1]
/// applied to the reveal-overlap fraction before it scales the co-rated
/// cosine. Built-ins: identity (the default) and square root (promotes
/// users with few rated items). Monotonicity and range are checked on the
/// grid 0, 0.01, ..., 1 at construction.
class PenaltyMap {
 public:
  static PenaltyMap identity() {
    return PenaltyMap([](double p) { return p; });
  }

  static PenaltyMap square_root() {
    return PenaltyMap([](double p) { return std::sqrt(p); });
  }

  static PenaltyMap custom(std::function<double(double)> psi) {
    return PenaltyMap(std::move(psi));
  }

  double operator()(double p) const { return psi_(p); }

 private:
  explicit PenaltyMap(std::function<double(double)> psi) : psi_(std::move(psi)) {
    double prev = psi_(0.0);
    if (prev < 0.0) throw std::invalid_argument("PenaltyMap: psi(0) < 0");
    for (int g = 1; g <= 100; ++g) {
      const double value = psi_(g / 100.0);
      if (value + 1e-15 < prev)
        throw std::invalid_argument("PenaltyMap: psi not nondecreasing");
      prev = value;
    }
    if (psi_(1.0) > 1.0) throw std::invalid_argument("PenaltyMap: psi(1) > 1");
  }

  std::function<double(double)> psi_;
};

/// Items rated (nonzero) by both users.
inline MaskSet corated_set(const RatingVector& x, const RatingVector& x2) {
  std::vector<int> common;
  for (int j = 1; j <= x.size(); ++j)
    if (x.at_item(j) != 0.0 && x2.at_item(j) != 0.0) common.push_back(j);
  return MaskSet::checked(std::move(common), x.size());
}

/// Co-rated cosine over value spans; 0 when no item is co-rated.
inline double bar_similarity(std::span<const double> x,
                             std::span<const double> x2) {
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] != 0.0 && x2[j] != 0.0) {
      dot += x[j] * x2[j];
      xx += x[j] * x[j];
      yy += x2[j] * x2[j];
    }
  }
  if (xx == 0.0) return 0.0;
  return dot / (std::sqrt(xx) * std::sqrt(yy));
}

inline double bar_similarity(const RatingVector& x, const RatingVector& x2) {
  return bar_similarity(std::span<const double>(x.entries()),
                        std::span<const double>(x2.entries()));
}

inline double bar_similarity(const RatingVector& x, const MaskedUserVector& m) {
  return bar_similarity(std::span<const double>(x.entries()),
                        std::span<const double>(m.values));
}

/// Overlap fraction |reveal /\ query| / |query|. Damps the similarity of
/// users that have revealed few of the query's items.
inline double penalty(const MaskSet& reveal, const MaskSet& query) {
  if (query.empty()) throw std::invalid_argument("penalty: empty query mask");
  return static_cast<double>(reveal.intersection_size(query)) /
         static_cast<double>(query.size());
}

/// Penalized similarity psi(p) * Sbar between the query and a database
/// user's masked ratings.
inline double similarity(const QueryUser& query, const RatingVector& user_raw,
                         const MaskSet& reveal, const PenaltyMap& psi) {
  const double p = penalty(reveal, query.mask());
  const MaskedUserVector masked = apply_mask(user_raw, reveal, query.mask());
  return psi(p) * bar_similarity(query.ratings(), masked);
}

/// |Sbar - (1 - d^2/2)| for a user vector supported exactly on the query
/// mask, with d the Euclidean distance of the two normalized vectors. Both
/// sides are computed independently; the gap stays below 1e-12 for all
/// valid inputs.
inline double fact1_gap(const QueryUser& query, const RatingVector& user_star) {
  if (user_star.is_zero())
    throw std::invalid_argument("fact1_gap: zero user vector");
  for (int j = 1; j <= user_star.size(); ++j) {
    const bool rated = user_star.at_item(j) != 0.0;
    if (rated != query.mask().contains(j))
      throw std::invalid_argument(
          "fact1_gap: user vector must be supported exactly on the query mask");
  }
  const double cosine = bar_similarity(query.ratings(), user_star);

  const double qn = query.norm();
  const double un = user_star.norm();
  double dist_sq = 0.0;
  for (int j = 1; j <= user_star.size(); ++j) {
    const double diff =
        query.ratings().at_item(j) / qn - user_star.at_item(j) / un;
    dist_sq += diff * diff;
  }
  return std::abs(cosine - (1.0 - 0.5 * dist_sq));
}

}  // namespace cosrec
