#pragma once

#include <queue>
#include <vector>

#include "cosrec/core.hpp"
#include "cosrec/similarity.hpp"

namespace cosrec {

struct NeighborEntry {
  int index;          // user index in {1, ..., n}
  double similarity;  // penalized similarity S
  double weight;      // 1/k, or 0 for a zero masked vector
};

/// The k selected responders, strongest first. Empty when fewer than k
/// responders exist. Weights sum to at most 1.
struct NeighborWeights {
  std::vector<NeighborEntry> selected;

  double weight_sum() const {
    double sum = 0.0;
    for (const auto& e : selected) sum += e.weight;
    return sum;
  }
};

namespace detail {

struct Scored {
  double s;
  int index;
};

// Total order used for ranking: larger similarity wins, exact float ties go
// to the smaller user index. No epsilon window.
struct Stronger {
  bool operator()(const Scored& a, const Scored& b) const {
    if (a.s != b.s) return a.s > b.s;
    return a.index < b.index;
  }
};

}  // namespace detail

/// Selects the k responders most similar to the query under the penalized
/// similarity. Returns empty weights when fewer than k responders exist.
/// Zero masked vectors compete in the ranking (their similarity is 0) but
/// carry weight 0.
inline NeighborWeights select_k_most_similar(const QueryUser& query,
                                             const DatabaseSnapshot& db,
                                             int k, const PenaltyMap& psi) {
  if (k < 1) throw std::invalid_argument("select_k_most_similar: k < 1");
  NeighborWeights result;
  const auto& responders = db.responders();
  if (static_cast<int>(responders.size()) < k) return result;

  // Bounded top-k scan: the weakest of the current k sits on top of the heap.
  std::priority_queue<detail::Scored, std::vector<detail::Scored>,
                      detail::Stronger>
      top;
  MaskedUserVector masked;
  for (int i : responders) {
    const DbUser& u = db.user(i);
    const double p = penalty(u.reveal, query.mask());
    apply_mask_into(u.raw, u.reveal, query.mask(), masked);
    const double s = psi(p) * bar_similarity(query.ratings(), masked);
    const detail::Scored candidate{s, i};
    if (static_cast<int>(top.size()) < k) {
      top.push(candidate);
    } else if (detail::Stronger{}(candidate, top.top())) {
      top.pop();
      top.push(candidate);
    }
  }

  result.selected.resize(top.size());
  for (auto it = result.selected.rbegin(); it != result.selected.rend(); ++it) {
    const detail::Scored e = top.top();
    top.pop();
    const DbUser& u = db.user(e.index);
    apply_mask_into(u.raw, u.reveal, query.mask(), masked);
    const double weight = masked.is_zero() ? 0.0 : 1.0 / static_cast<double>(k);
    *it = NeighborEntry{e.index, e.s, weight};
  }
  return result;
}

/// The cosine-type k-NN regression estimate: |x| * sum of weight * Y_i /
/// |masked_i| over the selected responders. Returns 0 when fewer than k
/// responders exist or every selected masked vector is zero (the 0 * inf = 0
/// convention is realized by the zero weights).
inline double estimate(const QueryUser& query, const DatabaseSnapshot& db,
                       int k, const PenaltyMap& psi) {
  const NeighborWeights weights = select_k_most_similar(query, db, k, psi);
  if (weights.selected.empty()) return 0.0;
  double acc = 0.0;
  MaskedUserVector masked;
  for (const auto& e : weights.selected) {
    if (e.weight == 0.0) continue;
    const DbUser& u = db.user(e.index);
    apply_mask_into(u.raw, u.reveal, query.mask(), masked);
    acc += e.weight * u.target / masked.norm();
  }
  return query.norm() * acc;
}

}  // namespace cosrec
