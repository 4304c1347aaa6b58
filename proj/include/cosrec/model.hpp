#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cosrec/core.hpp"
#include "cosrec/rng.hpp"

namespace cosrec {

/// A bounded function of the normalized masked rating vector (phi). The
/// stated [lower, upper] range is what feasibility validation relies on.
struct DirectionFunction {
  std::function<double(std::span<const double>)> value;
  double lower;
  double upper;

  /// a + b * <z, u> with u the all-ones unit direction; zero coordinates of
  /// z contribute nothing, so the map is well defined for every mask.
  static DirectionFunction affine_diagonal(double a, double b, int item_count) {
    if (!(a > 0.0)) throw std::invalid_argument("phi: a must be > 0");
    if (!(b >= 0.0)) throw std::invalid_argument("phi: b must be >= 0");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(item_count));
    return DirectionFunction{
        [inv_sqrt_d, a, b](std::span<const double> z) {
          double sum = 0.0;
          for (double v : z) sum += v;
          return a + b * sum * inv_sqrt_d;
        },
        a, a + b};
  }

  static DirectionFunction constant(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("phi: constant must be > 0");
    return DirectionFunction{[c](std::span<const double>) { return c; }, c, c};
  }
};

struct FOracleResult {
  double mc_mean;
  double closed_form;
  double std_err;
  long accepted;
};

/// Generative law with multiplicative noise: raw ratings are i.i.d. uniform
/// on [1, x_max]; the target rating of a user whose masked restriction is
/// X* is Y = |X*| * phi(X*/|X*|) * eps with eps uniform on
/// [1-delta, 1+delta]. The regression function is therefore available in
/// closed form, eta(x*) = |x*| * phi(x*/|x*|), and sampled targets land in
/// [1, s] without clamping whenever the feasibility inequalities below hold.
class MultiplicativeModel {
 public:
  MultiplicativeModel(RatingScale scale, double x_max, DirectionFunction phi,
                      double noise_half_width, int min_mask_size,
                      int max_mask_size)
      : scale_(scale), x_max_(x_max), phi_(std::move(phi)),
        delta_(noise_half_width), min_mask_(min_mask_size),
        max_mask_(max_mask_size) {
    if (!(x_max_ >= 1.0 && x_max_ <= scale_.max_rating()))
      throw std::invalid_argument("model: x_max must lie in [1, s]");
    if (!(delta_ >= 0.0 && delta_ < 1.0))
      throw std::invalid_argument("model: delta must lie in [0, 1)");
    if (min_mask_ < 1 || max_mask_ > scale_.item_count() ||
        min_mask_ > max_mask_)
      throw std::invalid_argument("model: invalid mask size range");
    // Never clamp: reject any parameterization that could leave [1, s].
    for (int m : {min_mask_, max_mask_}) {
      const double root = std::sqrt(static_cast<double>(m));
      const double low = root * phi_.lower * (1.0 - delta_);
      const double high = x_max_ * root * phi_.upper * (1.0 + delta_);
      if (low < 1.0)
        throw std::invalid_argument(
            "model: infeasible for mask size " + std::to_string(m) +
            ": sqrt(m)*phi_lo*(1-delta) = " + std::to_string(low) + " < 1");
      if (high > scale_.max_rating())
        throw std::invalid_argument(
            "model: infeasible for mask size " + std::to_string(m) +
            ": x_max*sqrt(m)*phi_hi*(1+delta) = " + std::to_string(high) +
            " > s");
    }
  }

  const RatingScale& scale() const { return scale_; }
  double x_max() const { return x_max_; }
  double noise_half_width() const { return delta_; }
  const DirectionFunction& phi() const { return phi_; }
  int min_mask_size() const { return min_mask_; }
  int max_mask_size() const { return max_mask_; }

  /// The regression function on an arbitrary nonzero vector (defined on all
  /// of R^d minus the origin; no rating-range validation).
  double eta_at(std::span<const double> masked_values) const {
    double sum_sq = 0.0;
    for (double v : masked_values) sum_sq += v * v;
    const double norm = std::sqrt(sum_sq);
    std::vector<double> unit(masked_values.size());
    for (std::size_t j = 0; j < unit.size(); ++j)
      unit[j] = masked_values[j] / norm;
    return norm * phi_.value(unit);
  }

  double true_eta(const QueryUser& query) const {
    return eta_at(query.ratings().entries());
  }

  /// Draws one user: raw ratings over all d items plus the target rating
  /// computed from the restriction to `mask`. Draw order is fixed: the d
  /// coordinates first, then the noise factor.
  std::pair<RatingVector, double> draw_user(const MaskSet& mask,
                                            Rng& rng) const {
    if (mask.size() < min_mask_ || mask.size() > max_mask_)
      throw std::invalid_argument(
          "draw_user: mask size " + std::to_string(mask.size()) +
          " outside the validated range [" + std::to_string(min_mask_) + ", " +
          std::to_string(max_mask_) + "]");
    std::vector<double> raw(static_cast<std::size_t>(scale_.item_count()));
    for (auto& v : raw) v = rng.uniform(1.0, x_max_);
    const double eps = rng.uniform(1.0 - delta_, 1.0 + delta_);

    std::vector<double> masked(raw.size(), 0.0);
    for (int j : mask.items()) masked[j - 1] = raw[j - 1];
    const double y = eta_at(masked) * eps;
    if (!(y >= 1.0 && y <= scale_.max_rating()))
      throw std::logic_error("draw_user: target rating left [1, s]");
    return {RatingVector::unchecked(std::move(raw)), y};
  }

  /// Empirical check of the structural constraint on the regression
  /// function: the sample mean of Y/|X*| over draws whose direction lies
  /// within `angle_tol` of the probe's direction (rejection sampling) is
  /// compared against phi at the probe direction.
  FOracleResult f_oracle_check(const QueryUser& probe, long samples,
                               double angle_tol, Rng& rng) const {
    if (samples < 10000)
      throw std::invalid_argument("f_oracle_check: need >= 10^4 samples");
    const auto& entries = probe.ratings().entries();
    std::vector<double> z0(entries.size());
    for (std::size_t j = 0; j < z0.size(); ++j)
      z0[j] = entries[j] / probe.norm();
    const double cos_min = std::cos(angle_tol);

    double sum = 0.0, sum_sq = 0.0;
    long accepted = 0;
    for (long t = 0; t < samples; ++t) {
      auto [raw, y] = draw_user(probe.mask(), rng);
      double dot = 0.0, norm_sq = 0.0;
      for (int j : probe.mask().items()) {
        const double v = raw.at_item(j);
        dot += v * z0[static_cast<std::size_t>(j - 1)];
        norm_sq += v * v;
      }
      const double norm = std::sqrt(norm_sq);
      if (dot / norm < cos_min) continue;
      const double value = y / norm;
      sum += value;
      sum_sq += value * value;
      ++accepted;
    }
    if (accepted < 100)
      throw std::runtime_error(
          "f_oracle_check: only " + std::to_string(accepted) +
          " accepted samples; angular tolerance too tight");
    const double mean = sum / static_cast<double>(accepted);
    const double var = (sum_sq - sum * mean) / static_cast<double>(accepted - 1);
    const double std_err =
        std::sqrt(std::max(var, 0.0) / static_cast<double>(accepted));
    return FOracleResult{mean, phi_.value(z0), std_err, accepted};
  }

 private:
  RatingScale scale_;
  double x_max_;
  DirectionFunction phi_;
  double delta_;
  int min_mask_;
  int max_mask_;
};

}  // namespace cosrec
