#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "cosrec/core.hpp"
#include "cosrec/estimator.hpp"
#include "cosrec/model.hpp"
#include "cosrec/reveal.hpp"
#include "cosrec/rng.hpp"

namespace cosrec {

enum class Rounding { nearest, up };

/// Neighbor-count schedule k(n) = c * n^gamma, rounded and clamped to
/// [1, n]. Values within 1e-9 of an integer snap to it before rounding so
/// the result does not depend on last-ulp behavior of pow().
class KSchedule {
 public:
  KSchedule(double c, double gamma, Rounding rounding = Rounding::nearest)
      : c_(c), gamma_(gamma), rounding_(rounding) {
    if (!(c > 0.0)) throw std::invalid_argument("KSchedule: c must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw std::invalid_argument("KSchedule: gamma must lie in (0, 1)");
  }

  /// gamma = 2 / (m + 1) where m is the query mask size; the rate-optimal
  /// exponent when neighbors are effectively ranked on an (m-1)-sphere.
  static KSchedule rate_optimal(int mask_size, double c = 1.0) {
    return KSchedule(c, 2.0 / (mask_size + 1), Rounding::up);
  }

  double c() const { return c_; }
  double gamma() const { return gamma_; }
  Rounding rounding() const { return rounding_; }

  int operator()(int n) const {
    const double v = c_ * std::pow(static_cast<double>(n), gamma_);
    const double nearest = std::round(v);
    double chosen = nearest;
    if (std::abs(v - nearest) >= 1e-9 && rounding_ == Rounding::up)
      chosen = std::ceil(v);
    auto k = static_cast<long long>(chosen);
    if (k < 1) k = 1;
    if (k > n) k = n;
    return static_cast<int>(k);
  }

 private:
  double c_;
  double gamma_;
  Rounding rounding_;
};

enum class ErrorMetric { l1, l2 };

/// Everything a Monte Carlo run needs besides the sample size n and the
/// neighbor count k. Replications derive independent streams from
/// master_seed, so results do not depend on thread count or scheduling.
struct MonteCarloConfig {
  MultiplicativeModel model;
  RevealProcess reveal;
  ResponderProcess responders;
  int replications = 200;
  std::uint64_t master_seed = 1;
  ErrorMetric metric = ErrorMetric::l1;
  bool fixed_query_mask = false;
  int threads = 1;  // 0 = hardware concurrency
  PenaltyMap psi = PenaltyMap::identity();
};

struct ErrorStats {
  double mean;
  double std_err;
  int replications;
};

struct StudyRow {
  int n;
  int k;
  int replications;
  double mean_abs_err;
  double std_err;
};

struct RateFit {
  double slope;
  double intercept;
  double r_squared;
};

struct ConvergenceResult {
  std::vector<StudyRow> rows;
  RateFit fit;
};

namespace detail {

inline void validate_run(const MonteCarloConfig& config, int n, int k) {
  if (n < 1) throw std::invalid_argument("harness: n must be >= 1");
  if (k < 1) throw std::invalid_argument("harness: k must be >= 1");
  const int d = config.model.scale().item_count();
  config.reveal.validate_for(d);
  const int smallest = config.reveal.initial_size(d);
  // Fail before any replication runs if the model was not validated for
  // the mask sizes this reveal process produces.
  for (int m : {smallest, d}) {
    if (m < config.model.min_mask_size() || m > config.model.max_mask_size())
      throw std::invalid_argument(
          "harness: model not validated for mask size " + std::to_string(m));
  }
}

/// One replication: fresh database of n users, fresh query, absolute (or
/// squared) estimation error against the closed-form regression function.
inline double replication_error(const MonteCarloConfig& config, int n, int k,
                                std::uint64_t rep) {
  const RatingScale& scale = config.model.scale();
  const int d = scale.item_count();

  const std::uint64_t mask_rep = config.fixed_query_mask ? 0 : rep;
  Rng mask_rng = Rng::stream(config.master_seed, mask_rep, 0,
                             stream_purpose::query_mask);
  const MaskSet query_mask = config.reveal.draw_initial_mask(d, mask_rng);

  SimState sim(scale, config.reveal, config.responders, config.master_seed,
               rep);
  for (int i = 1; i <= n; ++i) {
    Rng user_rng = Rng::stream(config.master_seed, rep,
                               static_cast<std::uint64_t>(i),
                               stream_purpose::user_draw);
    auto [raw, target] = config.model.draw_user(query_mask, user_rng);
    sim.step(std::move(raw), target);
  }

  Rng query_rng =
      Rng::stream(config.master_seed, rep, 0, stream_purpose::query_draw);
  auto [query_raw, query_target] = config.model.draw_user(query_mask, query_rng);
  (void)query_target;  // the error is measured against the regression function
  std::vector<double> query_values(static_cast<std::size_t>(d), 0.0);
  for (int j : query_mask.items())
    query_values[static_cast<std::size_t>(j - 1)] = query_raw.at_item(j);
  const QueryUser query(RatingVector::unchecked(std::move(query_values)),
                        query_mask, scale);

  const double predicted = estimate(query, sim.snapshot(), k, config.psi);
  const double truth = config.model.true_eta(query);
  const double abs_err = std::abs(predicted - truth);
  return config.metric == ErrorMetric::l1 ? abs_err : abs_err * abs_err;
}

}  // namespace detail

/// Per-replication errors for replication indices [first, first + count).
/// Entry r depends only on (master_seed, first + r), never on the range
/// bounds or the thread count, so disjoint ranges of the same configuration
/// concatenate into exactly the full run.
inline std::vector<double> replication_errors(const MonteCarloConfig& config,
                                              int n, int k, int first,
                                              int count) {
  detail::validate_run(config, n, k);
  if (count < 1)
    throw std::invalid_argument("replication_errors: count must be >= 1");
  std::vector<double> errors(static_cast<std::size_t>(count));

  int threads = config.threads;
  if (threads == 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));

  if (threads == 1) {
    for (int r = 0; r < count; ++r)
      errors[static_cast<std::size_t>(r)] = detail::replication_error(
          config, n, k, static_cast<std::uint64_t>(first + r));
    return errors;
  }

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int r = t; r < count; r += threads)
        errors[static_cast<std::size_t>(r)] = detail::replication_error(
            config, n, k, static_cast<std::uint64_t>(first + r));
    });
  }
  for (auto& worker : pool) worker.join();
  return errors;
}

/// Mean and standard error of per-replication errors, aggregated in fixed
/// replication order.
inline ErrorStats aggregate_errors(std::span<const double> errors) {
  const auto count = static_cast<int>(errors.size());
  double sum = 0.0;
  for (double e : errors) sum += e;
  const double mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (double e : errors) ss += (e - mean) * (e - mean);
  const double std_err =
      count > 1 ? std::sqrt(ss / static_cast<double>(count - 1) /
                            static_cast<double>(count))
                : 0.0;
  return ErrorStats{mean, std_err, count};
}

/// Monte Carlo estimate of the mean estimation error at fixed n.
inline ErrorStats l1_error(const MonteCarloConfig& config, int n, int k) {
  if (config.replications < 2)
    throw std::invalid_argument("l1_error: need >= 2 replications");
  const std::vector<double> errors =
      replication_errors(config, n, k, 0, config.replications);
  return aggregate_errors(errors);
}

/// Ordinary least squares line through (ln n, ln err).
inline RateFit rate_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2)
    throw std::invalid_argument("rate_fit: need at least 2 points");
  std::vector<double> xs(points.size()), ys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0.0))
      throw std::invalid_argument("rate_fit: n must be positive");
    if (!(points[i].second > 0.0))
      throw std::invalid_argument("rate_fit: err must be positive");
    xs[i] = std::log(points[i].first);
    ys[i] = std::log(points[i].second);
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(xs.size());
  mean_y /= static_cast<double>(ys.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  if (sxx == 0.0)
    throw std::invalid_argument("rate_fit: all n values identical");
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_x;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fitted = intercept + slope * xs[i];
    ss_res += (ys[i] - fitted) * (ys[i] - fitted);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  const double r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return RateFit{slope, intercept, r_squared};
}

/// Runs l1_error over the grid with k = schedule(n) and fits the log-log
/// slope of the mean errors.
inline ConvergenceResult convergence_study(const MonteCarloConfig& config,
                                           std::span<const int> n_grid,
                                           const KSchedule& schedule) {
  if (n_grid.size() < 2)
    throw std::invalid_argument("convergence_study: need >= 2 grid points");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1])
      throw std::invalid_argument(
          "convergence_study: n grid must be strictly increasing");

  ConvergenceResult result;
  std::vector<std::pair<double, double>> points;
  for (int n : n_grid) {
    const int k = schedule(n);
    const ErrorStats stats = l1_error(config, n, k);
    result.rows.push_back(
        StudyRow{n, k, stats.replications, stats.mean, stats.std_err});
    points.emplace_back(static_cast<double>(n), stats.mean);
  }
  result.fit = rate_fit(points);
  return result;
}

}  // namespace cosrec
