#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "cosrec/harness.hpp"

using namespace cosrec;

namespace {

MonteCarloConfig example1_config(int replications = 50,
                                 std::uint64_t seed = 1001) {
  const RatingScale scale(10.0, 5);
  MultiplicativeModel model(scale, 2.0,
                            DirectionFunction::affine_diagonal(0.6, 1.0, 5),
                            0.1, 5, 5);
  return MonteCarloConfig{std::move(model),
                          RevealProcess::all_at_once(),
                          ResponderProcess::all(),
                          replications,
                          seed};
}

MonteCarloConfig example2_config(int replications = 50,
                                 std::uint64_t seed = 2002) {
  const RatingScale scale(10.0, 8);
  MultiplicativeModel model(scale, 2.0,
                            DirectionFunction::affine_diagonal(0.6, 1.0, 8),
                            0.1, 4, 8);
  return MonteCarloConfig{std::move(model),
                          RevealProcess::incremental_4_plus_1(),
                          ResponderProcess::bernoulli_growth(0.5),
                          replications,
                          seed};
}

}  // namespace

TEST_CASE("neighbor count schedules") {
  const KSchedule cube_root(1.0, 1.0 / 3.0, Rounding::up);
  CHECK(cube_root(200) == 6);
  CHECK(cube_root(800) == 10);
  CHECK(cube_root(3200) == 15);

  const KSchedule two_fifths = KSchedule::rate_optimal(4);
  CHECK(two_fifths.gamma() == Catch::Approx(0.4));
  CHECK(two_fifths(200) == 9);
  CHECK(two_fifths(800) == 15);
  CHECK(two_fifths(3200) == 26);

  CHECK(KSchedule::rate_optimal(5).gamma() == Catch::Approx(1.0 / 3.0));

  // clamped to [1, n]
  const KSchedule big(50.0, 0.5, Rounding::nearest);
  CHECK(big(4) == 4);
  const KSchedule small(0.001, 0.5, Rounding::nearest);
  CHECK(small(100) == 1);
  // integer snap: 8^(1/3) is exactly 2 even if pow() lands a hair above
  CHECK(KSchedule(1.0, 1.0 / 3.0, Rounding::up)(8) == 2);

  CHECK_THROWS_AS(KSchedule(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(KSchedule(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(KSchedule(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("log-log rate fit") {
  SECTION("exact power law") {
    std::vector<std::pair<double, double>> points;
    for (double n : {100.0, 200.0, 400.0, 1600.0})
      points.emplace_back(n, std::pow(n, -0.2));
    const RateFit fit = rate_fit(points);
    CHECK(fit.slope == Catch::Approx(-0.2).margin(1e-10));
    CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-10));
  }

  SECTION("exact power law with a constant") {
    std::vector<std::pair<double, double>> points;
    for (double n : {200.0, 800.0, 3200.0})
      points.emplace_back(n, 3.7 * std::pow(n, -1.0 / 6.0));
    const RateFit fit = rate_fit(points);
    CHECK(fit.slope == Catch::Approx(-1.0 / 6.0).margin(1e-10));
    CHECK(fit.intercept == Catch::Approx(std::log(3.7)).margin(1e-10));
  }

  SECTION("two points interpolate exactly") {
    std::vector<std::pair<double, double>> points{{10.0, 0.5}, {100.0, 0.05}};
    const RateFit fit = rate_fit(points);
    CHECK(fit.slope == Catch::Approx(-1.0).margin(1e-12));
    CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("jittered power law stays within the injected-noise bound") {
    Rng rng(404);
    std::vector<std::pair<double, double>> points;
    const double jitter = 0.05;
    for (double n : {100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0}) {
      const double wiggle = std::exp(rng.uniform(-jitter, jitter));
      points.emplace_back(n, 2.0 * std::pow(n, -0.25) * wiggle);
    }
    const RateFit fit = rate_fit(points);
    // log-jitter of 0.05 over a log-n spread of log(32) bounds the slope error
    CHECK(std::abs(fit.slope + 0.25) <= 2.0 * jitter / std::log(32.0) * 2.0);
  }

  SECTION("invalid inputs") {
    const std::vector<std::pair<double, double>> lonely{{1.0, 1.0}};
    CHECK_THROWS_AS(rate_fit(lonely), std::invalid_argument);
    const std::vector<std::pair<double, double>> zero_err{{1.0, 1.0},
                                                          {2.0, 0.0}};
    CHECK_THROWS_AS(rate_fit(zero_err), std::invalid_argument);
    const std::vector<std::pair<double, double>> zero_n{{0.0, 1.0}, {2.0, 1.0}};
    CHECK_THROWS_AS(rate_fit(zero_n), std::invalid_argument);
  }
}

TEST_CASE("replication errors are reproducible and splittable") {
  const MonteCarloConfig config = example1_config(24);

  const auto full = replication_errors(config, 100, 4, 0, 24);
  const auto again = replication_errors(config, 100, 4, 0, 24);
  CHECK(full == again);

  // disjoint ranges concatenate into exactly the full run
  const auto head = replication_errors(config, 100, 4, 0, 10);
  const auto tail = replication_errors(config, 100, 4, 10, 14);
  std::vector<double> glued = head;
  glued.insert(glued.end(), tail.begin(), tail.end());
  CHECK(glued == full);

  // fixed-order aggregation of the concatenation matches the full-run stats
  const ErrorStats combined = aggregate_errors(glued);
  const ErrorStats stats = l1_error(config, 100, 4);
  CHECK(combined.mean == stats.mean);
  CHECK(combined.std_err == stats.std_err);
}

TEST_CASE("parallel execution changes nothing") {
  MonteCarloConfig sequential = example2_config(16);
  sequential.threads = 1;
  MonteCarloConfig parallel = example2_config(16);
  parallel.threads = 4;

  const ErrorStats a = l1_error(sequential, 150, 5);
  const ErrorStats b = l1_error(parallel, 150, 5);
  CHECK(a.mean == b.mean);
  CHECK(a.std_err == b.std_err);
}

TEST_CASE("an exact directional duplicate is predicted perfectly") {
  // noiseless labels and a database row proportional to the query: the
  // 1-NN estimate equals the regression function up to rounding
  const RatingScale scale(10.0, 3);
  const MultiplicativeModel model(scale, 4.0,
                                  DirectionFunction::affine_diagonal(0.7, 0.5, 3),
                                  0.0, 3, 3);
  Rng rng(55);
  std::vector<DbUser> users;
  std::vector<int> responders;
  for (int i = 1; i <= 20; ++i) {
    std::vector<double> raw(3);
    for (auto& v : raw) v = rng.uniform(1.0, 4.0);
    std::vector<double> masked = raw;
    users.push_back(DbUser{RatingVector::unchecked(raw), MaskSet::full(3),
                           model.eta_at(masked)});
    responders.push_back(i);
  }
  const std::vector<double> query_values{1.5, 2.5, 3.5};
  std::vector<double> duplicate = query_values;
  for (auto& v : duplicate) v *= 1.1;  // same direction, different norm
  users.push_back(DbUser{RatingVector::unchecked(duplicate), MaskSet::full(3),
                         model.eta_at(duplicate)});
  responders.push_back(21);

  const DatabaseSnapshot db(scale, users, responders);
  const QueryUser query(RatingVector::checked(query_values, scale),
                        MaskSet::full(3), scale);
  const double predicted = estimate(query, db, 1, PenaltyMap::identity());
  CHECK(std::abs(predicted - model.true_eta(query)) <= 1e-12);
}

TEST_CASE("infeasible configurations fail before any replication") {
  // model validated only for full masks, but the reveal process starts at 4
  const RatingScale scale(10.0, 8);
  MultiplicativeModel model(scale, 2.0,
                            DirectionFunction::affine_diagonal(0.6, 1.0, 8),
                            0.1, 8, 8);
  const MonteCarloConfig config{std::move(model),
                                RevealProcess::incremental_4_plus_1(),
                                ResponderProcess::all(), 10, 1};
  CHECK_THROWS_AS(l1_error(config, 50, 3), std::invalid_argument);
  CHECK_THROWS_AS(l1_error(example1_config(1), 50, 3), std::invalid_argument);
}

TEST_CASE("consistency at desk scale") {
  MonteCarloConfig config = example1_config(150, 31415);
  config.threads = 0;
  const ErrorStats small = l1_error(config, 200, 6);
  const ErrorStats large = l1_error(config, 3200, 15);
  CHECK(large.mean < small.mean);
}

TEST_CASE("averaging everyone is worse than the schedule at n=800") {
  MonteCarloConfig config = example1_config(150, 2717);
  config.threads = 0;
  // noiseless so the comparison isolates the bias of the global average
  const RatingScale scale(10.0, 5);
  config.model = MultiplicativeModel(
      scale, 2.0, DirectionFunction::affine_diagonal(0.6, 1.0, 5), 0.0, 5, 5);
  const ErrorStats schedule_k = l1_error(config, 800, 10);
  const ErrorStats global_avg = l1_error(config, 800, 800);
  CHECK(global_avg.mean > schedule_k.mean);
}

TEST_CASE("convergence study emits rows and a fit") {
  MonteCarloConfig config = example1_config(60, 6283);
  config.threads = 0;
  const std::vector<int> grid{100, 400};
  const ConvergenceResult result =
      convergence_study(config, grid, KSchedule(1.0, 1.0 / 3.0, Rounding::up));
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].n == 100);
  CHECK(result.rows[0].k == 5);
  CHECK(result.rows[1].n == 400);
  CHECK(result.rows[1].k == 8);
  CHECK(result.rows[0].replications == 60);
  // two points interpolate exactly
  CHECK(result.fit.r_squared == Catch::Approx(1.0).margin(1e-12));

  const std::vector<int> bad_grid{400, 100};
  CHECK_THROWS_AS(
      convergence_study(config, bad_grid, KSchedule(1.0, 0.5)),
      std::invalid_argument);
}

TEST_CASE("squared-error metric runs") {
  MonteCarloConfig config = example1_config(40, 99);
  config.metric = ErrorMetric::l2;
  const ErrorStats stats = l1_error(config, 100, 4);
  CHECK(stats.mean > 0.0);
  // squared errors of a sub-unit error are smaller than the errors themselves
  MonteCarloConfig l1 = example1_config(40, 99);
  const ErrorStats abs_stats = l1_error(l1, 100, 4);
  CHECK(stats.mean < abs_stats.mean);
}

TEST_CASE("fixed query mask reuses one mask across replications") {
  MonteCarloConfig config = example2_config(12, 808);
  config.fixed_query_mask = true;
  // all replications share the replication-0 mask, so results stay
  // deterministic and still vary across replications via the data
  const auto errs = replication_errors(config, 60, 3, 0, 12);
  CHECK(errs == replication_errors(config, 60, 3, 0, 12));
  MonteCarloConfig redrawn = example2_config(12, 808);
  const auto errs2 = replication_errors(redrawn, 60, 3, 0, 12);
  CHECK(errs[0] == errs2[0]);  // replication 0 coincides by construction
  CHECK(errs != errs2);
}
