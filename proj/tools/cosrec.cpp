#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cosrec/cosrec.hpp"

namespace {

using namespace cosrec;

int cmd_predict(const std::string& matrix_path, const std::string& query_row,
                int k, const std::string& psi_name) {
  const ParsedMatrix parsed = read_matrix_csv(matrix_path);
  const std::vector<double> query_values =
      parse_query_row(query_row, parsed.item_count);

  std::vector<int> rated;
  for (int j = 1; j <= parsed.item_count; ++j)
    if (query_values[static_cast<std::size_t>(j - 1)] != 0.0) rated.push_back(j);
  if (rated.empty())
    throw DataError("query row has no rated item (all fields are NA)");

  // Files do not carry the scale; use the largest rating seen anywhere.
  double max_rating = parsed.max_rating();
  for (double v : query_values) max_rating = std::max(max_rating, v);
  const RatingScale scale(std::max(2.0, max_rating), parsed.item_count);

  const DatabaseSnapshot db = to_snapshot(parsed, scale);
  const QueryUser query(RatingVector::checked(query_values, scale),
                        MaskSet::checked(rated, parsed.item_count), scale);
  if (k > static_cast<int>(db.responders().size()))
    std::cerr << "warning: only " << db.responders().size()
              << " users rated the target item but k=" << k
              << "; the prediction is 0 by convention\n";

  const PenaltyMap psi =
      psi_name == "sqrt" ? PenaltyMap::square_root() : PenaltyMap::identity();
  std::printf("%.6g\n", estimate(query, db, k, psi));
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_path) {
  const int n = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
  const MultiplicativeModel model = cfg.build_model();
  const RatingScale scale = cfg.scale();

  // This is replication 0 of the Monte Carlo harness, exported verbatim.
  Rng mask_rng =
      Rng::stream(cfg.master_seed, 0, 0, stream_purpose::query_mask);
  const MaskSet query_mask = cfg.reveal.draw_initial_mask(cfg.d, mask_rng);
  SimState sim(scale, cfg.reveal, cfg.responders, cfg.master_seed, 0);
  for (int i = 1; i <= n; ++i) {
    Rng user_rng = Rng::stream(cfg.master_seed, 0,
                               static_cast<std::uint64_t>(i),
                               stream_purpose::user_draw);
    auto [raw, target] = model.draw_user(query_mask, user_rng);
    sim.step(std::move(raw), target);
  }

  std::vector<std::string> user_ids;
  user_ids.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) user_ids.push_back("u" + std::to_string(i));
  write_matrix_csv(out_path, sim.snapshot(), user_ids);
  return 0;
}

int cmd_converge(const ExperimentConfig& cfg, const std::string& out_path) {
  const MonteCarloConfig mc = cfg.monte_carlo();
  const ConvergenceResult result =
      convergence_study(mc, cfg.n_grid, cfg.schedule());
  write_results_csv(out_path, result);
  std::printf("slope=%s intercept=%s r2=%s\n",
              detail::format_double(result.fit.slope).c_str(),
              detail::format_double(result.fit.intercept).c_str(),
              detail::format_double(result.fit.r_squared).c_str());
  return 0;
}

int cmd_ratefit(const std::string& results_path) {
  const auto points = read_results_csv(results_path);
  const RateFit fit = rate_fit(points);
  std::printf("slope=%s intercept=%s r2=%s\n",
              detail::format_double(fit.slope).c_str(),
              detail::format_double(fit.intercept).c_str(),
              detail::format_double(fit.r_squared).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cosine-similarity k-NN recommendation laboratory"};
  app.require_subcommand(1);

  std::string matrix_path, query_row, psi_name = "identity";
  int k = 1;
  auto* predict = app.add_subcommand(
      "predict", "Predict a query user's target rating from a ratings matrix");
  predict->add_option("matrix", matrix_path, "ratings matrix CSV")->required();
  predict
      ->add_option("--query", query_row,
                   "comma-separated predictor ratings; NA marks unrated items")
      ->required();
  predict->add_option("--k", k, "number of neighbors")
      ->required()
      ->check(CLI::PositiveNumber);
  predict->add_option("--psi", psi_name, "penalty smoothing")
      ->check(CLI::IsMember({"identity", "sqrt"}));

  std::string config_path, out_path, results_path, metric_name;
  std::uint64_t seed_override = 0;

  auto* simulate = app.add_subcommand(
      "simulate", "Run the reveal simulator once and export the ratings matrix");
  simulate->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  simulate->add_option("--out", out_path, "output CSV path")->required();
  simulate->add_option("--seed", seed_override, "override the master seed");

  auto* converge = app.add_subcommand(
      "converge", "Monte Carlo convergence study over the configured n grid");
  converge->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  converge->add_option("--out", out_path, "results CSV path")->required();
  converge->add_option("--seed", seed_override, "override the master seed");
  converge->add_option("--metric", metric_name, "error metric")
      ->check(CLI::IsMember({"l1", "l2"}));

  auto* ratefit = app.add_subcommand(
      "ratefit", "Fit a log-log slope to a results CSV");
  ratefit->add_option("results", results_path, "results CSV from converge")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (predict->parsed()) return cmd_predict(matrix_path, query_row, k, psi_name);
    if (simulate->parsed() || converge->parsed()) {
      ExperimentConfig cfg = ExperimentConfig::load(config_path);
      if (simulate->count("--seed") || converge->count("--seed"))
        cfg.master_seed = seed_override;
      if (!metric_name.empty())
        cfg.metric = metric_name == "l2" ? ErrorMetric::l2 : ErrorMetric::l1;
      return simulate->parsed() ? cmd_simulate(cfg, out_path)
                                : cmd_converge(cfg, out_path);
    }
    return cmd_ratefit(results_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
