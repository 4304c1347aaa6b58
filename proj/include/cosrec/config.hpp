#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosrec/core.hpp"
#include "cosrec/harness.hpp"
#include "cosrec/model.hpp"
#include "cosrec/reveal.hpp"

namespace cosrec {

/// Experiment description loaded from a JSON file. See configs/ for worked
/// examples. Everything is validated (including model feasibility for all
/// mask sizes the reveal process can produce) before any computation runs.
struct ExperimentConfig {
  double s = 10.0;
  int d = 5;
  double x_max = 2.0;
  double a = 0.6;
  double b = 1.0;
  double delta = 0.1;
  RevealProcess reveal = RevealProcess::all_at_once();
  ResponderProcess responders = ResponderProcess::all();
  std::vector<int> n_grid;
  double schedule_c = 1.0;
  double schedule_gamma = 0.5;
  Rounding schedule_rounding = Rounding::nearest;
  int replications = 200;
  std::uint64_t master_seed = 1;
  ErrorMetric metric = ErrorMetric::l1;
  bool fixed_query_mask = false;
  int threads = 0;

  RatingScale scale() const { return RatingScale(s, d); }

  MultiplicativeModel build_model() const {
    return MultiplicativeModel(scale(), x_max,
                               DirectionFunction::affine_diagonal(a, b, d),
                               delta, reveal.initial_size(d), d);
  }

  MonteCarloConfig monte_carlo() const {
    return MonteCarloConfig{build_model(), reveal, responders, replications,
                            master_seed, metric, fixed_query_mask, threads};
  }

  KSchedule schedule() const {
    return KSchedule(schedule_c, schedule_gamma, schedule_rounding);
  }

  static ExperimentConfig load(const std::string& path);
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& parent,
                                     const std::string& section,
                                     const std::string& key) {
  if (!parent.contains(key))
    throw ConfigError("config: missing field " +
                      (section.empty() ? key : section + "." + key));
  return parent.at(key);
}

inline double require_number(const nlohmann::json& parent,
                             const std::string& section,
                             const std::string& key) {
  const auto& value = require(parent, section, key);
  if (!value.is_number())
    throw ConfigError("config: " + section + "." + key + " must be a number");
  return value.get<double>();
}

inline int require_int(const nlohmann::json& parent,
                       const std::string& section, const std::string& key) {
  const auto& value = require(parent, section, key);
  if (!value.is_number_integer())
    throw ConfigError("config: " + section + "." + key +
                      " must be an integer");
  return value.get<int>();
}

inline std::string require_string(const nlohmann::json& parent,
                                  const std::string& section,
                                  const std::string& key) {
  const auto& value = require(parent, section, key);
  if (!value.is_string())
    throw ConfigError("config: " + section + "." + key + " must be a string");
  return value.get<std::string>();
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }

  ExperimentConfig cfg;
  const auto& scale = detail::require(root, "", "scale");
  cfg.s = detail::require_number(scale, "scale", "s");
  cfg.d = detail::require_int(scale, "scale", "d");
  if (!(cfg.s > 1.0)) throw ConfigError("config: scale.s must be > 1");
  if (cfg.d < 1) throw ConfigError("config: scale.d must be >= 1");

  const auto& model = detail::require(root, "", "model");
  cfg.x_max = detail::require_number(model, "model", "x_max");
  cfg.a = detail::require_number(model, "model", "a");
  cfg.b = detail::require_number(model, "model", "b");
  cfg.delta = detail::require_number(model, "model", "delta");

  const auto& reveal = detail::require(root, "", "reveal");
  const std::string reveal_kind = detail::require_string(reveal, "reveal", "kind");
  if (reveal_kind == "all_at_once") {
    cfg.reveal = RevealProcess::all_at_once();
  } else if (reveal_kind == "incremental_4_plus_1") {
    cfg.reveal = RevealProcess::incremental_4_plus_1();
  } else if (reveal_kind == "uniform_batch") {
    cfg.reveal = RevealProcess::uniform_batch(
        detail::require_int(reveal, "reveal", "b0"),
        detail::require_int(reveal, "reveal", "b"));
  } else {
    throw ConfigError("config: reveal.kind must be all_at_once, "
                      "incremental_4_plus_1 or uniform_batch");
  }

  const auto& responder = detail::require(root, "", "responder");
  const std::string responder_kind =
      detail::require_string(responder, "responder", "kind");
  if (responder_kind == "all") {
    cfg.responders = ResponderProcess::all();
  } else if (responder_kind == "bernoulli_growth") {
    cfg.responders = ResponderProcess::bernoulli_growth(
        detail::require_number(responder, "responder", "p"));
  } else {
    throw ConfigError(
        "config: responder.kind must be all or bernoulli_growth");
  }

  const auto& study = detail::require(root, "", "study");
  const auto& grid = detail::require(study, "study", "n_grid");
  if (!grid.is_array() || grid.empty())
    throw ConfigError("config: study.n_grid must be a nonempty array");
  for (const auto& v : grid) {
    if (!v.is_number_integer() || v.get<int>() < 1)
      throw ConfigError("config: study.n_grid entries must be integers >= 1");
    cfg.n_grid.push_back(v.get<int>());
  }
  for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
    if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
      throw ConfigError("config: study.n_grid must be strictly increasing");

  const auto& schedule = detail::require(study, "study", "schedule");
  cfg.schedule_c = detail::require_number(schedule, "study.schedule", "c");
  cfg.schedule_gamma =
      detail::require_number(schedule, "study.schedule", "gamma");
  if (schedule.contains("rounding")) {
    const std::string rounding =
        detail::require_string(schedule, "study.schedule", "rounding");
    if (rounding == "nearest")
      cfg.schedule_rounding = Rounding::nearest;
    else if (rounding == "up")
      cfg.schedule_rounding = Rounding::up;
    else
      throw ConfigError("config: study.schedule.rounding must be nearest or up");
  }
  cfg.replications = detail::require_int(study, "study", "replications");
  if (cfg.replications < 2)
    throw ConfigError("config: study.replications must be >= 2");
  const auto& seed = detail::require(study, "study", "master_seed");
  if (!seed.is_number_integer() || seed.get<long long>() < 0)
    throw ConfigError("config: study.master_seed must be an integer >= 0");
  cfg.master_seed = seed.get<std::uint64_t>();
  if (study.contains("metric")) {
    const std::string metric = detail::require_string(study, "study", "metric");
    if (metric == "l1")
      cfg.metric = ErrorMetric::l1;
    else if (metric == "l2")
      cfg.metric = ErrorMetric::l2;
    else
      throw ConfigError("config: study.metric must be l1 or l2");
  }
  if (study.contains("fixed_query_mask")) {
    const auto& fixed = study.at("fixed_query_mask");
    if (!fixed.is_boolean())
      throw ConfigError("config: study.fixed_query_mask must be a boolean");
    cfg.fixed_query_mask = fixed.get<bool>();
  }
  if (study.contains("threads")) {
    cfg.threads = detail::require_int(study, "study", "threads");
    if (cfg.threads < 0)
      throw ConfigError("config: study.threads must be >= 0");
  }

  // Surface schedule/reveal/model problems now, with config context.
  try {
    (void)cfg.schedule();
    cfg.reveal.validate_for(cfg.d);
    (void)cfg.build_model();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return cfg;
}

}  // namespace cosrec
