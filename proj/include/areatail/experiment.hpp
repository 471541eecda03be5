#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "areatail/increment_model.hpp"

namespace areatail {

enum class ExperimentKind {
  area_tail,
  tau_tail,
  max_tail,
  joint_tail,
  sigma_law,
  bounds_grid,
  class_check,
  oracle_dp,
  headline,
};

const char* kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& name);

enum class EstimatorChoice { naive, is_mixture };

struct ExperimentConfig {
  std::string model_json;  // JSON model description
  ExperimentKind kind = ExperimentKind::area_tail;

  std::vector<double> x_grid;
  std::vector<double> y_grid;
  std::vector<std::uint64_t> n_steps_grid;  // horizons for bounds_grid

  std::uint64_t n = 0;
  std::uint64_t seed = 0;  // required: rare-event results must be replayable
  std::uint64_t max_steps = 10'000'000;
  unsigned threads = 1;

  EstimatorChoice estimator = EstimatorChoice::naive;
  double is_weight = 0.05;
  std::optional<double> is_threshold;  // absolute b; default sqrt(2ax)/4
  double is_threshold_scale = 0.25;    // b = scale * sqrt(2ax) when unset

  double window_epsilon = 0.5;
  double window_r = 1.0;
  std::vector<double> c_env_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  double envelope_eps = 0.1;
  std::vector<double> rho_grid = {1e-6, 1e-4, 1e-2};

  int k_max = 20;
  int dp_area_cap = 256;
  int dp_height_cap = 512;

  bool emit_svg = false;
  bool dump_excursions = false;
};

// Parses and validates a JSON config; throws std::invalid_argument with a
// line-qualified message on malformed input.
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

ExperimentConfig load_config(const std::string& path);

struct RunArtifacts {
  std::vector<std::string> files;  // paths written, estimates/predictions/...
  double wall_time_s = 0.0;
};

// Executes the configured experiment and writes estimates.csv,
// predictions.csv, combined.csv (when both sides exist), summary.json and
// the optional plot.svg under out_dir. Deterministic given the seed: rerun
// with an identical config writes byte-identical CSVs.
RunArtifacts run_experiment(const ExperimentConfig& config,
                            const std::string& out_dir);

struct ReportResult {
  std::string csv_path;
  int joined_rows = 0;
  int bound_violations = 0;
  bool empty_join = false;
};

// Joins estimate rows with prediction/bound rows by (kind, x), recomputes
// ratio columns and flags estimates that exceed a bound.
ReportResult report_files(const std::vector<std::string>& paths,
                          const std::string& out_csv);

}  // namespace areatail
