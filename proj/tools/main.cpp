#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "areatail/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;
constexpr int kExitBoundViolation = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"excursion-area tail experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  unsigned threads = 0;
  bool svg = false;

  CLI::App* run = app.add_subcommand("run", "execute a configured experiment");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads (0 = config value)");
  run->add_flag("--svg", svg, "also write a ratio-vs-x SVG plot");
  bool dump = false;
  run->add_flag("--dump-excursions", dump,
                "also write per-excursion rows (tau, area, max, truncated)");

  std::vector<std::string> report_paths;
  std::string report_out = "report.csv";
  CLI::App* report =
      app.add_subcommand("report", "join estimate and prediction CSV files");
  report->add_option("files", report_paths, "result CSV files")->required();
  report->add_option("--out", report_out, "joined CSV path");

  CLI::App* validate =
      app.add_subcommand("validate-config", "parse and validate a config");
  validate->add_option("--config", config_path, "JSON experiment config")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) {
      try {
        areatail::ExperimentConfig cfg = areatail::load_config(config_path);
        std::cout << areatail::config_to_json_text(cfg) << "\n";
        return kExitOk;
      } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
      }
    }
    if (app.got_subcommand(run)) {
      areatail::ExperimentConfig cfg;
      try {
        cfg = areatail::load_config(config_path);
      } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
      }
      if (threads > 0) cfg.threads = threads;
      if (svg) cfg.emit_svg = true;
      if (dump) cfg.dump_excursions = true;
      const areatail::RunArtifacts art = areatail::run_experiment(cfg, out_dir);
      for (const auto& f : art.files) std::cout << f << "\n";
      std::cout << "wall_time_s " << art.wall_time_s << "\n";
      return kExitOk;
    }
    if (app.got_subcommand(report)) {
      const areatail::ReportResult r =
          areatail::report_files(report_paths, report_out);
      std::cout << r.csv_path << "\n";
      std::cout << "joined_rows " << r.joined_rows << "\n";
      if (r.empty_join)
        std::cerr << "warning: empty join (disjoint grids?)\n";
      if (r.bound_violations > 0) {
        std::cerr << r.bound_violations << " bound violation(s) flagged\n";
        return kExitBoundViolation;
      }
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}
