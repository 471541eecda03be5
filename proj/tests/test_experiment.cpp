#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "areatail/experiment.hpp"

using namespace areatail;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("areatail_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// minimal CSV field accessor: row index (with header at 0), column index
std::string cell(const std::string& csv, int row, int col) {
  std::istringstream in(csv);
  std::string line;
  for (int r = 0; r <= row; ++r) REQUIRE(std::getline(in, line));
  std::istringstream ls(line);
  std::string field;
  for (int c = 0; c <= col; ++c) REQUIRE(std::getline(ls, field, ','));
  return field;
}

constexpr const char* kDpConfig = R"({
  "model": {"family": "lattice", "params": {"p": 0.3}},
  "kind": "oracle_dp",
  "x_grid": [0, 1, 3, 4],
  "seed": 1
})";

}  // namespace

TEST_CASE("config JSON round trip is the identity") {
  const ExperimentConfig c = config_from_json_text(kDpConfig);
  const std::string j1 = config_to_json_text(c);
  const std::string j2 = config_to_json_text(config_from_json_text(j1));
  CHECK(j1 == j2);
}

TEST_CASE("config validation errors") {
  CHECK_THROWS_AS(config_from_json_text("{ nope"), std::invalid_argument);
  // missing seed
  CHECK_THROWS_AS(config_from_json_text(
                      R"({"model":{"family":"lattice","params":{"p":0.3}},
                          "kind":"oracle_dp","x_grid":[1]})"),
                  std::invalid_argument);
  // unknown key
  CHECK_THROWS_AS(config_from_json_text(
                      R"({"model":{"family":"lattice","params":{"p":0.3}},
                          "kind":"oracle_dp","x_grid":[1],"seed":1,"frob":2})"),
                  std::invalid_argument);
  // non-increasing grid
  CHECK_THROWS_AS(config_from_json_text(
                      R"({"model":{"family":"lattice","params":{"p":0.3}},
                          "kind":"oracle_dp","x_grid":[2,1],"seed":1})"),
                  std::invalid_argument);
  // parse errors carry a line number
  try {
    config_from_json_text("{\n\"kind\": oops\n}");
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("oracle_dp run writes the exact values") {
  const std::string out = tmp_dir("dp");
  const ExperimentConfig cfg = config_from_json_text(kDpConfig);
  run_experiment(cfg, out);
  const std::string csv = slurp(out + "/estimates.csv");
  // rows sorted by x: 0, 1, 3, 4
  CHECK(std::stod(cell(csv, 1, 4)) == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(std::stod(cell(csv, 2, 4)) == doctest::Approx(0.09).epsilon(1e-10));
  CHECK(std::stod(cell(csv, 3, 4)) == doctest::Approx(0.09).epsilon(1e-10));
  CHECK(std::stod(cell(csv, 4, 4)) == doctest::Approx(0.0459).epsilon(1e-10));
  CHECK(cell(csv, 1, 1) == "dp_exact");
  CHECK(cell(csv, 1, 5) == "0");  // stderr of the exact method

  // byte-identical rerun
  const std::string out2 = tmp_dir("dp2");
  run_experiment(cfg, out2);
  CHECK(slurp(out + "/estimates.csv") == slurp(out2 + "/estimates.csv"));
  CHECK(slurp(out + "/predictions.csv") == slurp(out2 + "/predictions.csv"));
}

TEST_CASE("degenerate area_tail run gives all-zero rows") {
  const std::string out = tmp_dir("degen");
  const ExperimentConfig cfg = config_from_json_text(R"({
    "model": {"family": "degenerate", "params": {}, "drift_a": 1.0},
    "kind": "area_tail", "x_grid": [1, 10], "n": 5000, "seed": 4
  })");
  run_experiment(cfg, out);
  const std::string csv = slurp(out + "/estimates.csv");
  CHECK(std::stod(cell(csv, 1, 4)) == 0.0);
  CHECK(std::stod(cell(csv, 2, 4)) == 0.0);
}

TEST_CASE("headline run emits prediction, ratio and svg") {
  const std::string out = tmp_dir("headline");
  ExperimentConfig cfg = config_from_json_text(R"({
    "model": {"family": "pareto", "params": {"alpha": 3.0}, "drift_a": 1.0},
    "kind": "headline", "x_grid": [5, 20], "n": 40000, "seed": 2,
    "threads": 2, "svg": true
  })");
  const RunArtifacts art = run_experiment(cfg, out);
  CHECK(fs::exists(out + "/combined.csv"));
  CHECK(fs::exists(out + "/plot.svg"));
  CHECK(slurp(out + "/plot.svg").rfind("<svg", 0) == 0);
  const std::string comb = slurp(out + "/combined.csv");
  // ratio column equals p_hat / prediction, bit-exact through the CSV
  const double p_hat = std::stod(cell(comb, 1, 4));
  const double pred = std::stod(cell(comb, 1, 7));
  const double ratio = std::stod(cell(comb, 1, 8));
  CHECK(ratio == p_hat / pred);
  CHECK(art.wall_time_s > 0.0);
}

TEST_CASE("thread count does not change the written rows") {
  const char* base = R"({
    "model": {"family": "pareto", "params": {"alpha": 3.0}, "drift_a": 1.0},
    "kind": "area_tail", "x_grid": [2, 10], "n": 30000, "seed": 77,
    "threads": %u
  })";
  char buf[512];
  std::snprintf(buf, sizeof buf, base, 1u);
  const std::string out1 = tmp_dir("thr1");
  run_experiment(config_from_json_text(buf), out1);
  std::snprintf(buf, sizeof buf, base, 4u);
  const std::string out4 = tmp_dir("thr4");
  run_experiment(config_from_json_text(buf), out4);
  CHECK(slurp(out1 + "/estimates.csv") == slurp(out4 + "/estimates.csv"));
}

TEST_CASE("report joins estimates with predictions") {
  const std::string out = tmp_dir("rep");
  const ExperimentConfig cfg = config_from_json_text(R"({
    "model": {"family": "pareto", "params": {"alpha": 3.0}, "drift_a": 1.0},
    "kind": "area_tail", "x_grid": [5, 20], "n": 40000, "seed": 3
  })");
  run_experiment(cfg, out);
  const ReportResult r = report_files(
      {out + "/estimates.csv", out + "/predictions.csv"}, out + "/report.csv");
  CHECK(r.joined_rows == 2);
  CHECK(r.bound_violations == 0);
  CHECK_FALSE(r.empty_join);
  // the recomputed ratio matches the combined file bit-for-bit
  const std::string comb = slurp(out + "/combined.csv");
  const std::string rep = slurp(out + "/report.csv");
  CHECK(cell(rep, 1, 8) == cell(comb, 1, 8));
}

TEST_CASE("report flags synthetic bound violations and empty joins") {
  const std::string out = tmp_dir("repflag");
  {
    std::ofstream est(out + "/estimates.csv");
    est << "kind,method,x,y,p_hat,stderr,ci_lo,ci_hi,n,truncated_count\n";
    est << "bounds,naive,10,50,0.5,0.01,0.48,0.52,1000,0\n";
  }
  {
    std::ofstream pre(out + "/predictions.csv");
    pre << "kind,formula_id,x,y,value,params\n";
    pre << "bounds,lemma31,10,50,0.25,\"\"\n";
  }
  const ReportResult r = report_files(
      {out + "/estimates.csv", out + "/predictions.csv"}, out + "/report.csv");
  CHECK(r.joined_rows == 1);
  CHECK(r.bound_violations == 1);

  {
    std::ofstream pre(out + "/disjoint.csv");
    pre << "kind,formula_id,x,y,value,params\n";
    pre << "bounds,lemma31,999,50,0.25,\"\"\n";
  }
  const ReportResult r2 = report_files(
      {out + "/estimates.csv", out + "/disjoint.csv"}, out + "/report2.csv");
  CHECK(r2.empty_join);
}

TEST_CASE("IS on lattice surfaces as a runtime error") {
  const ExperimentConfig cfg = config_from_json_text(R"({
    "model": {"family": "lattice", "params": {"p": 0.3}},
    "kind": "area_tail", "x_grid": [1], "n": 100, "seed": 5,
    "estimator": "is"
  })");
  CHECK_THROWS(run_experiment(cfg, tmp_dir("islat")));
}

#ifdef AREATAIL_CLI_PATH
TEST_CASE("CLI exit codes") {
  const std::string dir = tmp_dir("cli");
  const std::string good = dir + "/good.json";
  {
    std::ofstream out(good);
    out << kDpConfig;
  }
  const std::string bad = dir + "/bad.json";
  {
    std::ofstream out(bad);
    out << "{\"kind\": \"oracle_dp\"}";  // missing model/seed
  }
  const std::string cli = AREATAIL_CLI_PATH;
  auto run_cmd = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(run_cmd(cli + " validate-config --config " + good) == 0);
  CHECK(run_cmd(cli + " validate-config --config " + bad) == 2);
  CHECK(run_cmd(cli + " run --config " + good + " --out " + dir + "/out") == 0);
  CHECK(run_cmd(cli + " report " + dir + "/out/estimates.csv " + dir +
                "/out/predictions.csv --out " + dir + "/rep.csv") == 0);
}
#endif

TEST_CASE("excursion dump rows behind the config flag") {
  const std::string out = tmp_dir("dump");
  const ExperimentConfig cfg = config_from_json_text(R"({
    "model": {"family": "lattice", "params": {"p": 0.3}},
    "kind": "area_tail", "x_grid": [1], "n": 25, "seed": 3,
    "dump_excursions": true
  })");
  run_experiment(cfg, out);
  const std::string dump = slurp(out + "/excursions.csv");
  CHECK(dump.rfind("stream_index,tau,area,max,truncated", 0) == 0);
  int lines = 0;
  for (char c : dump)
    if (c == '\n') ++lines;
  CHECK(lines == 26);  // header + one row per excursion
}

TEST_CASE("integer config fields reject negatives") {
  for (const char* field : {"\"threads\": -2", "\"n\": -5", "\"seed\": -1"}) {
    const std::string text =
        std::string(R"({"model":{"family":"lattice","params":{"p":0.3}},)") +
        R"("kind":"area_tail","x_grid":[1],"n":10,"seed":1,)" + field + "}";
    CHECK_THROWS_AS(config_from_json_text(text), std::invalid_argument);
  }
}
