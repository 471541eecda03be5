#include "areatail/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "areatail/asymptotics.hpp"
#include "areatail/class_analysis.hpp"
#include "areatail/estimators.hpp"
#include "areatail/excursion.hpp"
#include "areatail/lattice_dp.hpp"

namespace areatail {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

struct EstimateRow {
  std::string kind;
  std::string method;
  double x = 0.0;
  std::optional<double> y;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t n = 0;
  std::uint64_t truncated = 0;
};

struct PredictionRow {
  std::string kind;
  std::string formula_id;
  double x = 0.0;
  std::optional<double> y;
  double value = 0.0;
  std::string params;
};

struct CombinedRow {
  std::string kind;
  double x = 0.0;
  std::optional<double> y;
  std::string method;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  std::string formula_id;
  double prediction = 0.0;
  double ratio = 0.0;
  std::optional<double> log_ratio;
  bool bound_violated = false;
};

struct RowBuffers {
  std::vector<EstimateRow> estimates;
  std::vector<PredictionRow> predictions;
  std::vector<CombinedRow> combined;
};

EstimateRow to_row(const std::string& kind, const TailEstimate& e, double x,
                   std::optional<double> y = std::nullopt) {
  EstimateRow r;
  r.kind = kind;
  r.method = method_name(e.method);
  r.x = x;
  r.y = y;
  r.p_hat = e.p_hat;
  r.stderr_ = e.stderr_;
  r.ci_lo = e.ci95.lo;
  r.ci_hi = e.ci95.hi;
  r.n = e.n;
  r.truncated = e.truncated_count;
  return r;
}

void sort_rows(RowBuffers& rows) {
  auto key = [](const auto& r) {
    return std::make_tuple(r.kind, r.x, r.y.value_or(-1.0));
  };
  std::stable_sort(rows.estimates.begin(), rows.estimates.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
  std::stable_sort(rows.predictions.begin(), rows.predictions.end(),
                   [&](const auto& a, const auto& b) {
                     return std::make_tuple(a.kind, a.x, a.y.value_or(-1.0),
                                            a.formula_id) <
                            std::make_tuple(b.kind, b.x, b.y.value_or(-1.0),
                                            b.formula_id);
                   });
  std::stable_sort(rows.combined.begin(), rows.combined.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string opt_fmt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

std::string estimates_csv(const std::vector<EstimateRow>& rows) {
  std::ostringstream s;
  s << "kind,method,x,y,p_hat,stderr,ci_lo,ci_hi,n,truncated_count\n";
  for (const auto& r : rows) {
    s << r.kind << ',' << r.method << ',' << fmt(r.x) << ',' << opt_fmt(r.y)
      << ',' << fmt(r.p_hat) << ',' << fmt(r.stderr_) << ',' << fmt(r.ci_lo)
      << ',' << fmt(r.ci_hi) << ',' << fmt_u64(r.n) << ','
      << fmt_u64(r.truncated) << '\n';
  }
  return s.str();
}

std::string predictions_csv(const std::vector<PredictionRow>& rows) {
  std::ostringstream s;
  s << "kind,formula_id,x,y,value,params\n";
  for (const auto& r : rows) {
    s << r.kind << ',' << r.formula_id << ',' << fmt(r.x) << ','
      << opt_fmt(r.y) << ',' << fmt(r.value) << ",\"" << r.params << "\"\n";
  }
  return s.str();
}

std::string combined_csv(const std::vector<CombinedRow>& rows) {
  std::ostringstream s;
  s << "kind,x,y,method,p_hat,stderr,formula_id,prediction,ratio,log_ratio,"
       "bound_violated\n";
  for (const auto& r : rows) {
    s << r.kind << ',' << fmt(r.x) << ',' << opt_fmt(r.y) << ',' << r.method
      << ',' << fmt(r.p_hat) << ',' << fmt(r.stderr_) << ',' << r.formula_id
      << ',' << fmt(r.prediction) << ',' << fmt(r.ratio) << ','
      << opt_fmt(r.log_ratio) << ',' << (r.bound_violated ? "1" : "0") << '\n';
  }
  return s.str();
}

// minimal hermetic line plot: ratio against log10 x with a unit reference
std::string ratio_svg(const std::vector<std::pair<double, double>>& series) {
  const int w = 640;
  const int h = 400;
  const int ml = 60;
  const int mb = 40;
  const int mt = 20;
  const int mr = 20;
  double x_lo = 1e300;
  double x_hi = -1e300;
  double y_hi = 1.0;
  for (const auto& [x, r] : series) {
    x_lo = std::min(x_lo, std::log10(x));
    x_hi = std::max(x_hi, std::log10(x));
    y_hi = std::max(y_hi, r);
  }
  if (series.size() < 2) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  y_hi = std::max(1.2, y_hi * 1.1);
  auto px = [&](double lx) {
    return ml + (lx - x_lo) / std::max(1e-12, x_hi - x_lo) * (w - ml - mr);
  };
  auto py = [&](double r) { return h - mb - r / y_hi * (h - mb - mt); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
    << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
    << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
    << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << fmt(py(1.0)) << "\" x2=\""
    << w - mr << "\" y2=\"" << fmt(py(1.0))
    << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  s << "<text x=\"" << ml - 50 << "\" y=\"" << fmt(py(1.0) + 4)
    << "\" font-size=\"12\">1.0</text>\n";
  s << "<text x=\"" << (w / 2 - 40) << "\" y=\"" << h - 8
    << "\" font-size=\"12\">log10(x)</text>\n";
  s << "<text x=\"8\" y=\"" << (h / 2)
    << "\" font-size=\"12\" transform=\"rotate(-90 14," << (h / 2)
    << ")\">ratio</text>\n";
  s << "<polyline fill=\"none\" stroke=\"#0057b7\" stroke-width=\"2\" points=\"";
  for (const auto& [x, r] : series)
    s << fmt(px(std::log10(x))) << ',' << fmt(py(r)) << ' ';
  s << "\"/>\n";
  for (const auto& [x, r] : series) {
    s << "<circle cx=\"" << fmt(px(std::log10(x))) << "\" cy=\""
      << fmt(py(r)) << "\" r=\"3\" fill=\"#0057b7\"/>\n";
    s << "<text x=\"" << fmt(px(std::log10(x)) - 14) << "\" y=\"" << h - mb + 16
      << "\" font-size=\"10\">" << fmt(x) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

double is_threshold_for(const ExperimentConfig& cfg, const IncrementModel& m,
                        double x) {
  if (cfg.is_threshold) return *cfg.is_threshold;
  return cfg.is_threshold_scale * jump_scale(m, x);
}

}  // namespace

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::area_tail: return "area_tail";
    case ExperimentKind::tau_tail: return "tau_tail";
    case ExperimentKind::max_tail: return "max_tail";
    case ExperimentKind::joint_tail: return "joint_tail";
    case ExperimentKind::sigma_law: return "sigma_law";
    case ExperimentKind::bounds_grid: return "bounds_grid";
    case ExperimentKind::class_check: return "class_check";
    case ExperimentKind::oracle_dp: return "oracle_dp";
    case ExperimentKind::headline: return "headline";
  }
  return "unknown";
}

ExperimentKind kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ExperimentKind::headline); ++k) {
    const auto kk = static_cast<ExperimentKind>(k);
    if (name == kind_name(kk)) return kk;
  }
  throw std::invalid_argument("config: unknown experiment kind '" + name + "'");
}

namespace {

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

const std::vector<std::string> kKnownKeys = {
    "model",     "kind",        "x_grid",       "y_grid",
    "n",         "seed",        "max_steps",    "threads",
    "estimator", "is",          "window",       "envelope",
    "rho_grid",  "k_max",       "dp",           "svg",
    "dump_excursions", "n_steps_grid"};

}  // namespace

namespace {

ExperimentConfig config_from_json_object(const json& j);

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: parse error at line " +
                                std::to_string(line_of_offset(text, e.byte)) +
                                ": " + e.what());
  }
  try {
    return config_from_json_object(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

namespace {

std::uint64_t checked_u64(const json& v, const char* key) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw std::invalid_argument(std::string("config: ") + key +
                                " must be an integer");
  if (v.is_number_integer() && v.get<std::int64_t>() < 0)
    throw std::invalid_argument(std::string("config: ") + key +
                                " must be nonnegative");
  return v.get<std::uint64_t>();
}

ExperimentConfig config_from_json_object(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) ==
        kKnownKeys.end())
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }

  ExperimentConfig c;
  if (!j.contains("model")) throw std::invalid_argument("config: missing model");
  c.model_json = j.at("model").dump();
  // construct once now so malformed models are rejected at validation time
  (void)model_from_json_text(c.model_json);
  if (!j.contains("kind")) throw std::invalid_argument("config: missing kind");
  c.kind = kind_from_name(j.at("kind").get<std::string>());
  if (!j.contains("seed"))
    throw std::invalid_argument(
        "config: missing seed (runs must be replayable; none is generated)");
  c.seed = checked_u64(j.at("seed"), "seed");

  if (j.contains("x_grid")) c.x_grid = j.at("x_grid").get<std::vector<double>>();
  if (j.contains("y_grid")) c.y_grid = j.at("y_grid").get<std::vector<double>>();
  if (j.contains("n_steps_grid"))
    for (const auto& v : j.at("n_steps_grid"))
      c.n_steps_grid.push_back(checked_u64(v, "n_steps_grid"));
  if (j.contains("n")) c.n = checked_u64(j.at("n"), "n");
  if (j.contains("max_steps"))
    c.max_steps = checked_u64(j.at("max_steps"), "max_steps");
  if (j.contains("threads")) {
    const std::uint64_t t = checked_u64(j.at("threads"), "threads");
    if (t > 1024) throw std::invalid_argument("config: threads must be <= 1024");
    c.threads = static_cast<unsigned>(t);
  }
  if (j.contains("estimator")) {
    const std::string e = j.at("estimator").get<std::string>();
    if (e == "naive")
      c.estimator = EstimatorChoice::naive;
    else if (e == "is")
      c.estimator = EstimatorChoice::is_mixture;
    else
      throw std::invalid_argument("config: estimator must be naive or is");
  }
  if (j.contains("is")) {
    const auto& is = j.at("is");
    if (is.contains("weight")) c.is_weight = is.at("weight").get<double>();
    if (is.contains("threshold"))
      c.is_threshold = is.at("threshold").get<double>();
    if (is.contains("threshold_scale"))
      c.is_threshold_scale = is.at("threshold_scale").get<double>();
  }
  if (j.contains("window")) {
    const auto& w = j.at("window");
    if (w.contains("epsilon")) c.window_epsilon = w.at("epsilon").get<double>();
    if (w.contains("R")) c.window_r = w.at("R").get<double>();
  }
  if (j.contains("envelope")) {
    const auto& e = j.at("envelope");
    if (e.contains("c_env_grid"))
      c.c_env_grid = e.at("c_env_grid").get<std::vector<double>>();
    if (e.contains("eps")) c.envelope_eps = e.at("eps").get<double>();
  }
  if (j.contains("rho_grid"))
    c.rho_grid = j.at("rho_grid").get<std::vector<double>>();
  if (j.contains("k_max")) c.k_max = j.at("k_max").get<int>();
  if (j.contains("dp")) {
    const auto& dp = j.at("dp");
    if (dp.contains("area_cap")) c.dp_area_cap = dp.at("area_cap").get<int>();
    if (dp.contains("height_cap"))
      c.dp_height_cap = dp.at("height_cap").get<int>();
  }
  if (j.contains("svg")) c.emit_svg = j.at("svg").get<bool>();
  if (j.contains("dump_excursions"))
    c.dump_excursions = j.at("dump_excursions").get<bool>();

  // structural validation
  const auto check_grid = [](const std::vector<double>& g, const char* name) {
    for (std::size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1]))
        throw std::invalid_argument(std::string("config: ") + name +
                                    " must be strictly increasing");
  };
  check_grid(c.x_grid, "x_grid");
  check_grid(c.y_grid, "y_grid");
  const bool needs_mc = c.kind != ExperimentKind::oracle_dp &&
                        c.kind != ExperimentKind::class_check;
  if (needs_mc && c.n < 1)
    throw std::invalid_argument("config: n must be >= 1 for simulation kinds");
  if (c.max_steps < 1) throw std::invalid_argument("config: max_steps >= 1");
  const bool needs_x = c.kind != ExperimentKind::sigma_law &&
                       c.kind != ExperimentKind::max_tail;
  if (needs_x && c.x_grid.empty())
    throw std::invalid_argument("config: x_grid must be nonempty");
  if ((c.kind == ExperimentKind::max_tail ||
       c.kind == ExperimentKind::joint_tail ||
       c.kind == ExperimentKind::sigma_law ||
       c.kind == ExperimentKind::bounds_grid) &&
      c.y_grid.empty())
    throw std::invalid_argument("config: y_grid must be nonempty for this kind");
  if (c.kind == ExperimentKind::bounds_grid && c.n_steps_grid.empty())
    throw std::invalid_argument("config: n_steps_grid must be nonempty");
  if (c.k_max < 1) throw std::invalid_argument("config: k_max >= 1");
  return c;
}

}  // namespace

std::string config_to_json_text(const ExperimentConfig& c) {
  json j;
  j["model"] = json::parse(c.model_json);
  j["kind"] = kind_name(c.kind);
  j["seed"] = c.seed;
  if (!c.x_grid.empty()) j["x_grid"] = c.x_grid;
  if (!c.y_grid.empty()) j["y_grid"] = c.y_grid;
  if (!c.n_steps_grid.empty()) j["n_steps_grid"] = c.n_steps_grid;
  if (c.n > 0) j["n"] = c.n;
  j["max_steps"] = c.max_steps;
  j["threads"] = c.threads;
  j["estimator"] =
      c.estimator == EstimatorChoice::naive ? "naive" : "is";
  j["is"]["weight"] = c.is_weight;
  if (c.is_threshold) j["is"]["threshold"] = *c.is_threshold;
  j["is"]["threshold_scale"] = c.is_threshold_scale;
  j["window"]["epsilon"] = c.window_epsilon;
  j["window"]["R"] = c.window_r;
  j["envelope"]["c_env_grid"] = c.c_env_grid;
  j["envelope"]["eps"] = c.envelope_eps;
  j["rho_grid"] = c.rho_grid;
  j["k_max"] = c.k_max;
  j["dp"]["area_cap"] = c.dp_area_cap;
  j["dp"]["height_cap"] = c.dp_height_cap;
  j["svg"] = c.emit_svg;
  j["dump_excursions"] = c.dump_excursions;
  return j.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

namespace {

struct HeadlineAcc {
  std::vector<double> xs;
  std::vector<std::uint64_t> hits;
  KahanSum sum_tau;
  std::uint64_t n_ok = 0;
  std::uint64_t truncated = 0;
  void add(const ExcursionOutcome& o) {
    if (o.truncated) {
      ++truncated;
      return;
    }
    ++n_ok;
    sum_tau.add(static_cast<double>(o.tau));
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (o.area > xs[i]) ++hits[i];
  }
  void merge(const HeadlineAcc& o) {
    sum_tau.merge(o.sum_tau);
    n_ok += o.n_ok;
    truncated += o.truncated;
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += o.hits[i];
  }
};

void run_tail_kind(const ExperimentConfig& cfg, const IncrementModel& model,
                   RowBuffers& rows) {
  const std::string kind = kind_name(cfg.kind);
  SimConfig sim;
  sim.seed = cfg.seed;
  sim.max_steps = cfg.max_steps;

  const bool is_area = cfg.kind == ExperimentKind::area_tail ||
                       cfg.kind == ExperimentKind::headline;
  const std::vector<double>& grid =
      cfg.kind == ExperimentKind::max_tail ? cfg.y_grid : cfg.x_grid;

  // one common pass estimates the tail grid and E tau on the same sample
  std::vector<TailEstimate> ests;
  double e_tau = 0.0;
  if (is_area && cfg.estimator == EstimatorChoice::is_mixture) {
    const MeanTauEstimate mt = estimate_e_tau(model, cfg.n, sim, cfg.threads);
    e_tau = mt.e_tau;
    for (double x : grid) {
      ISConfig is;
      is.mixture_weight = cfg.is_weight;
      is.tilt_threshold = is_threshold_for(cfg, model, x);
      ests.push_back(
          is_mixture_area_tail(model, x, cfg.n, sim, is, cfg.threads));
    }
    PredictionRow pr;
    pr.kind = kind;
    pr.formula_id = "e_tau_hat";
    pr.x = 0.0;
    pr.value = mt.e_tau;
    pr.params = "stderr=" + fmt(mt.stderr_) + ";wald=" + fmt(mt.wald_e_tau);
    rows.predictions.push_back(pr);
  } else {
    HeadlineAcc acc;
    acc.xs = grid;
    acc.hits.assign(grid.size(), 0);
    fold_excursions(model, sim, cfg.n, cfg.threads, acc);
    if (acc.n_ok == 0)
      throw std::runtime_error("all paths truncated: configuration unusable");
    e_tau = acc.sum_tau.value() / static_cast<double>(acc.n_ok);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      TailEstimate e;
      e.method = Method::naive;
      e.n = acc.n_ok + acc.truncated;
      e.truncated_count = acc.truncated;
      e.p_hat = static_cast<double>(acc.hits[i]) / static_cast<double>(acc.n_ok);
      e.stderr_ = std::sqrt(e.p_hat * (1.0 - e.p_hat) /
                            static_cast<double>(acc.n_ok));
      e.ci95 = binomial_ci95(e.p_hat, e.stderr_, e.n, acc.truncated);
      ests.push_back(e);
    }
    PredictionRow pr;
    pr.kind = kind;
    pr.formula_id = "e_tau_hat";
    pr.x = 0.0;
    pr.value = e_tau;
    pr.params = "";
    rows.predictions.push_back(pr);
  }

  std::vector<std::pair<double, double>> p_series;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    rows.estimates.push_back(to_row(kind, ests[i], t));
    PredictionRow pr;
    pr.kind = kind;
    pr.x = t;
    if (cfg.kind == ExperimentKind::tau_tail) {
      pr.formula_id = "tau_asymptotics";
      pr.value = tau_tail_prediction(model, e_tau, t);
    } else if (cfg.kind == ExperimentKind::max_tail) {
      pr.formula_id = "max_asymptotics";
      pr.value = max_tail_prediction(model, e_tau, t);
    } else {
      pr.formula_id = "area_asymptotics";
      pr.value = area_tail_prediction(model, e_tau, t);
    }
    pr.params = "e_tau=" + fmt(e_tau);
    rows.predictions.push_back(pr);

    CombinedRow cr;
    cr.kind = kind;
    cr.x = t;
    cr.method = method_name(ests[i].method);
    cr.p_hat = ests[i].p_hat;
    cr.stderr_ = ests[i].stderr_;
    cr.formula_id = pr.formula_id;
    cr.prediction = pr.value;
    cr.ratio = pr.value > 0.0 ? ests[i].p_hat / pr.value
                              : std::numeric_limits<double>::quiet_NaN();
    if (is_area) p_series.emplace_back(t, ests[i].p_hat);
    rows.combined.push_back(cr);
  }

  if (is_area && !model.lattice) {
    const auto log_ratios = log_ratio_check(model, p_series);
    for (std::size_t i = 0; i < log_ratios.size(); ++i) {
      if (!log_ratios[i].valid) continue;
      for (auto& cr : rows.combined) {
        if (cr.kind == kind && cr.x == log_ratios[i].x)
          cr.log_ratio = log_ratios[i].ratio;
      }
    }
  }
}

void run_joint_kind(const ExperimentConfig& cfg, const IncrementModel& model,
                    RowBuffers& rows) {
  SimConfig sim;
  sim.seed = cfg.seed;
  sim.max_steps = cfg.max_steps;
  JointTailWindow window;
  window.kind = model.family == Family::pareto
                    ? JointTailWindow::Kind::regvar_a
                    : JointTailWindow::Kind::semiexp_b;
  window.epsilon = cfg.window_epsilon;
  window.R = cfg.window_r;
  const MeanTauEstimate mt = estimate_e_tau(model, cfg.n, sim, cfg.threads);
  for (double x : cfg.x_grid) {
    for (double y : cfg.y_grid) {
      const JointTailEstimate je =
          joint_tail(model, x, y, cfg.n, sim, window, cfg.threads);
      rows.estimates.push_back(to_row("joint_tail", je.estimate, x, y));
      PredictionRow pr;
      pr.kind = "joint_tail";
      pr.formula_id = "area_asymptotics";
      pr.x = x;
      pr.y = y;
      pr.value = area_tail_prediction(model, mt.e_tau, x);
      pr.params = std::string("in_window=") + (je.in_window ? "1" : "0") +
                  ";window_lo=" + fmt(je.window_lo) +
                  ";window_hi=" + fmt(je.window_hi) + ";e_tau=" + fmt(mt.e_tau);
      rows.predictions.push_back(pr);
      CombinedRow cr;
      cr.kind = "joint_tail";
      cr.x = x;
      cr.y = y;
      cr.method = "naive";
      cr.p_hat = je.estimate.p_hat;
      cr.stderr_ = je.estimate.stderr_;
      cr.formula_id = pr.formula_id;
      cr.prediction = pr.value;
      cr.ratio = pr.value > 0.0 ? cr.p_hat / pr.value
                                : std::numeric_limits<double>::quiet_NaN();
      rows.combined.push_back(cr);
    }
  }
}

void run_sigma_law(const ExperimentConfig& cfg, const IncrementModel& model,
                   RowBuffers& rows) {
  SimConfig sim;
  sim.seed = cfg.seed;
  sim.max_steps = cfg.max_steps;
  const double y = cfg.y_grid.front();
  const SigmaLawResult r = sigma_y_conditional_law(model, y, cfg.k_max, cfg.n,
                                                   sim, cfg.threads);
  for (int k = 1; k <= cfg.k_max; ++k) {
    EstimateRow er;
    er.kind = "sigma_law";
    er.method = "naive";
    er.x = static_cast<double>(k);
    er.y = y;
    er.p_hat = r.empirical[k - 1];
    er.stderr_ = std::sqrt(er.p_hat * (1.0 - er.p_hat) /
                           static_cast<double>(r.cond_count));
    const Interval ci = binomial_ci95(er.p_hat, er.stderr_, r.cond_count, 0);
    er.ci_lo = ci.lo;
    er.ci_hi = ci.hi;
    er.n = r.cond_count;
    er.truncated = r.truncated_count;
    rows.estimates.push_back(er);

    PredictionRow pr;
    pr.kind = "sigma_law";
    pr.formula_id = "q_k";
    pr.x = static_cast<double>(k);
    pr.y = y;
    pr.value = r.q[k - 1];
    pr.params = "e_tau=" + fmt(r.e_tau);
    rows.predictions.push_back(pr);

    CombinedRow cr;
    cr.kind = "sigma_law";
    cr.x = static_cast<double>(k);
    cr.y = y;
    cr.method = "naive";
    cr.p_hat = er.p_hat;
    cr.stderr_ = er.stderr_;
    cr.formula_id = "q_k";
    cr.prediction = pr.value;
    cr.ratio = pr.value > 0.0 ? er.p_hat / pr.value
                              : std::numeric_limits<double>::quiet_NaN();
    rows.combined.push_back(cr);
  }
  PredictionRow tv;
  tv.kind = "sigma_law";
  tv.formula_id = "total_variation";
  tv.x = 0.0;
  tv.y = y;
  tv.value = r.total_variation;
  tv.params = "cond_count=" + fmt_u64(r.cond_count);
  rows.predictions.push_back(tv);
}

void run_bounds_grid(const ExperimentConfig& cfg, const IncrementModel& model,
                     RowBuffers& rows) {
  for (std::uint64_t n_steps : cfg.n_steps_grid) {
    const std::string kind = "bounds_grid_n" + std::to_string(n_steps);
    std::vector<std::pair<double, double>> xy;
    for (double x : cfg.x_grid)
      for (double y : cfg.y_grid) xy.emplace_back(x, y);
    const auto ests = fixed_horizon_joint_tail(model, n_steps, xy, cfg.n,
                                               cfg.seed, cfg.threads);
    for (std::size_t i = 0; i < xy.size(); ++i) {
      rows.estimates.push_back(to_row(kind, ests[i], xy[i].first, xy[i].second));
      const BoundEvaluation b =
          lemma31_bound(model, n_steps, xy[i].first, xy[i].second);
      PredictionRow pr;
      pr.kind = kind;
      pr.formula_id = "lemma31";
      pr.x = xy[i].first;
      pr.y = xy[i].second;
      pr.value = b.value;
      pr.params = "lambda=" + fmt(b.lambda) + ";I=" + fmt(b.I) +
                  ";C=" + fmt(b.C) + ";n=" + fmt_u64(n_steps);
      rows.predictions.push_back(pr);
      CombinedRow cr;
      cr.kind = kind;
      cr.x = xy[i].first;
      cr.y = xy[i].second;
      cr.method = "naive";
      cr.p_hat = ests[i].p_hat;
      cr.stderr_ = ests[i].stderr_;
      cr.formula_id = "lemma31";
      cr.prediction = b.value;
      cr.ratio = b.value > 0.0 ? cr.p_hat / b.value
                               : std::numeric_limits<double>::quiet_NaN();
      cr.bound_violated = cr.p_hat > b.value;
      rows.combined.push_back(cr);
    }
  }
  // logarithmic envelope sweep: report every C_env and the tightest
  // non-vacuous one per x
  for (double x : cfg.x_grid) {
    double best = std::numeric_limits<double>::infinity();
    double best_c = 0.0;
    for (double c_env : cfg.c_env_grid) {
      const double v = theorem12_upper(model, x, c_env);
      PredictionRow pr;
      pr.kind = "envelope";
      pr.formula_id = "theorem12_upper";
      pr.x = x;
      pr.value = v;
      pr.params = "C_env=" + fmt(c_env);
      rows.predictions.push_back(pr);
      if (v < best) {
        best = v;
        best_c = c_env;
      }
    }
    PredictionRow pr;
    pr.kind = "envelope";
    pr.formula_id = "theorem12_upper_best";
    pr.x = x;
    pr.value = best;
    pr.params = "C_env=" + fmt(best_c);
    rows.predictions.push_back(pr);
    PredictionRow lo;
    lo.kind = "envelope";
    lo.formula_id = "theorem12_lower_ref";
    lo.x = x;
    lo.value = theorem12_lower_ref(model, x, best_c, cfg.envelope_eps);
    lo.params = "C_env=" + fmt(best_c) + ";eps=" + fmt(cfg.envelope_eps);
    rows.predictions.push_back(lo);
  }
}

void run_class_check(const ExperimentConfig& cfg, const IncrementModel& model,
                     RowBuffers& rows) {
  const ClassReport cr = validate_class(model, cfg.x_grid);
  const auto verdict_row = [&](const std::string& id, double margin,
                               bool pass) {
    PredictionRow pr;
    pr.kind = "class_check";
    pr.formula_id = id;
    pr.x = 0.0;
    pr.value = margin;
    pr.params = std::string("pass=") + (pass ? "1" : "0");
    rows.predictions.push_back(pr);
  };
  verdict_row("sc1_slack", cr.sc1_slack, cr.sc1_pass);
  verdict_row("sc2_monotone_margin", cr.sc2_monotone_margin, cr.sc2_pass);
  verdict_row("sc3_margin", cr.sc3_margin, cr.sc3_pass);
  verdict_row("sc4_trend_last", cr.sc4_trend.back(), cr.sc4_pass);
  verdict_row("sc5_trend_last", cr.sc5_trend.back(), cr.sc5_pass);

  const SStarReport ss = s_star_report(model, cfg.x_grid);
  for (std::size_t i = 0; i < ss.x_grid.size(); ++i) {
    PredictionRow pr;
    pr.kind = "class_check";
    pr.formula_id = "s_star_ratio";
    pr.x = ss.x_grid[i];
    pr.value = ss.ratio[i];
    pr.params = "limit_ref=" + fmt(ss.limit_ref) +
                ";rel_dev=" + fmt(ss.rel_dev[i]);
    rows.predictions.push_back(pr);
  }
  const double x_ins = cfg.x_grid.back();
  for (double rho : cfg.rho_grid) {
    const InsensitivityReport ir = insensitivity_modulus(model, x_ins, rho);
    PredictionRow pr;
    pr.kind = "class_check";
    pr.formula_id = "insensitivity_modulus";
    pr.x = rho;
    pr.value = ir.modulus;
    pr.params = "x=" + fmt(x_ins) + ";bound=" + fmt(ir.bound) +
                ";modulus_up=" + fmt(ir.modulus_up);
    rows.predictions.push_back(pr);
  }
}

void run_oracle_dp(const ExperimentConfig& cfg, const IncrementModel& model,
                   RowBuffers& rows) {
  if (!model.lattice)
    throw std::runtime_error("oracle_dp requires the lattice model");
  double e_tau = 0.0;
  double neglected = 0.0;
  for (double x : cfg.x_grid) {
    const LatticeDpResult r =
        dp_exact_lattice(model.lattice_p, x, cfg.dp_area_cap, cfg.dp_height_cap);
    e_tau = r.e_tau;
    neglected = r.neglected;
    EstimateRow er;
    er.kind = "oracle_dp";
    er.method = method_name(Method::dp_exact);
    er.x = x;
    er.p_hat = r.p_area_gt;
    er.stderr_ = 0.0;
    er.ci_lo = r.p_area_gt;
    er.ci_hi = r.p_area_gt;
    er.n = 0;
    er.truncated = 0;
    rows.estimates.push_back(er);
  }
  PredictionRow pr;
  pr.kind = "oracle_dp";
  pr.formula_id = "e_tau_exact";
  pr.x = 0.0;
  pr.value = e_tau;
  pr.params = "neglected=" + fmt(neglected);
  rows.predictions.push_back(pr);
}

void dump_excursion_rows(const ExperimentConfig& cfg,
                         const IncrementModel& model, const std::string& path) {
  SimConfig sim;
  sim.seed = cfg.seed;
  sim.max_steps = cfg.max_steps;
  std::ostringstream s;
  s << "stream_index,tau,area,max,truncated\n";
  for (std::uint64_t i = 0; i < cfg.n; ++i) {
    const ExcursionOutcome o = simulate_excursion(model, sim, i);
    s << i << ',' << o.tau << ',' << fmt(o.area) << ',' << fmt(o.max) << ','
      << (o.truncated ? 1 : 0) << '\n';
  }
  write_file(path, s.str());
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg,
                            const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  const IncrementModel model = model_from_json_text(cfg.model_json);

  RowBuffers rows;
  switch (cfg.kind) {
    case ExperimentKind::area_tail:
    case ExperimentKind::tau_tail:
    case ExperimentKind::max_tail:
    case ExperimentKind::headline:
      run_tail_kind(cfg, model, rows);
      break;
    case ExperimentKind::joint_tail:
      run_joint_kind(cfg, model, rows);
      break;
    case ExperimentKind::sigma_law:
      run_sigma_law(cfg, model, rows);
      break;
    case ExperimentKind::bounds_grid:
      run_bounds_grid(cfg, model, rows);
      break;
    case ExperimentKind::class_check:
      run_class_check(cfg, model, rows);
      break;
    case ExperimentKind::oracle_dp:
      run_oracle_dp(cfg, model, rows);
      break;
  }
  sort_rows(rows);

  RunArtifacts art;
  const auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = out_dir + "/" + name;
    write_file(path, content);
    art.files.push_back(path);
  };
  if (!rows.estimates.empty()) emit("estimates.csv", estimates_csv(rows.estimates));
  if (!rows.predictions.empty())
    emit("predictions.csv", predictions_csv(rows.predictions));
  if (!rows.combined.empty()) emit("combined.csv", combined_csv(rows.combined));

  if (cfg.emit_svg && !rows.combined.empty()) {
    std::vector<std::pair<double, double>> series;
    for (const auto& r : rows.combined)
      if (std::isfinite(r.ratio) && r.x > 0.0)
        series.emplace_back(r.x, r.ratio);
    if (!series.empty()) emit("plot.svg", ratio_svg(series));
  }
  if (cfg.dump_excursions && cfg.n > 0 &&
      cfg.kind != ExperimentKind::oracle_dp &&
      cfg.kind != ExperimentKind::class_check) {
    dump_excursion_rows(cfg, model, out_dir + "/excursions.csv");
    art.files.push_back(out_dir + "/excursions.csv");
  }

  const auto t1 = std::chrono::steady_clock::now();
  art.wall_time_s = std::chrono::duration<double>(t1 - t0).count();

  json summary;
  summary["config"] = json::parse(config_to_json_text(cfg));
  summary["version"] = std::string("areatail 0.1.0+") + AREATAIL_GIT_REV;
  summary["wall_time_s"] = art.wall_time_s;
  summary["artifacts"] = art.files;
  json combined_rows = json::array();
  for (const auto& r : rows.combined) {
    json jr;
    jr["kind"] = r.kind;
    jr["x"] = r.x;
    if (r.y) jr["y"] = *r.y;
    jr["method"] = r.method;
    jr["p_hat"] = r.p_hat;
    jr["stderr"] = r.stderr_;
    jr["formula_id"] = r.formula_id;
    jr["prediction"] = r.prediction;
    jr["ratio"] = r.ratio;
    if (r.log_ratio) jr["log_ratio"] = *r.log_ratio;
    jr["bound_violated"] = r.bound_violated;
    combined_rows.push_back(jr);
  }
  summary["rows"] = combined_rows;
  emit("summary.json", summary.dump(2) + "\n");
  return art;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("report: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"') {
        quoted = !quoted;
      } else if (ch == ',' && !quoted) {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    fields.push_back(cur);
    rows.push_back(std::move(fields));
  }
  return rows;
}

bool is_bound_formula(const std::string& id) {
  return id == "lemma31" || id == "theorem12_upper" ||
         id == "theorem12_upper_best";
}

}  // namespace

ReportResult report_files(const std::vector<std::string>& paths,
                          const std::string& out_csv) {
  struct Est {
    std::string kind, method;
    double x;
    std::string y;
    double p_hat, stderr_;
  };
  struct Pred {
    std::string kind, formula;
    double x;
    std::string y;
    double value;
  };
  std::vector<Est> ests;
  std::vector<Pred> preds;
  for (const auto& path : paths) {
    const auto rows = parse_csv(path);
    if (rows.empty()) continue;
    const auto& header = rows.front();
    if (header.size() >= 5 && header[0] == "kind" && header[1] == "method") {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < 10) throw std::runtime_error("report: schema mismatch in " + path);
        ests.push_back({r[0], r[1], std::stod(r[2]), r[3], std::stod(r[4]),
                        std::stod(r[5])});
      }
    } else if (header.size() >= 5 && header[0] == "kind" &&
               header[1] == "formula_id") {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < 6) throw std::runtime_error("report: schema mismatch in " + path);
        preds.push_back({r[0], r[1], std::stod(r[2]), r[3], std::stod(r[4])});
      }
    } else {
      throw std::runtime_error("report: unrecognized schema in " + path);
    }
  }

  ReportResult result;
  std::ostringstream s;
  s << "kind,x,y,method,p_hat,stderr,formula_id,prediction,ratio,flag\n";
  for (const auto& e : ests) {
    for (const auto& p : preds) {
      if (e.kind != p.kind || e.x != p.x || e.y != p.y) continue;
      const double ratio =
          p.value > 0.0 ? e.p_hat / p.value
                        : std::numeric_limits<double>::quiet_NaN();
      const bool viol = is_bound_formula(p.formula) && e.p_hat > p.value;
      if (viol) ++result.bound_violations;
      ++result.joined_rows;
      s << e.kind << ',' << fmt(e.x) << ',' << e.y << ',' << e.method << ','
        << fmt(e.p_hat) << ',' << fmt(e.stderr_) << ',' << p.formula << ','
        << fmt(p.value) << ',' << fmt(ratio) << ',' << (viol ? "1" : "0")
        << '\n';
    }
  }
  result.empty_join = result.joined_rows == 0;
  write_file(out_csv, s.str());
  result.csv_path = out_csv;
  return result;
}

}  // namespace areatail
