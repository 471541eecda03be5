#include "areatail/increment_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "areatail/numeric.hpp"

namespace areatail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smooth monotone completion below the tail threshold t0: the log-tail is
// kappa (t/t0)^p, with kappa and p chosen so that value and derivative match
// t^{-2} e^{-g(t)} at t0. Keeps the full tail C^1 and equal to 1 at 0.
struct Completion {
  double t0 = 1.0;
  double kappa = 1.0;
  double p = 2.0;
};

Completion make_completion(const GFunction& g, double t0) {
  Completion c;
  c.t0 = t0;
  c.kappa = g.eval(t0) + 2.0 * std::log(t0);
  c.p = (t0 * g.deriv(t0) + 2.0) / c.kappa;
  if (!(c.kappa > 0.0) || !(c.p > 0.0))
    throw std::invalid_argument("tail completion is not monotone");
  return c;
}

double tail_with_completion(const GFunction& g, const Completion& c, double t) {
  if (t <= 0.0) return 1.0;
  if (t < c.t0) return std::exp(-c.kappa * std::pow(t / c.t0, c.p));
  return std::exp(-g.eval(t)) / (t * t);
}

double log_tail_with_completion(const GFunction& g, const Completion& c,
                                double t) {
  if (t <= 0.0) return 0.0;
  if (t < c.t0) return -c.kappa * std::pow(t / c.t0, c.p);
  return -g.eval(t) - 2.0 * std::log(t);
}

void fill_moments(IncrementModel& m, double drift_a) {
  const auto& tail = m.y_tail;
  const double t0 = 1.0;
  m.e_y = integrate(tail, 0.0, t0, 1e-13) + integrate_to_inf(tail, t0, 1e-11);
  const auto t_tail = [&tail](double t) { return t * tail(t); };
  m.e_y2 = 2.0 * (integrate(t_tail, 0.0, t0, 1e-13) +
                  integrate_to_inf(t_tail, t0, 1e-11));
  m.variance = m.e_y2 - m.e_y * m.e_y;
  m.drift_a = drift_a;
  m.shift_c = m.e_y + drift_a;
}

double measured_tail_constant(const IncrementModel& m, double threshold) {
  // ratio is exactly 1 above the threshold by construction; scan the
  // completion region near the threshold for the supremum
  double sup = 1.0;
  const int kPoints = 1024;
  for (int i = 1; i <= kPoints; ++i) {
    const double t = threshold * static_cast<double>(i) / kPoints;
    const double ratio = m.y_tail(t) * t * t * std::exp(m.g.eval(t));
    if (std::isfinite(ratio)) sup = std::max(sup, ratio);
  }
  return sup;
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::weibull: return "weibull";
    case Family::pareto: return "pareto";
    case Family::lognormal: return "lognormal";
    case Family::lattice: return "lattice";
    case Family::degenerate: return "degenerate";
    case Family::custom: return "custom";
  }
  return "unknown";
}

double IncrementModel::x_tail(double v) const {
  if (lattice) {
    if (v < -1.0) return 1.0;
    if (v < 1.0) return lattice_p;
    return 0.0;
  }
  return y_tail(v + shift_c);
}

double IncrementModel::x_log_tail(double v) const {
  if (lattice) return std::log(x_tail(v));
  return y_log_tail(v + shift_c);
}

double IncrementModel::increment_from_u(double u) const {
  if (lattice) return u < lattice_p ? 1.0 : -1.0;
  return y_quantile(u) - shift_c;
}

double IncrementModel::sample(SampleStream& rng) const {
  return increment_from_u(rng.next_u01());
}

IncrementModel make_semiexponential_model(Family family, GFunction g,
                                          double threshold, double drift_a) {
  if (!(drift_a > 0.0)) throw std::invalid_argument("drift_a must be > 0");
  const Completion comp = make_completion(g, threshold);
  IncrementModel m;
  m.family = family;
  m.g = g;
  m.y_tail = [g, comp](double t) { return tail_with_completion(g, comp, t); };
  m.y_log_tail = [g, comp](double t) {
    return log_tail_with_completion(g, comp, t);
  };
  m.y_quantile = [g, comp](double u) {
    const double ell = -std::log(u);
    if (ell <= comp.kappa)
      return comp.t0 * std::pow(ell / comp.kappa, 1.0 / comp.p);
    const auto log_tail = [&](double t) {
      return g.eval(t) + 2.0 * std::log(t);
    };
    const auto dlog_tail = [&](double t) { return g.deriv(t) + 2.0 / t; };
    const double hi = std::exp(std::min(ell, 1400.0) / 2.0);
    return solve_increasing(log_tail, dlog_tail, ell, comp.t0, hi, 1e-13);
  };
  fill_moments(m, drift_a);
  m.tail_constant = measured_tail_constant(m, threshold);
  m.kappa = kInf;
  return m;
}

IncrementModel make_weibull_model(double beta, double drift_a) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("weibull: beta must lie in (0,1)");
  GFunction g;
  g.eval = [beta](double x) { return std::pow(x, beta); };
  g.deriv = [beta](double x) { return beta * std::pow(x, beta - 1.0); };
  g.gamma0 = beta;
  g.x_min = 1.0;
  IncrementModel m = make_semiexponential_model(Family::weibull, g, 1.0, drift_a);
  // quantile with a sharper bracket: both 2 ln t <= ell and t^beta <= ell
  m.y_quantile = [beta](double u) {
    const double ell = -std::log(u);
    if (ell <= 1.0) return std::pow(ell, 1.0 / (2.0 + beta));
    const auto log_tail = [beta](double t) {
      return std::pow(t, beta) + 2.0 * std::log(t);
    };
    const auto dlog_tail = [beta](double t) {
      return beta * std::pow(t, beta - 1.0) + 2.0 / t;
    };
    const double hi =
        std::min(std::exp(std::min(ell / 2.0, 700.0)), std::pow(ell, 1.0 / beta));
    return solve_increasing(log_tail, dlog_tail, ell, 1.0, hi, 1e-13);
  };
  m.params = {{"beta", beta}};
  return m;
}

IncrementModel make_pareto_model(double alpha, double drift_a) {
  if (!(alpha > 2.0))
    throw std::invalid_argument("pareto: alpha must be > 2 (finite variance)");
  if (!(drift_a > 0.0)) throw std::invalid_argument("drift_a must be > 0");
  IncrementModel m;
  m.family = Family::pareto;
  m.params = {{"alpha", alpha}};
  // (sc1) normalization: t^{-alpha} = t^{-2} e^{-(alpha-2) ln t}
  GFunction g;
  g.eval = [alpha](double x) { return (alpha - 2.0) * std::log(x); };
  g.deriv = [alpha](double x) { return (alpha - 2.0) / x; };
  g.gamma0 = 0.5;
  g.x_min = std::exp(2.0 / g.gamma0);
  m.g = g;
  m.y_tail = [alpha](double t) {
    return t < 1.0 ? 1.0 : std::pow(t, -alpha);
  };
  m.y_log_tail = [alpha](double t) {
    return t < 1.0 ? 0.0 : -alpha * std::log(t);
  };
  m.y_quantile = [alpha](double u) { return std::pow(u, -1.0 / alpha); };
  m.e_y = alpha / (alpha - 1.0);
  m.e_y2 = alpha / (alpha - 2.0);
  m.variance = m.e_y2 - m.e_y * m.e_y;
  m.drift_a = drift_a;
  m.shift_c = m.e_y + drift_a;
  m.tail_constant = 1.0;
  m.kappa = alpha - 1.0;
  return m;
}

IncrementModel make_lognormal_model(double s, double drift_a) {
  if (!(s > 0.0)) throw std::invalid_argument("lognormal: s must be > 0");
  const double s2 = s * s;
  GFunction g;
  g.eval = [s2](double x) {
    const double w = std::log(x);
    return w * w / (2.0 * s2);
  };
  g.deriv = [s2](double x) { return std::log(x) / (s2 * x); };
  g.gamma0 = 0.5;
  // g(x)/x^gamma0 decreases and g' <= gamma0 g/x once gamma0 ln x >= 2
  g.x_min = std::exp(2.0 / g.gamma0);
  IncrementModel m = make_semiexponential_model(Family::lognormal, g,
                                                std::exp(1.0), drift_a);
  // log-tail above threshold is quadratic in ln t, so invert in closed form
  const double kappa = 0.5 / s2 + 2.0;
  const double p = (1.0 / s2 + 2.0) / kappa;
  m.y_quantile = [s2, kappa, p](double u) {
    const double ell = -std::log(u);
    if (ell <= kappa)
      return std::exp(1.0) * std::pow(ell / kappa, 1.0 / p);
    const double w = s2 * (-2.0 + std::sqrt(4.0 + 2.0 * ell / s2));
    return std::exp(w);
  };
  m.params = {{"s", s}};
  return m;
}

IncrementModel make_lattice_model(double p) {
  if (!(p > 0.0 && p < 0.5))
    throw std::invalid_argument("lattice: p must lie in (0, 1/2)");
  IncrementModel m;
  m.family = Family::lattice;
  m.params = {{"p", p}};
  m.lattice = true;
  m.lattice_p = p;
  m.drift_a = 1.0 - 2.0 * p;
  m.shift_c = 0.0;
  m.e_y = 0.0;
  m.e_y2 = 0.0;
  m.variance = 1.0 - m.drift_a * m.drift_a;
  m.tail_constant = std::numeric_limits<double>::quiet_NaN();  // not applicable
  m.kappa = kInf;
  return m;
}

IncrementModel make_degenerate_model(double drift_a) {
  if (!(drift_a > 0.0)) throw std::invalid_argument("drift_a must be > 0");
  IncrementModel m;
  m.family = Family::degenerate;
  m.drift_a = drift_a;
  m.shift_c = drift_a;
  m.e_y = 0.0;
  m.e_y2 = 0.0;
  m.variance = 0.0;
  m.tail_constant = 1.0;
  m.kappa = kInf;
  m.g.eval = [](double) { return 0.0; };  // lambda = g(y)/y collapses to 0
  m.g.deriv = [](double) { return 0.0; };
  m.g.gamma0 = 0.5;
  m.g.x_min = 1.0;
  m.y_tail = [](double t) { return t < 0.0 ? 1.0 : 0.0; };
  m.y_log_tail = [](double t) {
    return t < 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  m.y_quantile = [](double) { return 0.0; };
  return m;
}

IncrementModel model_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const std::string family = j.at("family").get<std::string>();
  const auto& params = j.at("params");
  if (family == "lattice") return make_lattice_model(params.at("p").get<double>());
  const double a = j.at("drift_a").get<double>();
  if (family == "degenerate") return make_degenerate_model(a);
  if (family == "weibull")
    return make_weibull_model(params.at("beta").get<double>(), a);
  if (family == "pareto")
    return make_pareto_model(params.at("alpha").get<double>(), a);
  if (family == "lognormal")
    return make_lognormal_model(params.at("s").get<double>(), a);
  throw std::invalid_argument("unknown model family: " + family);
}

std::string model_to_json_text(const IncrementModel& model) {
  nlohmann::json j;
  j["family"] = family_name(model.family);
  j["params"] = model.params;
  if (!model.lattice) j["drift_a"] = model.drift_a;
  return j.dump();
}

ClassReport validate_class(const IncrementModel& model,
                           const std::vector<double>& grid) {
  if (model.lattice)
    throw std::invalid_argument("validate_class: lattice model has no g");
  if (grid.size() < 2)
    throw std::invalid_argument("validate_class: need at least two grid points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < model.g.x_min)
      throw std::invalid_argument("validate_class: grid point below g.x_min");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("validate_class: grid must be increasing");
  }

  ClassReport r;
  r.grid = grid;
  const GFunction& g = model.g;
  double sc2_margin = kInf;
  double sc3_margin = -kInf;
  double prev_ratio = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const double gx = g.eval(x);
    const double sc1_ratio =
        model.y_tail(x) * x * x * std::exp(gx);
    r.sc1_slack = std::max(r.sc1_slack,
                           std::max(sc1_ratio, 1.0 / sc1_ratio) - 1.0);
    const double ratio = gx / std::pow(x, g.gamma0);
    if (i > 0) sc2_margin = std::min(sc2_margin, prev_ratio - ratio);
    prev_ratio = ratio;
    sc3_margin = std::max(sc3_margin, g.deriv(x) * x / gx - g.gamma0);
    r.sc4_trend.push_back(x * g.deriv(x));
    r.sc5_trend.push_back(gx / std::log(x));
  }
  r.sc2_monotone_margin = sc2_margin;
  r.sc3_margin = sc3_margin;

  const auto strictly_increasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double scale = std::max(1.0, std::abs(v[i - 1]));
      if (!(v[i] - v[i - 1] > 1e-9 * scale)) return false;
    }
    return true;
  };
  r.sc1_pass = r.sc1_slack <= 0.05;
  r.sc2_pass = r.sc2_monotone_margin >= -1e-9;
  r.sc3_pass = r.sc3_margin <= 1e-9;
  r.sc4_pass = strictly_increasing(r.sc4_trend);
  r.sc5_pass = strictly_increasing(r.sc5_trend);
  return r;
}

}  // namespace areatail
