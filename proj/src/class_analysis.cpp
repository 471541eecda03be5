#include "areatail/class_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "areatail/numeric.hpp"

namespace areatail {

double s_star_integral(const IncrementModel& model, double x,
                       double tol) {
  if (model.lattice)
    throw std::invalid_argument("s_star_integral: lattice has no density tail");
  if (!(x > 0.0)) throw std::invalid_argument("s_star_integral: x must be > 0");
  const double log_fx = model.y_log_tail(x);
  if (!std::isfinite(log_fx))
    throw std::runtime_error("s_star_integral: barF(x) underflows log range");
  // 2 int_0^{x/2} exp(log barF(y) + log barF(x-y) - log barF(x)) dy
  const auto integrand = [&](double y) {
    return std::exp(model.y_log_tail(y) + model.y_log_tail(x - y) - log_fx);
  };
  // knots where the tail switches from the completion to the main branch
  const double half = 0.5 * x;
  std::vector<double> knots = {0.0, half};
  for (double k : {1.0, std::exp(1.0)}) {
    if (k > 0.0 && k < half) knots.push_back(k);
    if (x - k > 0.0 && x - k < half) knots.push_back(x - k);
  }
  std::sort(knots.begin(), knots.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    // scale the absolute tolerance by the segment magnitude estimate
    total += integrate(integrand, knots[i], knots[i + 1], tol);
  }
  return 2.0 * total;
}

SStarReport s_star_report(const IncrementModel& model,
                          const std::vector<double>& x_grid) {
  SStarReport r;
  r.x_grid = x_grid;
  r.limit_ref = 2.0 * model.e_y;
  for (double x : x_grid) {
    const double ratio = s_star_integral(model, x);
    r.ratio.push_back(ratio);
    r.rel_dev.push_back(std::abs(ratio / r.limit_ref - 1.0));
  }
  return r;
}

InsensitivityReport insensitivity_modulus(const IncrementModel& model,
                                          double x, double rho) {
  if (model.lattice)
    throw std::invalid_argument("insensitivity_modulus: lattice has no g");
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  if (!(x * (1.0 - rho) >= model.g.x_min))
    throw std::invalid_argument("insensitivity_modulus: x(1-rho) below g domain");
  InsensitivityReport r;
  r.bound = model.g.gamma0 * rho;
  if (rho == 0.0) return r;
  const double gx = model.g.eval(x);
  const int kGrid = 10'000;
  for (int i = -kGrid; i <= kGrid; ++i) {
    const double y = x * rho * static_cast<double>(i) / kGrid;
    const double dev = std::abs(model.g.eval(x + y) / gx - 1.0);
    r.modulus = std::max(r.modulus, dev);
    if (i >= 0) r.modulus_up = std::max(r.modulus_up, dev);
  }
  // for monotone g the sup sits at an endpoint; the grid pass above verifies
  // rather than assumes it
  const double end_dev = std::max(std::abs(model.g.eval(x + x * rho) / gx - 1.0),
                                  std::abs(model.g.eval(x - x * rho) / gx - 1.0));
  r.modulus = std::max(r.modulus, end_dev);
  r.modulus_up = std::max(
      r.modulus_up, std::abs(model.g.eval(x + x * rho) / gx - 1.0));
  return r;
}

std::vector<LogRatioPoint> log_ratio_check(
    const IncrementModel& model,
    const std::vector<std::pair<double, double>>& p_hat_series) {
  std::vector<LogRatioPoint> out;
  for (const auto& [x, p] : p_hat_series) {
    LogRatioPoint pt;
    pt.x = x;
    if (p > 0.0 && p < 1.0) {
      const double denom =
          model.x_log_tail(std::sqrt(2.0 * model.drift_a * x));
      if (denom < 0.0) {
        pt.ratio = std::log(p) / denom;
        pt.valid = true;
      }
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace areatail
