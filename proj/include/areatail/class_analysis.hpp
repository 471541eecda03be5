#pragma once

#include <vector>

#include "areatail/increment_model.hpp"

namespace areatail {

// Convolution-to-tail ratio int_0^x barF(y) barF(x-y) dy / barF(x) against
// its strong-subexponential limit 2 int_0^inf barF. Evaluated on the
// unshifted reference tail of Y.
struct SStarReport {
  std::vector<double> x_grid;
  std::vector<double> ratio;
  double limit_ref = 0.0;  // 2 E Y
  std::vector<double> rel_dev;
};

// ratio at a single x; the integrand is split at x/2 (symmetry) and
// evaluated in log space, relative tolerance ~1e-8
double s_star_integral(const IncrementModel& model, double x,
                       double tol = 1e-9);

SStarReport s_star_report(const IncrementModel& model,
                          const std::vector<double>& x_grid);

// sup_{|y| <= x rho} |g(x+y)/g(x) - 1| over a dense grid plus the exact
// endpoints. The analytic first-order bound gamma0*rho is attained (to first
// order in rho) by the built-in families; the upward side obeys it exactly.
struct InsensitivityReport {
  double modulus = 0.0;      // two-sided sup
  double modulus_up = 0.0;   // sup over y in [0, x rho] only
  double bound = 0.0;        // gamma0 * rho
};

InsensitivityReport insensitivity_modulus(const IncrementModel& model,
                                          double x, double rho);

// ln p / ln barF(sqrt(2ax)) per grid point; entries with p outside (0,1) are
// excluded and flagged.
struct LogRatioPoint {
  double x = 0.0;
  double ratio = 0.0;
  bool valid = false;
};

std::vector<LogRatioPoint> log_ratio_check(
    const IncrementModel& model,
    const std::vector<std::pair<double, double>>& p_hat_series);

}  // namespace areatail
