#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "areatail/rng.hpp"

namespace areatail {

// Hazard exponent g of the positive part: the tail of Y is t^{-2} e^{-g(t)}
// above the family threshold. gamma0 is the exponent for which g(x)/x^gamma0
// is nonincreasing on [x_min, inf).
struct GFunction {
  std::function<double(double)> eval;
  std::function<double(double)> deriv;
  double gamma0 = 0.0;
  double x_min = 1.0;
};

enum class Family { weibull, pareto, lognormal, lattice, degenerate, custom };

const char* family_name(Family f);

// Heavy-tailed increment X = Y - shift_c with E X = -drift_a. The Y-tail is
// exact: t^{-2} e^{-g(t)} for t >= tail_threshold and a smooth monotone
// completion exp(-comp_kappa (t/threshold)^comp_p) below it, so every
// downstream evaluation has a bit-exact reference instead of a "~".
struct IncrementModel {
  Family family = Family::custom;
  std::map<std::string, double> params;

  double drift_a = 0.0;   // E X = -drift_a
  double shift_c = 0.0;   // X = Y - shift_c
  double variance = 0.0;  // Var X = Var Y
  double e_y = 0.0;       // E Y, cached quadrature of the tail
  double e_y2 = 0.0;      // E Y^2

  // constant C_F with bar F_Y(t) <= C_F e^{-g(t)} t^{-2} on t >= x_min
  double tail_constant = 1.0;
  // moment order kappa with E|X|^kappa < inf (recorded, not enforced)
  double kappa = 0.0;

  GFunction g;

  // exact Y-tail machinery (null for the lattice model)
  std::function<double(double)> y_tail;        // P(Y > t)
  std::function<double(double)> y_log_tail;    // log P(Y > t)
  std::function<double(double)> y_quantile;    // t with P(Y > t) = u, u in (0,1)

  bool lattice = false;
  double lattice_p = 0.0;  // lattice: X = +1 w.p. p, -1 w.p. 1-p

  // P(X > v), exact and right-continuous
  double x_tail(double v) const;
  double x_log_tail(double v) const;

  // one increment via inverse transform on the exact tail
  double sample(SampleStream& rng) const;
  // deterministic variant: maps a uniform u in (0,1) to an increment
  double increment_from_u(double u) const;
};

IncrementModel make_weibull_model(double beta, double drift_a);
IncrementModel make_pareto_model(double alpha, double drift_a);
IncrementModel make_lognormal_model(double s, double drift_a);
IncrementModel make_lattice_model(double p);
// Y == 0, so X == -drift_a deterministically; exits at tau = 1 always.
IncrementModel make_degenerate_model(double drift_a);

// Builds a model from an exact Y-tail of the form t^{-2} e^{-g(t)} above
// `threshold` with the standard smooth completion below; used by the named
// factories and available for custom experiments.
IncrementModel make_semiexponential_model(Family family, GFunction g,
                                          double threshold, double drift_a);

// JSON wire format used by the CLI: {"family":..., "params":{...},
// "drift_a":...}
IncrementModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const IncrementModel& model);

// Pass/fail-with-margin record for the distribution-class conditions.
// Verdicts are pure functions of the recorded margins.
struct ClassReport {
  std::vector<double> grid;
  double sc1_slack = 0.0;            // sup |t^2 e^{g(t)} barF(t) - 1| on grid
  double sc2_monotone_margin = 0.0;  // min consecutive drop of g(x)/x^gamma0
  double sc3_margin = 0.0;           // max of g'(x) x / g(x) - gamma0
  std::vector<double> sc4_trend;     // x g'(x) on grid
  std::vector<double> sc5_trend;     // g(x)/log x on grid
  bool sc1_pass = false;
  bool sc2_pass = false;
  bool sc3_pass = false;
  bool sc4_pass = false;  // trend strictly increasing across the grid
  bool sc5_pass = false;
};

ClassReport validate_class(const IncrementModel& model,
                           const std::vector<double>& grid);

}  // namespace areatail
