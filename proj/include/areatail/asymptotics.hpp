#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "areatail/increment_model.hpp"

namespace areatail {

// sqrt(2 a x): the size of the single jump that produces area x; every
// closed-form prediction evaluates the increment tail at (a function of)
// this point.
inline double jump_scale(const IncrementModel& model, double x) {
  return std::sqrt(2.0 * model.drift_a * x);
}

// P(A_tau > x) ~ E tau * barF(sqrt(2ax))
double area_tail_prediction(const IncrementModel& model, double e_tau,
                            double x);
// P(tau > t) ~ E tau * barF(a t)
double tau_tail_prediction(const IncrementModel& model, double e_tau,
                           double t);
// P(M_tau > y) ~ E tau * barF(y)
double max_tail_prediction(const IncrementModel& model, double e_tau,
                           double y);
// P(M_k > y) ~ P(S_k > y) ~ k barF(y) for fixed k
double small_k_tail_prediction(const IncrementModel& model, int k, double y);

// P(A_tau > x) ~ P(tau > sqrt(2x/a)); since a sqrt(2x/a) = sqrt(2ax) this
// coincides with area_tail_prediction, and it is evaluated through the same
// floating-point route so the identity is exact in code as well.
double conjecture_rhs(const IncrementModel& model, double e_tau, double x);

// Value of the truncated-MGF bound together with the constants it was
// assembled from.
struct BoundEvaluation {
  double value = 0.0;
  double lambda = 0.0;  // g(y)/y
  double I = 0.0;       // a/2 - C lambda
  double C = 0.0;       // a^2 + sigma^2 + tail_constant + e
  double x = 0.0;
  double y = 0.0;
  std::uint64_t n = 0;
  std::string formula_id;
};

// P(A_n > x, max X_i <= y) <= exp{-lambda x/n - lambda a n/2 + C lambda^2 n}
// with lambda = g(y)/y and C assembled from the explicit proof constants:
// a^2 + sigma^2 from the small-increment MGF expansion, tail_constant + e
// from the truncated-tail piece.
BoundEvaluation lemma31_bound(const IncrementModel& model, std::uint64_t n,
                              double x, double y);

// Logarithmic envelope C x^{1/4} exp{-g(v) sqrt(1 - 2 C g(v)/(a v))} with
// v = sqrt(2ax); returns +inf when the radicand is nonpositive (the bound is
// only asserted for large x).
double theorem12_upper(const IncrementModel& model, double x, double c_env);

// barF(sqrt(2ax) + C x^{1/4+eps}): the comparison denominator of the lower
// envelope.
double theorem12_lower_ref(const IncrementModel& model, double x, double c_env,
                           double eps);

struct SeriesBound {
  double exact_sum = 0.0;    // sum_{n>=1} exp{-lambda x/n - lambda I n}
  double bessel_form = 0.0;  // e^{lambda I} sqrt(4x/I) K_1(2 lambda sqrt(Ix))
};

// Direct summation of the series (the summand is unimodal in n, so the tail
// cutoff is certified) next to its Bessel-type closed-form majorant obtained
// by bounding each term by the integral of exp{-lambda x/(u+1) - lambda I u}
// over [n-1, n].
SeriesBound geometric_series_bound(double lambda, double I, double x);

}  // namespace areatail
