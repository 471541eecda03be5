#include "areatail/bessel.hpp"

#include <cmath>
#include <stdexcept>

#include "areatail/numeric.hpp"

namespace areatail {

namespace {
// above this the asymptotic series reaches 1e-12 before its terms turn;
// both branches agree to ~1e-12 in a band around it
constexpr double kCrossover = 26.0;
}

double bessel_k1_integral(double z) {
  if (!(z > 0.0)) throw std::invalid_argument("bessel_k1: z must be > 0");
  // integrand e^{-z cosh t} cosh t is negligible once
  // z (cosh t - 1) > ~46 + log of the peak scale
  const double span = std::acosh(1.0 + 745.0 / z);
  // factor out e^{-z} to keep the integrand O(1) for large z
  const auto f = [z](double t) {
    const double c = std::cosh(t);
    return std::exp(-z * (c - 1.0)) * c;
  };
  // coarse composite pass fixes the scale for the absolute tolerance; the
  // integrand spans e^{span} orders of magnitude at small z
  double scale = 0.0;
  const int kPanels = 256;
  for (int i = 0; i < kPanels; ++i)
    scale += f((i + 0.5) * span / kPanels) * span / kPanels;
  const double scaled =
      integrate(f, 0.0, span, 1e-13 * std::max(scale, 1e-30));
  return std::exp(-z) * scaled;
}

double bessel_k1_series(double z) {
  // K_1(z) ~ sqrt(pi/(2z)) e^{-z} sum_k a_k / z^k with
  // a_k = prod_{j=1..k} (4 - (2j-1)^2) / (k! 8^k); asymptotic, so stop at
  // the smallest term
  const double pref = std::sqrt(M_PI / (2.0 * z)) * std::exp(-z);
  double term = 1.0;
  double sum = 1.0;
  double prev_abs = 1.0;
  for (int k = 1; k <= 24; ++k) {
    const double num = 4.0 - (2.0 * k - 1.0) * (2.0 * k - 1.0);
    term *= num / (8.0 * k * z);
    if (std::abs(term) >= prev_abs) break;  // series started diverging
    sum += term;
    prev_abs = std::abs(term);
    if (prev_abs < 1e-14 * std::abs(sum)) break;
  }
  return pref * sum;
}

double bessel_k1(double z) {
  if (!(z > 0.0)) throw std::invalid_argument("bessel_k1: z must be > 0");
  return z < kCrossover ? bessel_k1_integral(z) : bessel_k1_series(z);
}

}  // namespace areatail
