#pragma once

namespace areatail {

// Modified Bessel function of the second kind, order 1. Computed from the
// integral representation int_0^inf e^{-z cosh t} cosh t dt for moderate z
// and from the large-z asymptotic series beyond the crossover; relative
// error <= 1e-10 on z > 0.
double bessel_k1(double z);

// Exposed for the crossover cross-check.
double bessel_k1_integral(double z);
double bessel_k1_series(double z);

}  // namespace areatail
