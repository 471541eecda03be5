#pragma once

#include <cstdint>
#include <vector>

namespace areatail {

// Exact distribution facts for the +/-1 lattice walk with P(+1) = p < 1/2,
// computed by dynamic programming over (height, accumulated area) states.
struct LatticeDpResult {
  double p_area_gt = 0.0;        // P(A_tau > x), strict inequality
  double e_tau = 0.0;            // E tau
  std::vector<double> tau_gt;    // tau_gt[k] = P(tau > k), k = 0..k_cap
  double neglected = 0.0;        // certified bound on unaccounted mass
};

// area_cap: areas are tracked exactly up to area_cap (mass beyond it is
// lumped, which keeps P(A_tau > x) exact for x < area_cap). height_cap bounds
// the walk height; mass escaping it is counted into `neglected`. Throws if
// the certified neglected mass exceeds 1e-12.
LatticeDpResult dp_exact_lattice(double p, double x, int area_cap = 256,
                                 int height_cap = 512);

}  // namespace areatail
