#include "areatail/lattice_dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "areatail/numeric.hpp"

namespace areatail {

namespace {
constexpr double kPrune = 1e-22;
constexpr double kStopMass = 1e-16;
}  // namespace

LatticeDpResult dp_exact_lattice(double p, double x, int area_cap,
                                 int height_cap) {
  if (!(p > 0.0 && p < 0.5))
    throw std::invalid_argument("dp_exact_lattice: p must lie in (0, 1/2)");
  if (area_cap < 2 || height_cap < 2)
    throw std::invalid_argument("dp_exact_lattice: caps too small");
  if (!(x < static_cast<double>(area_cap) - 1.0))
    throw std::invalid_argument(
        "dp_exact_lattice: x must be below area_cap (exactness would be lost)");
  const double q = 1.0 - p;

  // state[h][a]: walk alive at height h >= 1 with running area a, where a
  // already includes the current S_k; a == area_cap is the "> cap" lump
  const int n_a = area_cap + 1;
  auto idx = [n_a](int h, int a) { return h * n_a + a; };
  std::vector<double> cur(static_cast<std::size_t>(height_cap + 2) * n_a, 0.0);
  std::vector<double> nxt(cur.size(), 0.0);

  std::vector<double> area_mass(n_a, 0.0);  // absorbed mass by final area
  std::vector<double> tau_pmf;              // tau_pmf[k] = P(tau = k), k >= 1
  tau_pmf.push_back(0.0);

  double pruned = 0.0;
  double escaped = 0.0;

  // step 1: exit immediately with area 0, or move to (1, area 1)
  tau_pmf.push_back(q);
  area_mass[0] += q;
  cur[idx(1, 1)] = p;
  double walking = p;

  int max_h = 1;
  std::uint64_t steps = 1;
  const std::uint64_t step_limit = 2'000'000;
  while (walking > kStopMass) {
    if (++steps > step_limit)
      throw std::runtime_error("dp_exact_lattice: step budget exhausted");
    double absorbed_now = 0.0;
    double new_walking = 0.0;
    int new_max_h = 1;
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int h = 1; h <= max_h; ++h) {
      for (int a = 0; a < n_a; ++a) {
        const double mass = cur[idx(h, a)];
        if (mass == 0.0) continue;
        if (mass < kPrune) {
          pruned += mass;
          continue;
        }
        // step down
        const double down = mass * q;
        if (h == 1) {
          absorbed_now += down;
          area_mass[a] += down;
        } else {
          const int na = std::min(a + h - 1, area_cap);
          nxt[idx(h - 1, na)] += down;
          new_walking += down;
          if (h - 1 > new_max_h) new_max_h = h - 1;
        }
        // step up
        const double up = mass * p;
        if (h + 1 > height_cap) {
          escaped += up;
        } else {
          const int na = std::min(a + h + 1, area_cap);
          nxt[idx(h + 1, na)] += up;
          new_walking += up;
          if (h + 1 > new_max_h) new_max_h = h + 1;
        }
      }
    }
    tau_pmf.push_back(absorbed_now);
    cur.swap(nxt);
    walking = new_walking;
    max_h = new_max_h;
  }

  LatticeDpResult r;
  // remaining alive mass is unresolved; with negative drift it would exit
  // with positive area and large tau, so it can only shift results by its own
  // size. Same for pruned/escaped mass.
  r.neglected = walking + pruned + escaped;
  if (!(r.neglected < 1e-12))
    throw std::runtime_error("dp_exact_lattice: caps too small for 1e-12 mass");

  KahanSum pa;
  for (int a = 0; a < n_a; ++a) {
    if (static_cast<double>(a) > x || a == area_cap) pa.add(area_mass[a]);
  }
  r.p_area_gt = pa.value();

  // E tau = sum_k k P(tau = k); the remainder is covered by `neglected`
  KahanSum et;
  const std::size_t k_cap = tau_pmf.size() - 1;
  r.tau_gt.assign(k_cap + 1, 0.0);
  double gt = r.neglected;  // unresolved mass has tau beyond every recorded k
  for (std::size_t j = k_cap;; --j) {
    r.tau_gt[j] = gt;
    if (j == 0) break;
    et.add(static_cast<double>(j) * tau_pmf[j]);
    gt += tau_pmf[j];
  }
  r.e_tau = et.value();
  return r;
}

}  // namespace areatail
