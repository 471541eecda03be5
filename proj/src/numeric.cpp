#include "areatail/numeric.hpp"

#include <algorithm>

namespace areatail {

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const RealFn& f, double a, double b, double fa, double fm,
                double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol)
    return left + right + err / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const RealFn& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = simpson(fa, fm, fb, b - a);
  return adaptive(f, a, b, fa, fm, fb, whole, tol, 48);
}

double integrate_to_inf(const RealFn& f, double a, double tol_rel) {
  double lo = a;
  double width = std::max(1.0, std::abs(a));
  KahanSum total;
  for (int seg = 0; seg < 128; ++seg) {
    const double hi = lo + width;
    const double part =
        integrate(f, lo, hi, tol_rel * std::max(1.0, std::abs(total.value())) / 64.0);
    total.add(part);
    if (seg > 2 && std::abs(part) <= tol_rel * std::abs(total.value())) break;
    lo = hi;
    width *= 2.0;
  }
  return total.value();
}

double solve_increasing(const RealFn& h, const RealFn& dh, double target,
                        double lo, double hi, double rel_tol, int max_iter) {
  double flo = h(lo) - target;
  if (flo >= 0.0) return lo;
  double fhi = h(hi) - target;
  int expand = 0;
  while (fhi < 0.0) {
    if (++expand > 200)
      throw std::runtime_error("solve_increasing: failed to bracket root");
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    fhi = h(hi) - target;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const double ft = h(t) - target;
    if (ft > 0.0)
      hi = t;
    else
      lo = t;
    double next = t;
    bool newton_ok = false;
    if (dh) {
      const double d = dh(t);
      if (d > 0.0 && std::isfinite(d)) {
        next = t - ft / d;
        newton_ok = next > lo && next < hi;
      }
    }
    if (!newton_ok) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= rel_tol * std::max(std::abs(next), 1e-300)) {
      return next;
    }
    t = next;
    if (hi - lo <= rel_tol * std::max(std::abs(t), 1e-300)) return t;
  }
  throw std::runtime_error("solve_increasing: no convergence (malformed tail?)");
}

Interval binomial_ci95(double p_hat, double stderr_, std::uint64_t n,
                       std::uint64_t truncated) {
  Interval ci;
  ci.lo = std::max(0.0, p_hat - 1.959963984540054 * stderr_);
  ci.hi = p_hat + 1.959963984540054 * stderr_;
  if (n > 0 && truncated > 0)
    ci.hi += static_cast<double>(truncated) / static_cast<double>(n);
  ci.hi = std::min(1.0, ci.hi);
  return ci;
}

}  // namespace areatail
