#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

namespace areatail {

// Kahan-Neumaier compensated accumulator.
class KahanSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }
  void merge(const KahanSum& other) {
    add(other.sum_);
    add(other.comp_);
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

using RealFn = std::function<double(double)>;

// Adaptive Simpson on [a,b]; tol is treated as an absolute tolerance for the
// segment, with subdivision down to a depth cap.
double integrate(const RealFn& f, double a, double b, double tol);

// Integral over [a, +inf): doubling segments until the last one contributes
// less than tol_rel of the running total (the integrand must decay).
double integrate_to_inf(const RealFn& f, double a, double tol_rel);

// Solve h(t) = target for increasing h on [lo, hi] with optional derivative;
// safeguarded Newton with bisection fallback, relative tolerance on t.
double solve_increasing(const RealFn& h, const RealFn& dh, double target,
                        double lo, double hi, double rel_tol = 1e-13,
                        int max_iter = 200);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// 95% normal interval for a binomial proportion, widened at the top by the
// worst-case truncated mass.
Interval binomial_ci95(double p_hat, double stderr_, std::uint64_t n,
                       std::uint64_t truncated);

}  // namespace areatail
