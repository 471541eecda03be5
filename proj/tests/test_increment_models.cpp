#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "areatail/increment_model.hpp"
#include "areatail/rng.hpp"
#include "oracle_helpers.hpp"

using namespace areatail;

namespace {

// frozen by the high-precision quadrature oracle before the build
constexpr double kWeibullEY = 1.0359399328607740;
constexpr double kWeibullVarY = 1.0446957090948434;
constexpr double kLognormalEY = 1.2147940510566379;
constexpr double kLognormalVarY = 1.2317123268610661;

}  // namespace

TEST_CASE("weibull model construction") {
  const IncrementModel m = make_weibull_model(0.3, 1.0);
  CHECK(m.drift_a == 1.0);
  CHECK(m.e_y == doctest::Approx(kWeibullEY).epsilon(1e-10));
  CHECK(m.shift_c == doctest::Approx(kWeibullEY + 1.0).epsilon(1e-10));
  CHECK(m.variance == doctest::Approx(kWeibullVarY).epsilon(1e-9));
  CHECK(m.g.eval(8.0) == doctest::Approx(1.86606598307).epsilon(1e-9));
  CHECK(m.g.gamma0 == 0.3);
  CHECK(m.tail_constant == doctest::Approx(1.0).epsilon(1e-12));
  // exact tail values, frozen
  CHECK(m.y_tail(0.5) == doctest::Approx(0.81622673663712710).epsilon(1e-13));
  CHECK(m.y_tail(2.0) == doctest::Approx(0.072989566371624157).epsilon(1e-13));
  CHECK(m.y_tail(20.0) == doctest::Approx(2.1434566279610899e-4).epsilon(1e-13));
  CHECK_THROWS_AS(make_weibull_model(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_weibull_model(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_weibull_model(0.3, -1.0), std::invalid_argument);
}

TEST_CASE("pareto model construction") {
  const IncrementModel m = make_pareto_model(3.0, 1.0);
  CHECK(m.e_y == 1.5);  // alpha/(alpha-1), closed form
  CHECK(m.shift_c == 2.5);
  CHECK(m.variance == doctest::Approx(0.75).epsilon(1e-14));
  // x g'(x) == alpha - 2 == 1 for every x, so (sc4) must fail
  CHECK(m.g.deriv(7.0) * 7.0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.y_tail(0.5) == 1.0);
  CHECK(m.y_tail(2.0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK_THROWS_AS(make_pareto_model(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("lognormal model construction") {
  const IncrementModel m = make_lognormal_model(1.0, 1.0);
  CHECK(m.e_y == doctest::Approx(kLognormalEY).epsilon(1e-10));
  CHECK(m.variance == doctest::Approx(kLognormalVarY).epsilon(1e-9));
  CHECK(m.g.eval(std::exp(2.0)) == doctest::Approx(2.0).epsilon(1e-13));
  // x g'(x) = ln x
  CHECK(m.g.deriv(100.0) * 100.0 ==
        doctest::Approx(std::log(100.0)).epsilon(1e-13));
  CHECK(m.y_tail(5.0) == doctest::Approx(0.010954323922919417).epsilon(1e-13));
  CHECK(m.y_tail(1.0) == doctest::Approx(0.47095839143021358).epsilon(1e-13));
  CHECK_THROWS_AS(make_lognormal_model(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("lattice model") {
  const IncrementModel m = make_lattice_model(0.3);
  CHECK(m.drift_a == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(m.variance == doctest::Approx(0.84).epsilon(1e-15));
  CHECK(m.x_tail(0.0) == 0.3);
  CHECK(m.x_tail(1.0) == 0.0);
  CHECK(m.x_tail(-1.5) == 1.0);
  CHECK(m.increment_from_u(0.9) == -1.0);  // u >= p maps to -1
  CHECK(m.increment_from_u(0.29) == 1.0);
  CHECK_THROWS_AS(make_lattice_model(0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_lattice_model(0.0), std::invalid_argument);
}

TEST_CASE("degenerate model is X == -a") {
  const IncrementModel m = make_degenerate_model(1.0);
  SampleStream rng(1, 0);
  for (int i = 0; i < 10; ++i) CHECK(m.sample(rng) == -1.0);
  CHECK(m.x_tail(0.0) == 0.0);
  CHECK(m.x_tail(-1.5) == 1.0);
}

TEST_CASE("pareto inverse transform closed form") {
  const IncrementModel m = make_pareto_model(3.0, 1.0);
  CHECK(m.y_quantile(0.001) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(m.increment_from_u(0.001) == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("quantile inverts the exact tail") {
  SampleStream rng(7, 1);
  for (const IncrementModel& m :
       {make_weibull_model(0.3, 1.0), make_weibull_model(0.7, 0.5),
        make_pareto_model(3.0, 1.0), make_lognormal_model(1.0, 1.0),
        make_lognormal_model(0.5, 2.0)}) {
    for (int i = 0; i < 200; ++i) {
      const double u = rng.next_u01();
      const double t = m.y_quantile(u);
      CHECK(m.y_tail(t) == doctest::Approx(u).epsilon(1e-10));
    }
    // deep tail draws
    for (double u : {1e-6, 1e-12, 1e-30}) {
      const double t = m.y_quantile(u);
      CHECK(m.y_tail(t) == doctest::Approx(u).epsilon(1e-9));
    }
  }
}

TEST_CASE("shift identity: x_tail(v) equals y_tail(v + c)") {
  const IncrementModel m = make_weibull_model(0.3, 1.0);
  for (double v : {-1.0, 0.0, 0.5, 3.0, 25.0, 140.0})
    CHECK(m.x_tail(v) == m.y_tail(v + m.shift_c));
}

TEST_CASE("empirical tail of 1e6 samples matches the exact tail") {
  struct Probe {
    IncrementModel m;
    double x;
  };
  const Probe probes[] = {{make_pareto_model(3.0, 1.0), 2.0},
                          {make_weibull_model(0.3, 1.0), 1.0},
                          {make_lattice_model(0.3), 0.0}};
  const std::uint64_t n = 1'000'000;
  for (const auto& [m, x] : probes) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      SampleStream rng(99, i);
      if (m.sample(rng) > x) ++hits;
    }
    const double p = m.x_tail(x);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CHECK(std::abs(static_cast<double>(hits) / n - p) <= 4.0 * se);
  }
}

TEST_CASE("moment consistency against a Romberg oracle") {
  for (const IncrementModel& m :
       {make_weibull_model(0.3, 1.0), make_lognormal_model(1.0, 1.0)}) {
    const auto tail = [&m](double t) { return m.y_tail(t); };
    double ey = 0.0;
    double ey2 = 0.0;
    double lo = 0.0;
    for (double hi : {1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 8192.0, 65536.0,
                      1048576.0}) {
      ey += oracle::romberg(tail, lo, hi);
      ey2 += oracle::romberg([&](double t) { return 2.0 * t * tail(t); }, lo,
                             hi);
      lo = hi;
    }
    CHECK(m.e_y == doctest::Approx(ey).epsilon(1e-6));
    CHECK(m.variance == doctest::Approx(ey2 - ey * ey).epsilon(1e-4));
    // drift: E X = E Y - c = -a by the shift construction
    CHECK(ey - m.shift_c == doctest::Approx(-m.drift_a).epsilon(1e-6));
  }
}

TEST_CASE("(sc3) holds on the asserted grid for the built-in families") {
  for (const IncrementModel& m :
       {make_weibull_model(0.3, 1.0), make_pareto_model(3.0, 1.0),
        make_lognormal_model(1.0, 1.0)}) {
    for (double mult : {1.0, 3.0, 10.0, 100.0, 1e4, 1e6}) {
      const double x = m.g.x_min * mult;
      CHECK(m.g.deriv(x) * x / m.g.eval(x) <= m.g.gamma0 + 1e-9);
    }
  }
}

TEST_CASE("validate_class verdicts") {
  const std::vector<double> grid = {60.0,    100.0,    300.0,    1000.0,
                                    10000.0, 100000.0, 1000000.0};
  const ClassReport w = validate_class(make_weibull_model(0.3, 1.0), grid);
  CHECK(w.sc1_pass);
  CHECK(w.sc2_pass);
  CHECK(w.sc3_pass);
  CHECK(w.sc4_pass);
  CHECK(w.sc5_pass);
  CHECK(w.sc1_slack <= 1e-12);  // exact-tail construction above threshold

  const ClassReport p = validate_class(make_pareto_model(3.0, 1.0), grid);
  CHECK(p.sc1_pass);
  CHECK(p.sc2_pass);
  CHECK(p.sc3_pass);
  CHECK_FALSE(p.sc4_pass);  // x g'(x) == 1 identically
  for (double v : p.sc4_trend) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  const ClassReport l = validate_class(make_lognormal_model(1.0, 1.0), grid);
  CHECK(l.sc4_pass);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(l.sc4_trend[i] == doctest::Approx(std::log(grid[i])).epsilon(1e-12));

  CHECK_THROWS_AS(validate_class(make_lattice_model(0.3), grid),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      validate_class(make_pareto_model(3.0, 1.0), {1.0, 2.0}),  // below x_min
      std::invalid_argument);
}

TEST_CASE("model JSON round trip") {
  for (const char* text :
       {R"({"family":"weibull","params":{"beta":0.3},"drift_a":1.0})",
        R"({"family":"pareto","params":{"alpha":3.0},"drift_a":0.5})",
        R"({"family":"lattice","params":{"p":0.3}})"}) {
    const IncrementModel m = model_from_json_text(text);
    const IncrementModel m2 = model_from_json_text(model_to_json_text(m));
    CHECK(m.family == m2.family);
    CHECK(m.drift_a == m2.drift_a);
    CHECK(m.params == m2.params);
  }
  CHECK_THROWS(model_from_json_text(R"({"family":"cauchy","params":{}})"));
}

TEST_CASE("tail is a valid survival function") {
  SampleStream rng(13, 3);
  for (const IncrementModel& m :
       {make_weibull_model(0.3, 1.0), make_pareto_model(3.0, 1.0),
        make_lognormal_model(1.0, 1.0), make_lattice_model(0.3)}) {
    CHECK(m.x_tail(-1e12) == 1.0);
    CHECK(m.x_tail(1e12) <= 1e-12);
    for (int i = 0; i < 300; ++i) {
      const double v1 = -5.0 + 30.0 * rng.next_u01();
      const double v2 = v1 + 10.0 * rng.next_u01();
      CHECK(m.x_tail(v1) >= m.x_tail(v2));
    }
  }
}
