#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "urysohn/quadrature.hpp"
#include "urysohn/test_functions.hpp"

using namespace urysohn;

namespace {

double integrate_fn(const QuadratureMeasure& mu, const std::function<double(double)>& f) {
  return integrate(mu, GridFunction::sample(mu.domain_ptr(), f))[0];
}

}  // namespace

TEST(LebesgueRule, TrapezoidIntegratesOne) {
  for (std::size_t n : {2u, 3u, 17u, 1000u}) {
    auto mu = lebesgue_rule(0, 1, n, Scheme::trapezoid);
    EXPECT_NEAR(integrate_fn(mu, [](double) { return 1.0; }), 1.0, 1e-15);
  }
}

TEST(LebesgueRule, GaussLegendreIsExactForDegreeNine) {
  auto mu = lebesgue_rule(0, 1, 5, Scheme::gauss_legendre);
  EXPECT_NEAR(integrate_fn(mu, [](double x) { return std::pow(x, 9); }), 0.1, 1e-14);
}

TEST(LebesgueRule, MidpointFourPointsOnSquare) {
  auto mu = lebesgue_rule(0, 1, 4, Scheme::midpoint);
  EXPECT_NEAR(integrate_fn(mu, [](double x) { return x * x; }), 0.328125, 1e-15);
  EXPECT_NEAR(mu.domain().coord(0), 0.125, 1e-15);
  EXPECT_NEAR(mu.domain().coord(3), 0.875, 1e-15);
}

TEST(LebesgueRule, TotalMassIsLength) {
  for (Scheme s : {Scheme::trapezoid, Scheme::midpoint, Scheme::gauss_legendre}) {
    for (std::size_t n : {2u, 5u, 64u, 801u}) {
      for (auto [a, b] : {std::pair{0.0, 1.0}, std::pair{-10.0, 10.0}, std::pair{-0.25, 3.5}}) {
        auto mu = lebesgue_rule(a, b, n, s);
        EXPECT_NEAR(mu.total_mass(), b - a, 1e-13 * (b - a)) << scheme_name(s) << " n=" << n;
        for (double w : mu.weights()) EXPECT_GE(w, 0.0);
      }
    }
  }
}

TEST(LebesgueRule, DomainCarriesRuleNodes) {
  auto mu = lebesgue_rule(-1, 1, 6, Scheme::gauss_legendre);
  auto [t, w] = gauss_legendre(6);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(mu.domain().coord(i), t[i]);
    EXPECT_DOUBLE_EQ(mu.weight(i), w[i]);
  }
  EXPECT_TRUE(lebesgue_rule(0, 2, 9, Scheme::trapezoid).domain().is_uniform());
}

TEST(LebesgueRule, RejectsBadInput) {
  EXPECT_THROW(lebesgue_rule(1, 0, 4, Scheme::trapezoid), InputError);
  EXPECT_THROW(lebesgue_rule(0, 1, 1, Scheme::trapezoid), InputError);
  EXPECT_THROW(lebesgue_rule(0, 1, 0, Scheme::midpoint), InputError);
  EXPECT_THROW(parse_scheme("simpson"), InputError);
  EXPECT_EQ(parse_scheme("gauss_legendre"), Scheme::gauss_legendre);
}

TEST(GaussLegendre, NodesAreSymmetricAndPolynomialExact) {
  for (std::size_t n : {1u, 2u, 3u, 8u, 33u, 200u}) {
    auto [x, w] = gauss_legendre(n);
    double mass = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(x[i], -x[n - 1 - i]);
      EXPECT_EQ(w[i], w[n - 1 - i]);
      EXPECT_GT(w[i], 0.0);
      if (i > 0) EXPECT_GT(x[i], x[i - 1]);
      mass += w[i];
    }
    EXPECT_NEAR(mass, 2.0, 1e-13);
    // exact up to degree 2n-1: int_{-1}^{1} x^k = 2/(k+1) for even k
    for (std::size_t k = 0; k < 2 * n && k <= 40; k += 2) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += w[i] * std::pow(x[i], static_cast<double>(k));
      EXPECT_NEAR(s, 2.0 / static_cast<double>(k + 1), 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(NystromMeasure, SingletonIsEvaluationMap) {
  auto d = DiscreteDomain::from_coordinates({0.7});
  auto mu = nystrom_measure(d, {2.5});
  auto u = GridFunction::sample(d, [](double x) { return std::exp(x); });
  EXPECT_DOUBLE_EQ(integrate(mu, u)[0], 2.5 * std::exp(0.7));
}

TEST(NystromMeasure, NullMeasureGivesZero) {
  auto d = DiscreteDomain::uniform_interval(0, 1, 9);
  auto mu = nystrom_measure(d, std::vector<double>(9, 0.0));
  EXPECT_EQ(mu.total_mass(), 0.0);
  EXPECT_EQ(integrate(mu, GridFunction::sample(d, [](double x) { return 1 + x; }))[0], 0.0);
}

TEST(NystromMeasure, TrapezoidWeightsBitIdentical) {
  auto mu = lebesgue_rule(-2, 3, 41, Scheme::trapezoid);
  auto nm = nystrom_measure(mu.domain_ptr(), mu.weights());
  auto u = GridFunction::sample(mu.domain_ptr(), random_piecewise_linear(6, -2, 3));
  EXPECT_EQ(integrate(mu, u)[0], integrate(nm, u)[0]);
  EXPECT_EQ(mu.total_mass(), nm.total_mass());
}

TEST(NystromMeasure, NegativeWeightIsUnstable) {
  auto d = DiscreteDomain::uniform_interval(0, 1, 3);
  try {
    nystrom_measure(d, {0.5, -0.1, 0.5});
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("unstable rule"), std::string::npos);
  }
  EXPECT_THROW(nystrom_measure(d, {0.5, 0.5}), InputError);
}

TEST(Integrate, ConstantGivesMassTimesValue) {
  auto mu = lebesgue_rule(-1, 4, 37, Scheme::gauss_legendre);
  EXPECT_NEAR(integrate_fn(mu, [](double) { return -1.75; }), -1.75 * 5.0, 1e-13);
}

TEST(Integrate, IsLinear) {
  auto mu = lebesgue_rule(0, 1, 101, Scheme::trapezoid);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto u = GridFunction::sample(mu.domain_ptr(), random_piecewise_linear(s, 0, 1));
    auto v = GridFunction::sample(mu.domain_ptr(), random_piecewise_linear(s + 99, 0, 1));
    const double lhs = integrate(mu, lincomb(2.0, u, 1.0, v))[0];
    const double rhs = 2.0 * integrate(mu, u)[0] + integrate(mu, v)[0];
    EXPECT_NEAR(lhs, rhs, 1e-13 * (1 + std::fabs(rhs)));
  }
}

TEST(Integrate, TrapezoidSine) {
  auto mu = lebesgue_rule(0, std::numbers::pi, 101, Scheme::trapezoid);
  EXPECT_NEAR(integrate_fn(mu, [](double x) { return std::sin(x); }), 2.0, 1e-3);
}

TEST(Integrate, VectorValued) {
  auto mu = lebesgue_rule(0, 1, 7, Scheme::gauss_legendre);
  auto u = GridFunction::sample(mu.domain_ptr(), 2, [](double x, std::span<double> o) {
    o[0] = 1.0;
    o[1] = x;
  });
  auto r = integrate(mu, u);
  EXPECT_NEAR(r[0], 1.0, 1e-15);
  EXPECT_NEAR(r[1], 0.5, 1e-15);
}

TEST(Integrate, DomainMismatchThrows) {
  auto mu = lebesgue_rule(0, 1, 7, Scheme::trapezoid);
  auto u = GridFunction::sample(DiscreteDomain::uniform_interval(0, 1, 8), [](double) { return 1.0; });
  EXPECT_THROW(integrate(mu, u), InputError);
}

TEST(Integrate, BoundedByMassTimesSupNorm) {
  for (Scheme s : {Scheme::trapezoid, Scheme::midpoint, Scheme::gauss_legendre}) {
    auto mu = lebesgue_rule(-3, 1, 50, s);
    for (std::uint64_t k = 0; k < 30; ++k) {
      auto u = GridFunction::sample(mu.domain_ptr(), random_weierstrass(k));
      EXPECT_LE(std::fabs(integrate(mu, u)[0]), mu.total_mass() * sup_norm(u) * (1 + 1e-15));
    }
  }
}

TEST(Integrate, TrapezoidSecondOrderRatio) {
  auto f = [](double x) { return std::exp(std::sin(2 * x)); };
  // reference by a high-order rule
  const double ref = integrate_fn(lebesgue_rule(0, 1.3, 200, Scheme::gauss_legendre), f);
  for (std::size_t n : {20u, 40u, 80u}) {
    const double e1 = std::fabs(integrate_fn(lebesgue_rule(0, 1.3, n + 1, Scheme::trapezoid), f) - ref);
    const double e2 = std::fabs(integrate_fn(lebesgue_rule(0, 1.3, 2 * n + 1, Scheme::trapezoid), f) - ref);
    EXPECT_NEAR(e1 / e2, 4.0, 0.6) << "n=" << n;
  }
}

TEST(Integrate, GaussLegendreBeatsPolynomialRates) {
  auto f = [](double x) { return 1.0 / (1.0 + x * x); };
  const double exact = 2.0 * std::atan(2.0);
  double prev = INFINITY;
  for (std::size_t n : {4u, 8u, 16u, 32u}) {
    const double e = std::fabs(integrate_fn(lebesgue_rule(-2, 2, n, Scheme::gauss_legendre), f) - exact);
    if (std::isfinite(prev) && prev > 1e-14) EXPECT_LT(e, prev / 16.0) << "n=" << n;
    prev = e;
  }
  EXPECT_LT(prev, 1e-10);
}

TEST(MeasureCsv, RoundTripIsBitwise) {
  auto mu = lebesgue_rule(-1, 2, 9, Scheme::gauss_legendre);
  std::stringstream ss;
  write_measure_csv(ss, mu);
  auto back = read_measure_csv(ss);
  EXPECT_TRUE(back.domain().same_as(mu.domain()));
  EXPECT_EQ(back.weights(), mu.weights());
  auto tr = lebesgue_rule(0, 1, 11, Scheme::trapezoid);
  std::stringstream s2;
  write_measure_csv(s2, tr);
  EXPECT_TRUE(read_measure_csv(s2).domain().is_uniform());
}

TEST(MeasureCsv, NegativeWeightNamesLine) {
  std::stringstream ss("x,w\n0,0.5\n1,-0.5\n");
  try {
    read_measure_csv(ss);
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
