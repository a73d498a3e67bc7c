#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "urysohn/ide.hpp"

using namespace urysohn;

namespace {

FredholmKernel constant_kernel(double c) {
  FredholmKernel k;
  k.name = "constant";
  k.eval = [c](double, double, std::span<double> o) { o[0] = c; };
  return k;
}

GridFunction bump(const DomainPtr& d, double center = 0.0) {
  return GridFunction::sample(d, [center](double x) { return 0.1 * std::exp(-(x - center) * (x - center)); });
}

GridFunction plain_iterate(const HammersteinOperator& op, GridFunction u, std::size_t steps) {
  for (std::size_t t = 0; t < steps; ++t) u = op.apply(u);
  return u;
}

}  // namespace

TEST(Orbit, ZeroKernelCollapses) {
  auto mu = lebesgue_rule(-1, 1, 21, Scheme::trapezoid);
  HammersteinOperator op(constant_kernel(0.0), beverton_holt(2, 1), mu);
  const auto rec = iterate(op, bump(mu.domain_ptr()), 3);
  ASSERT_EQ(rec.states.size(), 4u);
  EXPECT_GT(rec.sup_norms[0], 0.0);
  for (std::size_t t = 1; t < 4; ++t) EXPECT_EQ(rec.sup_norms[t], 0.0);
  EXPECT_FALSE(rec.overflow);
}

TEST(Orbit, SpreadingReachesDiscretePlateau) {
  auto mu = lebesgue_rule(-30, 30, 601, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), beverton_holt(2, 1), mu);
  const auto rec = iterate(op, bump(mu.domain_ptr()), 300, 0.5);
  ASSERT_EQ(rec.states.size(), 301u);
  ASSERT_EQ(rec.holder_seminorms.size(), 301u);
  // far from the edges the state is the constant fixed point u = 2m - 1 of
  // u = m g(u), with m = (h/2) coth(h/2) the trapezoid mass of the kernel.
  // The edge deficit reaches the center damped by about exp(-30 / sqrt 2).
  const double h = 0.1;
  const double m = 0.5 * h / std::tanh(0.5 * h);
  const double last = rec.sup_norms.back();
  EXPECT_NEAR(last, 2 * m - 1, 1e-6);
  EXPECT_LT(std::fabs(last - rec.sup_norms[299]), 1e-10);
  for (const auto& s : rec.states) {
    for (double v : s.values()) EXPECT_GE(v, 0.0);
  }
  for (std::size_t c : rec.clamp_audit) EXPECT_EQ(c, 0u);
}

TEST(Orbit, AveragingKernelConservesMass) {
  auto mu = lebesgue_rule(0, 2, 41, Scheme::gauss_legendre);
  HammersteinOperator op(constant_kernel(0.5), identity_growth(), mu);
  auto u0 = GridFunction::sample(mu.domain_ptr(), [](double x) { return std::sin(3 * x) + x; });
  const double m0 = integrate(mu, u0)[0];
  const auto rec = iterate(op, u0, 5);
  for (const auto& s : rec.states) EXPECT_NEAR(integrate(mu, s)[0], m0, 1e-13);
  // after one step the state is the constant mean
  EXPECT_NEAR(rec.states[1].value(0), m0 / 2.0, 1e-14);
}

TEST(Orbit, ClampsAreAudited) {
  auto mu = lebesgue_rule(-1, 1, 11, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), beverton_holt(2, 1), mu);
  auto u0 = GridFunction::sample(mu.domain_ptr(), [](double x) { return x; });
  const auto rec = iterate(op, u0, 2);
  EXPECT_EQ(rec.clamp_audit[0], 5u);
  EXPECT_EQ(rec.clamp_audit[1], 0u);
}

TEST(Orbit, OverflowGuardStopsEarly) {
  auto mu = lebesgue_rule(0, 1, 5, Scheme::trapezoid);
  HammersteinOperator op(constant_kernel(100.0), identity_growth(), mu);
  const auto rec = iterate(op, GridFunction::constant(mu.domain_ptr(), 1.0), 50);
  EXPECT_TRUE(rec.overflow);
  EXPECT_EQ(rec.states.size(), 8u);  // 100^7 > 1e12
  EXPECT_NE(rec.status.find("step 7"), std::string::npos) << rec.status;
}

TEST(Orbit, RejectsBadArguments) {
  auto mu = lebesgue_rule(0, 1, 5, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), beverton_holt(2, 1), mu);
  EXPECT_THROW(iterate(op, GridFunction::constant(mu.domain_ptr(), 1.0), 0), InputError);
  HammersteinOperator other(FredholmOperator(laplace_dispersal(1), mu, DiscreteDomain::uniform_interval(0, 1, 7)),
                            NemytskiiOperator(beverton_holt(2, 1), mu.domain_ptr()));
  EXPECT_THROW(iterate(other, GridFunction::constant(mu.domain_ptr(), 1.0), 1), InputError);
}

TEST(Orbit, CsvColumns) {
  auto mu = lebesgue_rule(0, 1, 5, Scheme::trapezoid);
  HammersteinOperator op(constant_kernel(0.0), identity_growth(), mu);
  std::stringstream with, without;
  write_csv(with, iterate(op, GridFunction::constant(mu.domain_ptr(), 2.0), 1, 0.5));
  write_csv(without, iterate(op, GridFunction::constant(mu.domain_ptr(), 2.0), 1));
  EXPECT_EQ(with.str(), "step,sup_norm,holder_seminorm,clamps\n0,2,0,0\n1,0,0,0\n");
  EXPECT_EQ(without.str(), "step,sup_norm,clamps\n0,2,0\n1,0,0\n");
}

TEST(Newton, ZeroIsAFixedPoint) {
  auto mu = lebesgue_rule(-2, 2, 21, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), beverton_holt(2, 1), mu);
  const auto res = newton_fixed_point(op, GridFunction::constant(mu.domain_ptr(), 0.0), {.pre_iterations = 0});
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.newton_steps, 0u);
  EXPECT_EQ(sup_norm(res.u_star), 0.0);
}

TEST(Newton, ConvergesQuadraticallyToIterationLimit) {
  auto mu = lebesgue_rule(-10, 10, 401, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), beverton_holt(2, 1), mu);
  const auto u0 = bump(mu.domain_ptr());
  const auto res = newton_fixed_point(op, u0, {.max_iter = 10, .pre_iterations = 15});
  ASSERT_TRUE(res.converged) << res.message;
  EXPECT_LE(res.newton_steps, 10u);
  EXPECT_LE(res.residual_history.back(), 1e-10);
  // independent residual
  EXPECT_LE(sup_norm(res.u_star - op.apply(res.u_star)), 1e-10);
  const auto oracle = plain_iterate(op, u0, 500);
  EXPECT_LE(sup_norm(res.u_star - oracle), 1e-8);
  const auto& r = res.residual_history;
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (r[k - 1] < 1e-2 && r[k] > 1e-14) EXPECT_LE(r[k], std::pow(r[k - 1], 1.5)) << "k=" << k;
  }
  for (double t : res.step_lengths) EXPECT_EQ(t, 1.0);
}

TEST(Newton, ReflectionEquivariance) {
  auto mu = lebesgue_rule(-6, 6, 121, Scheme::trapezoid);
  HammersteinOperator op(gaussian_dispersal(1), ricker(1.2), mu);
  const auto a = newton_fixed_point(op, bump(mu.domain_ptr(), 1.5), {.pre_iterations = 20});
  const auto b = newton_fixed_point(op, bump(mu.domain_ptr(), -1.5), {.pre_iterations = 20});
  ASSERT_TRUE(a.converged && b.converged);
  const std::size_t n = mu.size();
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a.u_star.value(i), b.u_star.value(n - 1 - i), 1e-9);
}

TEST(Newton, AffineMapSolvedInOneStep) {
  auto mu = lebesgue_rule(-3, 3, 61, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), affine(1, {0.5}, {0.1}), mu);
  const auto res = newton_fixed_point(op, GridFunction::constant(mu.domain_ptr(), 0.0), {.pre_iterations = 0});
  ASSERT_TRUE(res.converged);
  EXPECT_EQ(res.newton_steps, 1u);
  EXPECT_LE(sup_norm(res.u_star - op.apply(res.u_star)), 1e-13);
}

TEST(Newton, SingularLinearizationIsReported) {
  auto mu = lebesgue_rule(0, 2, 11, Scheme::trapezoid);
  HammersteinOperator op(constant_kernel(0.5), identity_growth(), mu);
  auto u0 = GridFunction::sample(mu.domain_ptr(), [](double x) { return x; });
  try {
    newton_fixed_point(op, u0, {.pre_iterations = 0});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("singular linearization"), std::string::npos) << e.what();
  }
}

TEST(Newton, PreIterationDivergenceIsNumericalError) {
  auto mu = lebesgue_rule(0, 1, 5, Scheme::trapezoid);
  HammersteinOperator op(constant_kernel(100.0), identity_growth(), mu);
  EXPECT_THROW(newton_fixed_point(op, GridFunction::constant(mu.domain_ptr(), 1.0), {.pre_iterations = 20}),
               NumericalError);
}

TEST(Newton, CsvAndRatios) {
  NewtonResult r{GridFunction::constant(DiscreteDomain::uniform_interval(0, 1, 2), 0.0), {1e-2, 1e-5, 1e-11}};
  const auto q = r.quadratic_ratios();
  ASSERT_EQ(q.size(), 2u);
  EXPECT_NEAR(q[0], 0.1, 1e-12);
  EXPECT_NEAR(q[1], 0.1, 1e-12);
  std::stringstream ss;
  write_csv(ss, r);
  std::stringstream rows;
  rows << "iterate,residual\n";
  for (std::size_t k = 0; k < 3; ++k) rows << k << ',' << detail::format_double(r.residual_history[k]) << '\n';
  EXPECT_EQ(ss.str(), rows.str());
}
