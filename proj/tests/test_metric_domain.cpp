#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "urysohn/holder.hpp"
#include "urysohn/metric_domain.hpp"
#include "urysohn/test_functions.hpp"

using namespace urysohn;

TEST(UniformInterval, TwoEndpoints) {
  auto d = DiscreteDomain::uniform_interval(0, 1, 2);
  ASSERT_EQ(d->size(), 2u);
  EXPECT_EQ(d->coord(0), 0.0);
  EXPECT_EQ(d->coord(1), 1.0);
  EXPECT_EQ(d->diameter(), 1.0);
}

TEST(UniformInterval, SymmetricThreePoints) {
  auto d = DiscreteDomain::uniform_interval(-1, 1, 3);
  EXPECT_EQ(d->coord(0), -1.0);
  EXPECT_EQ(d->coord(1), 0.0);
  EXPECT_EQ(d->coord(2), 1.0);
  EXPECT_EQ(d->dist(0, 2), 2.0);
  EXPECT_EQ(d->dist(2, 0), 2.0);
}

TEST(UniformInterval, MeshWidth) {
  auto d = DiscreteDomain::uniform_interval(0, 1, 101);
  EXPECT_NEAR(d->dist(0, 1), 0.01, 1e-15);
  EXPECT_EQ(d->diameter(), 1.0);
}

TEST(UniformInterval, DiameterIsExactlyLength) {
  for (auto [a, b] : {std::pair{-0.3, 0.7}, std::pair{-10.0, 10.0}, std::pair{1e-3, 0.1}}) {
    for (std::size_t n : {2u, 7u, 1000u}) {
      auto d = DiscreteDomain::uniform_interval(a, b, n);
      EXPECT_EQ(d->diameter(), b - a);
      EXPECT_EQ(d->dist(0, n - 1), b - a);
      EXPECT_EQ(d->coord(n - 1), b);
    }
  }
}

TEST(UniformInterval, RejectsBadInput) {
  EXPECT_THROW(DiscreteDomain::uniform_interval(1, 1, 5), InputError);
  EXPECT_THROW(DiscreteDomain::uniform_interval(2, 1, 5), InputError);
  EXPECT_THROW(DiscreteDomain::uniform_interval(0, 1, 1), InputError);
}

TEST(DiscreteDomain, MetricAxioms) {
  auto u = DiscreteDomain::uniform_interval(-2, 3, 57);
  auto c = DiscreteDomain::from_coordinates({0.3, -1.0, 2.5, 0.0, 7.0});
  for (const auto& d : {u, c}) {
    for (std::size_t i = 0; i < d->size(); ++i) {
      EXPECT_EQ(d->dist(i, i), 0.0);
      for (std::size_t j = 0; j < d->size(); ++j) {
        EXPECT_EQ(d->dist(i, j), d->dist(j, i));
        EXPECT_GE(d->dist(i, j), 0.0);
      }
    }
    EXPECT_LE(d->triangle_excess(5000, 11), 1e-15);
  }
}

TEST(DiscreteDomain, DiameterIsPairMaximum) {
  auto c = DiscreteDomain::from_coordinates({0.3, -1.0, 2.5, 0.0, 7.0});
  double m = 0;
  for (std::size_t i = 0; i < c->size(); ++i) {
    for (std::size_t j = 0; j < c->size(); ++j) m = std::max(m, c->dist(i, j));
  }
  EXPECT_EQ(c->diameter(), m);
}

TEST(DiscreteDomain, RejectsDuplicateCoordinates) {
  EXPECT_THROW(DiscreteDomain::from_coordinates({0.0, 1.0, 0.0}), InputError);
}

TEST(PointCloud, ValidatesDistanceMatrix) {
  // three points of an equilateral triangle
  auto d = DiscreteDomain::point_cloud({0, 1, 2}, {0, 1, 1, 1, 0, 1, 1, 1, 0});
  EXPECT_EQ(d->diameter(), 1.0);
  EXPECT_EQ(d->dist(0, 2), 1.0);
  EXPECT_LE(d->triangle_excess(1000, 3), 0.0);
  EXPECT_THROW(DiscreteDomain::point_cloud({0, 1}, {0, 1, 2, 0}), InputError);   // asymmetric
  EXPECT_THROW(DiscreteDomain::point_cloud({0, 1}, {1, 1, 1, 0}), InputError);   // diagonal
  EXPECT_THROW(DiscreteDomain::point_cloud({0, 1}, {0, -1, -1, 0}), InputError); // negative
  EXPECT_THROW(DiscreteDomain::point_cloud({0, 1}, {0, 1, 1}), InputError);      // shape
}

TEST(PointCloud, TriangleExcessDetectsViolation) {
  // d(0,2) = 3 > d(0,1) + d(1,2) = 2
  auto d = DiscreteDomain::point_cloud({0, 1, 2}, {0, 1, 3, 1, 0, 1, 3, 1, 0});
  EXPECT_GT(d->triangle_excess(2000, 5), 0.0);
}

TEST(GridFunction, RejectsNonFiniteAndBadSize) {
  auto d = DiscreteDomain::uniform_interval(0, 1, 3);
  EXPECT_THROW(GridFunction(d, 1, {0.0, 1.0}), InputError);
  EXPECT_THROW(GridFunction(d, 1, {0.0, NAN, 1.0}), NumericalError);
  EXPECT_THROW(GridFunction(d, 1, {0.0, INFINITY, 1.0}), NumericalError);
  EXPECT_NO_THROW(GridFunction(d, 2, {0, 1, 2, 3, 4, 5}));
}

TEST(GridFunction, VectorValuedSampling) {
  auto d = DiscreteDomain::uniform_interval(0, 1, 5);
  auto u = GridFunction::sample(d, 2, [](double x, std::span<double> o) {
    o[0] = x;
    o[1] = -2 * x;
  });
  EXPECT_EQ(u.dim(), 2u);
  EXPECT_EQ(u.value(4, 0), 1.0);
  EXPECT_EQ(u.value(4, 1), -2.0);
  EXPECT_NEAR(sup_norm(u), std::sqrt(5.0), 1e-15);
}

TEST(Restrict, EveryTenthPoint) {
  auto fine = DiscreteDomain::uniform_interval(0, 1, 101);
  auto coarse = DiscreteDomain::uniform_interval(0, 1, 11);
  auto u = GridFunction::sample(fine, [](double x) { return std::sin(5 * x); });
  auto r = restrict_to(u, coarse);
  ASSERT_EQ(r.size(), 11u);
  for (std::size_t i = 0; i < 11; ++i) EXPECT_EQ(r.value(i), u.value(10 * i));
}

TEST(Restrict, IdentityRestriction) {
  auto d = DiscreteDomain::uniform_interval(-1, 2, 37);
  auto u = GridFunction::sample(d, random_piecewise_linear(4, -1, 2));
  auto r = restrict_to(u, d);
  EXPECT_TRUE(std::equal(r.values().begin(), r.values().end(), u.values().begin()));
}

TEST(Restrict, UnmatchedPointNamesCoordinate) {
  auto fine = DiscreteDomain::uniform_interval(0, 1, 11);
  auto sub = DiscreteDomain::from_coordinates({0.0, 0.55});
  auto u = GridFunction::sample(fine, [](double x) { return x; });
  try {
    restrict_to(u, sub);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("0.55"), std::string::npos) << e.what();
  }
}

TEST(Restrict, ToleranceAbsorbsRounding) {
  auto fine = DiscreteDomain::uniform_interval(0, 1, 11);
  auto sub = DiscreteDomain::from_coordinates({0.1 + 1e-14, 0.7 - 1e-14});
  auto u = GridFunction::sample(fine, [](double x) { return x * x; });
  auto r = restrict_to(u, sub);
  EXPECT_EQ(r.value(0), u.value(1));
  EXPECT_EQ(r.value(1), u.value(7));
}

TEST(Restrict, NestedRestrictionComposes) {
  auto d0 = DiscreteDomain::uniform_interval(0, 1, 401);
  auto d1 = DiscreteDomain::uniform_interval(0, 1, 101);
  auto d2 = DiscreteDomain::uniform_interval(0, 1, 26);
  auto u = GridFunction::sample(d0, random_piecewise_linear(9, 0, 1));
  auto twice = restrict_to(restrict_to(u, d1), d2);
  auto once = restrict_to(u, d2);
  EXPECT_TRUE(std::equal(twice.values().begin(), twice.values().end(), once.values().begin()));
}

TEST(Restrict, NormNonIncreasingProperty) {
  auto fine = DiscreteDomain::uniform_interval(-1, 1, 201);
  auto coarse = DiscreteDomain::uniform_interval(-1, 1, 41);
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto u = GridFunction::sample(fine, random_piecewise_linear(s, -1, 1));
    auto r = restrict_to(u, coarse);
    EXPECT_LE(sup_norm(r), sup_norm(u));
    for (double a : {0.3, 0.7, 1.0}) {
      EXPECT_LE(holder_seminorm(r, a).seminorm, holder_seminorm(u, a).seminorm);
      EXPECT_LE(holder_norm(r, a).norm, holder_norm(u, a).norm);
    }
  }
}

TEST(Restrict, IsLinear) {
  auto fine = DiscreteDomain::uniform_interval(0, 1, 51);
  auto coarse = DiscreteDomain::uniform_interval(0, 1, 11);
  auto u = GridFunction::sample(fine, random_piecewise_linear(1, 0, 1));
  auto v = GridFunction::sample(fine, random_piecewise_linear(2, 0, 1));
  auto lhs = restrict_to(lincomb(2.0, u, -3.0, v), coarse);
  auto rhs = lincomb(2.0, restrict_to(u, coarse), -3.0, restrict_to(v, coarse));
  EXPECT_EQ(sup_norm(lhs - rhs), 0.0);
}

TEST(GridFunctionCsv, RoundTripIsBitwise) {
  auto d = DiscreteDomain::uniform_interval(-1, 1, 33);
  auto u = GridFunction::sample(d, 2, [](double x, std::span<double> o) {
    o[0] = std::exp(x) / 3.0;
    o[1] = std::cos(7 * x);
  });
  std::stringstream ss;
  write_csv(ss, u);
  auto v = read_grid_function_csv(ss);
  EXPECT_TRUE(v.domain().is_uniform());
  EXPECT_TRUE(v.domain().same_as(u.domain()));
  ASSERT_EQ(v.dim(), 2u);
  EXPECT_TRUE(std::equal(u.values().begin(), u.values().end(), v.values().begin()));
}

TEST(GridFunctionCsv, NonUniformCoordinatesBecomePointSet) {
  std::stringstream ss("x,u0\n0,1\n0.25,2\n1,3\n");
  auto v = read_grid_function_csv(ss);
  EXPECT_FALSE(v.domain().is_uniform());
  EXPECT_EQ(v.domain().coord(1), 0.25);
  EXPECT_EQ(v.value(2), 3.0);
}

TEST(GridFunctionCsv, MalformedReportsLine) {
  std::stringstream ss("x,u0\n0,1\n0.5,abc\n1,3\n");
  try {
    read_grid_function_csv(ss);
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream ragged("x,u0\n0,1\n0.5\n");
  EXPECT_THROW(read_grid_function_csv(ragged), CsvError);
}
