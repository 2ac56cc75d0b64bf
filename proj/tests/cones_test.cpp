#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "conic_nmf/cones.hpp"
#include "conic_nmf/synth.hpp"
#include "test_util.hpp"

using namespace conic_nmf;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix beta2(double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = m(1, 0) = b;
  return m;
}

}  // namespace

TEST(Contains, HandExamples) {
  const CircularCone cone(Vector::Unit(2, 0), 0.2);
  EXPECT_TRUE(contains(cone, Vector::Unit(2, 0)));
  EXPECT_FALSE(contains(cone, vec({std::cos(0.3), std::sin(0.3)})));
  EXPECT_TRUE(contains(cone, 5.0 * Vector::Unit(2, 0)));
  EXPECT_TRUE(contains(cone, vec({std::cos(0.19), std::sin(0.19)})));
}

TEST(Contains, ZeroVectorRejected) {
  const CircularCone cone(Vector::Unit(3, 0), 0.2);
  try {
    contains(cone, Vector::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_vector);
  }
}

TEST(Contains, ScaleInvariant) {
  Rng rng(1);
  Vector u = Vector::Ones(5).normalized();
  const CircularCone cone(u, 0.3);
  for (int t = 0; t < 200; ++t) {
    const Vector x = testutil::uniform_matrix(5, 1, rng).col(0);
    const double c = 1e-3 + 1e3 * rng.uniform();
    EXPECT_EQ(contains(cone, x), contains(cone, c * x));
  }
}

TEST(CircularCone, RejectsInvalid) {
  EXPECT_THROW(CircularCone(vec({1.0, 1.0}), 0.2), Error);
  EXPECT_THROW(CircularCone(vec({-1.0, 0.0}), 0.2), Error);
  EXPECT_THROW(CircularCone(Vector::Unit(2, 0), 0.0), Error);
  EXPECT_THROW(CircularCone(Vector::Unit(2, 0), std::numbers::pi / 2), Error);
}

TEST(ConeSet, BetaIsSymmetricWithZeroDiagonal) {
  const Matrix u = equiangular_bases(6, 4, 0.7);
  const ConeSet set = make_cone_set(u, 0.1);
  const Matrix& b = set.beta();
  for (Index i = 0; i < 4; ++i) {
    EXPECT_EQ(b(i, i), 0.0);
    for (Index j = 0; j < 4; ++j) {
      EXPECT_EQ(b(i, j), b(j, i));
      if (i != j) {
        EXPECT_NEAR(b(i, j), 0.7, 1e-12);
      }
    }
  }
}

TEST(GeometricAssumption, HandExamples) {
  const double a2[] = {0.2, 0.2};
  auto ok = check_geometric_assumption(a2, beta2(0.9));
  EXPECT_TRUE(ok.holds);
  EXPECT_NEAR(ok.margin, 0.1, 1e-12);

  auto edge = check_geometric_assumption(a2, beta2(0.8));
  EXPECT_FALSE(edge.holds);
  EXPECT_NEAR(edge.margin, 0.0, 1e-12);

  const double a3[] = {0.1, 0.2, 0.3};
  Matrix b3 = Matrix::Constant(3, 3, 1.0);
  b3.diagonal().setZero();
  auto bad = check_geometric_assumption(a3, b3);
  EXPECT_FALSE(bad.holds);
  EXPECT_NEAR(bad.margin, 1.0 - 1.1, 1e-12);
}

TEST(GeometricAssumption, SingleConeRejected) {
  const double a1[] = {0.2};
  try {
    check_geometric_assumption(a1, Matrix::Zero(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::single_cone);
  }
}

TEST(GeometricAssumption, HoldsIffMarginPositive) {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const Index k = 2 + static_cast<Index>(rng.below(5));
    std::vector<double> alphas(static_cast<std::size_t>(k));
    for (auto& a : alphas) a = 0.01 + 0.2 * rng.uniform();
    Matrix b = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = i + 1; j < k; ++j) b(i, j) = b(j, i) = 0.3 + 1.2 * rng.uniform();
    const auto r = check_geometric_assumption(alphas, b);
    EXPECT_EQ(r.holds, r.margin > 0.0);
  }
}

TEST(GeometricAssumption, PermutationInvariant) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Index k = 4;
    std::vector<double> alphas(4);
    for (auto& a : alphas) a = 0.01 + 0.2 * rng.uniform();
    Matrix b = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = i + 1; j < k; ++j) b(i, j) = b(j, i) = 0.3 + 1.2 * rng.uniform();
    std::vector<Index> perm = {2, 0, 3, 1};
    std::vector<double> pa(4);
    Matrix pb(k, k);
    for (Index i = 0; i < k; ++i) {
      pa[static_cast<std::size_t>(i)] = alphas[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      for (Index j = 0; j < k; ++j) pb(i, j) = b(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    const auto r1 = check_geometric_assumption(alphas, b);
    const auto r2 = check_geometric_assumption(pa, pb);
    EXPECT_EQ(r1.holds, r2.holds);
    EXPECT_EQ(r1.margin, r2.margin);
  }
}

TEST(GeometricAssumption, ExperimentFamilyPasses) {
  const ConeSet set = make_cone_set(equiangular_bases(1600, 40, 0.81), 0.2);
  const auto r = check_geometric_assumption(set);
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.margin, 0.01, 1e-9);
}

TEST(ContainedInOrthant, HandExamples) {
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_TRUE(contained_in_orthant(CircularCone(vec({s, s}), std::numbers::pi / 4)));
  EXPECT_TRUE(contained_in_orthant(CircularCone(vec({0.6, 0.8}), 0.5)));
  EXPECT_FALSE(contained_in_orthant(CircularCone(vec({0.6, 0.8}), 0.7)));
}

TEST(ContainedInOrthant, ZeroEntryRejected) {
  try {
    contained_in_orthant(CircularCone(Vector::Unit(3, 1), 0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_positive_basis);
  }
}

TEST(ContainedInOrthant, BoundaryPointsAreNonnegative) {
  Rng rng(4);
  int checked = 0;
  for (int t = 0; t < 20; ++t) {
    const Index f = 2 + static_cast<Index>(rng.below(8));
    Vector u = (testutil::uniform_matrix(f, 1, rng).array() + 0.05).matrix().col(0);
    u.normalize();
    const double threshold = std::asin(u.minCoeff());
    const double alpha = threshold * (0.5 + 0.5 * rng.uniform());
    const CircularCone cone(u, alpha);
    ASSERT_TRUE(contained_in_orthant(cone));
    // boundary point: cos(a) u + sin(a) y with y a unit vector orthogonal to u
    for (int s = 0; s < 500; ++s) {
      Vector y = testutil::gaussian_matrix(f, 1, rng).col(0);
      y -= y.dot(u) * u;
      if (y.norm() < 1e-8) continue;
      y.normalize();
      const Vector x = std::cos(alpha) * u + std::sin(alpha) * y;
      EXPECT_GE(x.minCoeff(), -1e-12);
      ++checked;
    }
  }
  EXPECT_GE(checked, 10000 - 100);
}

TEST(EnclosingCone, SingleColumn) {
  Vector x = vec({0.3, 0.4, 1.2});
  const auto r = optimal_enclosing_cone(x);
  EXPECT_LE((r.basis - x.normalized()).norm(), 1e-12);
  EXPECT_EQ(r.angle, 0.0);
}

TEST(EnclosingCone, TwoAxes) {
  const Matrix x = Matrix::Identity(2, 2);
  const auto r = optimal_enclosing_cone(x);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(r.basis(0), s, 1e-9);
  EXPECT_NEAR(r.basis(1), s, 1e-9);
  EXPECT_NEAR(r.angle, std::numbers::pi / 4, 1e-9);
  EXPECT_NEAR(r.qp_norm, std::sqrt(2.0), 1e-9);
}

TEST(EnclosingCone, SamplesFromKnownCone) {
  Rng rng(5);
  const Vector u = vec({1.0, 1.0}).normalized();
  const CircularCone cone(u, 0.2);
  Matrix x(2, 200);
  for (Index j = 0; j < 200; ++j) x.col(j) = sample_unit_in_cone(cone, rng);
  const auto r = optimal_enclosing_cone(x);
  EXPECT_LE(r.angle, 0.2 + 1e-6);
  const CircularCone fitted(r.basis, r.angle + 1e-8);
  for (Index j = 0; j < 200; ++j) EXPECT_TRUE(contains(fitted, x.col(j)));
}

TEST(EnclosingCone, HigherDimensionalContainment) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Index f = 3 + static_cast<Index>(rng.below(10));
    Vector u = (testutil::uniform_matrix(f, 1, rng).array() + 0.2).matrix().col(0);
    u.normalize();
    const CircularCone cone(u, 0.15);
    Matrix x(f, 100);
    for (Index j = 0; j < 100; ++j) x.col(j) = sample_unit_in_cone(cone, rng);
    const auto r = optimal_enclosing_cone(x);
    EXPECT_LE(r.angle, 0.15 + 1e-6);
    EXPECT_GE(r.basis.minCoeff(), 0.0);
    EXPECT_NEAR(r.basis.norm(), 1.0, 1e-12);
    const CircularCone fitted(r.basis, r.angle + 1e-8);
    for (Index j = 0; j < 100; ++j) EXPECT_TRUE(contains(fitted, x.col(j)));
  }
}

TEST(EnclosingCone, DuplicateColumnChangesNothing) {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = testutil::uniform_matrix(4, 12, rng);
    Matrix xd(4, 13);
    xd << x, x.col(static_cast<Index>(rng.below(12)));
    const auto a = optimal_enclosing_cone(x);
    const auto b = optimal_enclosing_cone(xd);
    EXPECT_LE((a.basis - b.basis).norm(), 1e-8);
    EXPECT_NEAR(a.angle, b.angle, 1e-8);
  }
}

TEST(EnclosingCone, AngleMonotoneUnderAddingColumns) {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = testutil::uniform_matrix(5, 20, rng);
    double prev = 0.0;
    for (Index m = 1; m <= 20; ++m) {
      const auto r = optimal_enclosing_cone(x.leftCols(m));
      EXPECT_GE(r.angle, prev - 1e-8);
      prev = r.angle;
    }
  }
}

TEST(EnclosingCone, ScaledColumnsGiveSameCone) {
  Matrix x(3, 3);
  x << 1, 0, 1, 0, 1, 1, 1, 1, 0;
  Matrix xs = x;
  xs.col(0) *= 7.0;
  xs.col(2) *= 0.01;
  const auto a = optimal_enclosing_cone(x);
  const auto b = optimal_enclosing_cone(xs);
  EXPECT_LE((a.basis - b.basis).norm(), 1e-9);
  EXPECT_NEAR(a.angle, b.angle, 1e-9);
}

TEST(EnclosingCone, InfeasibleDirectionsReported) {
  Matrix x(2, 2);
  x << 1, -1, 0, 0;
  try {
    optimal_enclosing_cone(x, EnclosingOptions{200, 1e-9});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::infeasible);
  }
}

TEST(EnclosingCone, ZeroColumnRejected) {
  Matrix x(2, 2);
  x << 1, 0, 0, 0;
  EXPECT_THROW(optimal_enclosing_cone(x), Error);
}
