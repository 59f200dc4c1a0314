#include <gtest/gtest.h>

#include <cmath>

#include "proxsqp/errors.hpp"
#include "proxsqp/numlin.hpp"
#include "proxsqp/rng.hpp"

using namespace proxsqp;

namespace {

SymMatrix<double> random_sym(Index m, std::uint64_t seed) {
  CounterRng rng(seed);
  Mat<double> g(m, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < m; ++i) g(i, j) = rng.normal();
  return SymMatrix<double>::symmetrized(g);
}

}  // namespace

TEST(SymEigen, DiagonalInputIsAlreadySorted) {
  const auto e = sym_eigen(SymMatrix<double>::diagonal(Vec<double>{{2.0, 0.0}}));
  EXPECT_DOUBLE_EQ(e.values(0), 2.0);
  EXPECT_DOUBLE_EQ(e.values(1), 0.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(1, 1)), 1.0, 1e-15);
}

TEST(SymEigen, SwapMatrixHasPlusMinusOne) {
  SymMatrix<double> s(2);
  s.set(0, 1, 1.0);
  const auto e = sym_eigen(s);
  // t^2 - 1 = 0
  EXPECT_NEAR(e.values(0), 1.0, 1e-15);
  EXPECT_NEAR(e.values(1), -1.0, 1e-15);
}

TEST(SymEigen, SignConventionFirstNonzeroPositive) {
  const auto e = sym_eigen(random_sym(6, 3));
  for (Index j = 0; j < 6; ++j) {
    Index i = 0;
    while (std::abs(e.vectors(i, j)) < 1e-12) ++i;
    EXPECT_GT(e.vectors(i, j), 0.0);
  }
}

TEST(SymEigen, ReconstructionOnSeededInputs) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Index m = 1 + static_cast<Index>(seed % 50);
    const auto s = random_sym(m, seed);
    const auto e = sym_eigen(s);
    const Mat<double> rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    ASSERT_LE(max_abs<double>(Mat<double>(rec - s.dense())) / max_abs<double>(s.dense()), 1e-12) << "seed " << seed;
    const Mat<double> gram = e.vectors.transpose() * e.vectors - Mat<double>::Identity(m, m);
    ASSERT_LE(max_abs<double>(gram), 1e2 * machine_eps<double>() * m) << "seed " << seed;
    for (Index i = 1; i < m; ++i) ASSERT_GE(e.values(i - 1), e.values(i));
  }
}

TEST(SymEigen, DeterministicBits) {
  const auto s = random_sym(9, 1);
  const auto a = sym_eigen(s);
  const auto b = sym_eigen(s);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.vectors, b.vectors);
}

TEST(SymEigen, RejectsNonFinite) {
  SymMatrix<double> s(2);
  s.set(0, 1, std::nan(""));
  EXPECT_THROW(sym_eigen(s), NonFiniteInput);
}

TEST(SymEigen, ExtendedPrecisionReconstruction) {
  const auto sd = random_sym(5, 1);
  const SymMatrix<Extended> s = SymMatrix<Extended>::from_lower(cast_mat<Extended>(sd.dense()));
  const auto e = sym_eigen(s);
  const Mat<Extended> rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  EXPECT_LE(to_double(max_abs<Extended>(Mat<Extended>(rec - s.dense()))), 1e-30);
}

TEST(SymMatrix, StorageIsExactlySymmetric) {
  Mat<double> a(2, 2);
  a << 1, 7, 3, 4;
  const auto s = SymMatrix<double>::from_lower(a);
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), 3.0);
  const auto t = SymMatrix<double>::symmetrized(a);
  EXPECT_EQ(t(0, 1), 5.0);
  EXPECT_EQ(SymMatrix<double>::unflatten(t.flatten(), 2).dense(), t.dense());
}

TEST(Nullspace, SingleRow) {
  Mat<double> a(1, 2);
  a << 1, 1;
  const Mat<double> z = nullspace_basis(a);
  ASSERT_EQ(z.cols(), 1);
  EXPECT_NEAR(std::abs(z(0, 0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(z(0, 0), -z(1, 0), 1e-15);
}

TEST(Nullspace, IdentityHasEmptyKernel) {
  EXPECT_EQ(nullspace_basis<double>(Mat<double>::Identity(4, 4)).cols(), 0);
}

TEST(Nullspace, CoordinateKernel) {
  Mat<double> a(1, 3);
  a << 1, 0, 0;
  const Mat<double> z = nullspace_basis(a);
  ASSERT_EQ(z.cols(), 2);
  EXPECT_NEAR(z.row(0).norm(), 0.0, 1e-15);
  EXPECT_NEAR((z.transpose() * z - Mat<double>::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(Nullspace, RankDeficientCarriesSingularValue) {
  Mat<double> a(2, 3);
  a << 1, 2, 3, 2, 4, 6;
  try {
    nullspace_basis(a);
    FAIL() << "expected RankDeficient";
  } catch (const RankDeficient& e) {
    EXPECT_LE(e.sigma_min(), e.tolerance());
  }
}

TEST(Nullspace, RandomWideMatrices) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed);
    const Index p = 1 + static_cast<Index>(seed % 5);
    const Index n = p + 1 + static_cast<Index>(seed % 7);
    Mat<double> a(p, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < p; ++i) a(i, j) = rng.normal();
    const Mat<double> z = nullspace_basis(a);
    ASSERT_EQ(z.cols(), n - p);
    EXPECT_LE(max_abs<double>(Mat<double>(z.transpose() * z - Mat<double>::Identity(n - p, n - p))), 1e-12);
    EXPECT_LE(max_abs<double>(Mat<double>(a * z)), 1e-10 * a.norm());
  }
}

TEST(Lstsq, IdentityReturnsRhs) {
  const Vec<double> b{{1.5, -2.0, 3.0}};
  EXPECT_LE((lstsq_min_norm<double>(Mat<double>::Identity(3, 3), b) - b).norm(), 1e-15);
}

TEST(Lstsq, OverdeterminedColumn) {
  Mat<double> a(2, 1);
  a << 1, 1;
  const Vec<double> x = lstsq_min_norm<double>(a, Vec<double>{{1.0, 3.0}});
  EXPECT_NEAR(x(0), 2.0, 1e-14);
}

TEST(Lstsq, UnderdeterminedRowGivesMinNorm) {
  Mat<double> a(1, 2);
  a << 1, 1;
  const Vec<double> x = lstsq_min_norm<double>(a, Vec<double>{{2.0}});
  EXPECT_NEAR(x(0), 1.0, 1e-14);
  EXPECT_NEAR(x(1), 1.0, 1e-14);
}

TEST(Lstsq, NormalEquationsResidual) {
  CounterRng rng(11);
  Mat<double> a(7, 4);
  Vec<double> b(7);
  for (Index j = 0; j < 4; ++j)
    for (Index i = 0; i < 7; ++i) a(i, j) = rng.normal();
  for (Index i = 0; i < 7; ++i) b(i) = rng.normal();
  const Vec<double> x = lstsq_min_norm(a, b);
  EXPECT_LE((a.transpose() * (a * x - b)).norm(), 1e-10 * a.norm() * b.norm());
}

TEST(SolveSpd, IndefiniteThrows) {
  Mat<double> s(2, 2);
  s << 1, 0, 0, -1;
  EXPECT_THROW(solve_spd<double>(s, Vec<double>::Ones(2)), IndefiniteReducedHessian);
}

TEST(PolarFactor, RecoversRotation) {
  Mat<double> q(2, 2);
  const double c = std::cos(0.3), s = std::sin(0.3);
  q << c, -s, s, c;
  const Mat<double> a = q * Vec<double>{{2.0, 0.5}}.asDiagonal();
  // a = q * diag: its polar factor is q itself
  EXPECT_LE((polar_factor<double>(a) - q).norm(), 1e-14);
}

TEST(Scalar, HexFloatRoundTrip) {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 6.02e23}) EXPECT_EQ(parse_hexfloat(to_hexfloat(x)), x);
  const Extended third = Extended(1) / 3;
  EXPECT_EQ(parse_scalar<Extended>(to_string_exact(third)), third);
}
