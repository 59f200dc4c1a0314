#include <gtest/gtest.h>

#include <cmath>

#include "proxsqp/errors.hpp"
#include "proxsqp/rng.hpp"
#include "proxsqp/sqp.hpp"

using namespace proxsqp;

namespace {

Mat<double> row(std::initializer_list<double> v) {
  Mat<double> a(1, static_cast<Index>(v.size()));
  Index j = 0;
  for (double x : v) a(0, j++) = x;
  return a;
}

Mat<double> random_mat(CounterRng& rng, Index r, Index c) {
  Mat<double> a(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) a(i, j) = rng.normal();
  return a;
}

}  // namespace

TEST(Multiplier, ZeroGradient) {
  EXPECT_EQ(multiplier_ls<double>(Vec<double>::Zero(2), row({1, 1})).norm(), 0.0);
}

TEST(Multiplier, HandKkt) {
  // grad (2 x1, 2 x2) at (0.5, 0.5)
  const Vec<double> lam = multiplier_ls<double>(Vec<double>{{1.0, 1.0}}, row({1, 1}));
  EXPECT_NEAR(lam(0), -1.0, 1e-15);
}

TEST(Multiplier, OrthogonalGradientGivesZero) {
  EXPECT_NEAR(multiplier_ls<double>(Vec<double>{{1.0, -1.0}}, row({1, 1}))(0), 0.0, 1e-15);
}

TEST(Multiplier, ClosedForm) {
  CounterRng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Mat<double> jh = random_mat(rng, 3, 7);
    const Vec<double> g = random_mat(rng, 7, 1);
    const Vec<double> closed = -(jh * jh.transpose()).ldlt().solve(jh * g);
    EXPECT_LE((multiplier_ls(g, jh) - closed).norm(), 1e-12 * (1 + closed.norm()));
  }
}

TEST(Multiplier, RankDeficientPropagates) {
  Mat<double> jh(2, 3);
  jh << 1, 0, 0, 2, 0, 0;
  EXPECT_THROW(multiplier_ls<double>(Vec<double>::Ones(3), jh), RankDeficient);
}

TEST(SqpDirection, HandQuadratic) {
  // min x1^2 + x2^2 s.t. x1 + x2 - 1 = 0 from the origin
  const auto step = sqp_direction<double>(Vec<double>::Zero(2), 2 * Mat<double>::Identity(2, 2), Vec<double>{{-1.0}}, row({1, 1}));
  EXPECT_NEAR(step.d_sqp(0), 0.5, 1e-15);
  EXPECT_NEAR(step.d_sqp(1), 0.5, 1e-15);
}

TEST(SqpDirection, KktPointGivesZeroStep) {
  // at (0.5, 0.5): grad (1, 1), h = 0
  const auto step = sqp_direction<double>(Vec<double>{{1.0, 1.0}}, 2 * Mat<double>::Identity(2, 2), Vec<double>{{0.0}}, row({1, 1}));
  EXPECT_LE(step.d_sqp.norm(), 1e-12);
  EXPECT_LE(step.kkt_residual, 1e-12);
}

TEST(SqpDirection, UnconstrainedIsNewton) {
  Mat<double> h(2, 2);
  h << 4, 1, 1, 3;
  const Vec<double> g{{1.0, 2.0}};
  const auto step = sqp_direction<double>(g, h, Vec<double>(0), Mat<double>(0, 2));
  EXPECT_LE((step.d_sqp + h.inverse() * g).norm(), 1e-14);
}

TEST(SqpDirection, OneStepExactOnRandomQuadratics) {
  CounterRng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Index n = 6, p = 2;
    const Mat<double> m = random_mat(rng, n, n);
    const Mat<double> hess = m * m.transpose() + Mat<double>::Identity(n, n);
    const Vec<double> q = random_mat(rng, n, 1);
    const Mat<double> a = random_mat(rng, p, n);
    const Vec<double> b = random_mat(rng, p, 1);
    const Vec<double> x = random_mat(rng, n, 1);
    // exact KKT solution of min 1/2 z^T H z + q^T z s.t. A z = b
    Mat<double> kkt = Mat<double>::Zero(n + p, n + p);
    kkt.topLeftCorner(n, n) = hess;
    kkt.topRightCorner(n, p) = a.transpose();
    kkt.bottomLeftCorner(p, n) = a;
    Vec<double> rhs(n + p);
    rhs << -q, b;
    const Vec<double> z_star = kkt.fullPivLu().solve(rhs).head(n);
    const Vec<double> lam_star = kkt.fullPivLu().solve(rhs).tail(p);

    const Vec<double> grad = hess * x + q;
    const auto step = sqp_direction<double>(grad, hess, Vec<double>(a * x - b), a);
    EXPECT_LE((x + step.d_sqp - z_star).norm(), 1e-12 * (1 + z_star.norm()));
    EXPECT_LE((a * (x + step.d_sqp) - b).norm(), 1e-10 * (1 + b.norm()));
    const Vec<double> lam = multiplier_ls<double>(Vec<double>(hess * z_star + q), a);
    EXPECT_LE((lam - lam_star).norm(), 1e-12 * (1 + lam_star.norm()));
  }
}

TEST(SqpDirection, DescentOnFeasiblePoint) {
  CounterRng rng(3);
  const Mat<double> m = random_mat(rng, 5, 5);
  const Mat<double> hess = m * m.transpose() + Mat<double>::Identity(5, 5);
  const Mat<double> a = random_mat(rng, 2, 5);
  const Vec<double> g = random_mat(rng, 5, 1);
  const auto step = sqp_direction<double>(g, hess, Vec<double>::Zero(2), a);
  EXPECT_LE(g.dot(step.d_sqp), 0.0);
}

TEST(SqpDirection, IndefiniteReducedHessianReported) {
  Mat<double> h(2, 2);
  h << -1, 0, 0, 1;
  try {
    sqp_direction<double>(Vec<double>::Ones(2), h, Vec<double>{{0.0}}, row({0, 1}));
    FAIL() << "expected IndefiniteReducedHessian";
  } catch (const IndefiniteReducedHessian& e) {
    EXPECT_NEAR(e.min_eig(), -1.0, 1e-14);
  }
  const auto step = sqp_direction<double>(Vec<double>::Ones(2), h, Vec<double>{{0.0}}, row({0, 1}), 2.0);
  EXPECT_NEAR(step.d_sqp(0), -1.0, 1e-14);
  EXPECT_EQ(step.regularization, 2.0);
}

TEST(SecondOrderCorrection, ZeroResidualGivesZero) {
  EXPECT_EQ(second_order_correction<double>(row({1, 1}), Vec<double>{{0.0}}).norm(), 0.0);
}

TEST(SecondOrderCorrection, LiesInRowSpace) {
  CounterRng rng(4);
  const Mat<double> jh = random_mat(rng, 2, 5);
  const Vec<double> d = second_order_correction<double>(jh, Vec<double>{{0.3, -0.1}});
  EXPECT_LE((nullspace_basis(jh).transpose() * d).norm(), 1e-12);
  EXPECT_LE((jh * d + Vec<double>{{0.3, -0.1}}).norm(), 1e-14);
}

TEST(SecondOrderCorrection, ClassicRuleRestoresCurvedConstraint) {
  // min x1 + x2 on the circle h(x) = x1^2 + x2^2 - 1 = 0, started off the circle
  const auto h = [](const Vec<double>& x) { return Vec<double>{{x.squaredNorm() - 1.0}}; };
  const auto jac = [](const Vec<double>& x) { return row({2 * x(0), 2 * x(1)}); };
  Vec<double> x{{-0.8, -0.65}};
  const Vec<double> grad{{1.0, 1.0}};
  const double lam = multiplier_ls<double>(grad, jac(x))(0);
  const auto step = sqp_direction<double>(grad, 2 * lam * Mat<double>::Identity(2, 2), h(x), jac(x));
  const Vec<double> xd = x + step.d_sqp;
  const Vec<double> corr = second_order_correction<double>(jac(x), h(xd));
  const double before = std::abs(h(xd)(0));
  const double after = std::abs(h(Vec<double>(xd + corr))(0));
  EXPECT_LE(after, 10 * before * before);
}

TEST(ReducedHessian, MinEig) {
  Mat<double> h(3, 3);
  h << 2, 0, 0, 0, 5, 0, 0, 0, -7;
  EXPECT_NEAR(reduced_hessian_min_eig<double>(h, row({0, 0, 1})), 2.0, 1e-14);
}
