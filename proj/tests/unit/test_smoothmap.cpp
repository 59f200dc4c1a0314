#include <gtest/gtest.h>

#include <cmath>

#include "proxsqp/bench.hpp"
#include "proxsqp/errors.hpp"
#include "proxsqp/rng.hpp"
#include "proxsqp/smoothmap.hpp"

using namespace proxsqp;

namespace {

Vec<double> random_vec(CounterRng& rng, Index n) {
  Vec<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Mat<double> random_symmetric(CounterRng& rng, Index m) {
  Mat<double> g(m, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < m; ++i) g(i, j) = rng.normal();
  return (g + g.transpose()) / 2;
}

QuadraticFamily<double> random_family(std::uint64_t seed, Index n, Index m) {
  CounterRng rng(seed);
  QuadraticFamily<double> q;
  for (Index i = 0; i < m; ++i) {
    q.a.push_back(random_symmetric(rng, n));
    q.b.push_back(random_vec(rng, n));
  }
  q.c0 = random_vec(rng, m);
  return q;
}

AffineMatrixMap<double> random_affine(std::uint64_t seed, Index n, Index m) {
  CounterRng rng(seed);
  AffineMatrixMap<double> a;
  for (Index i = 0; i <= n; ++i) a.a.push_back(random_symmetric(rng, m));
  return a;
}

}  // namespace

TEST(EvalMap, AffineAtZeroIsA0) {
  const auto a = random_affine(1, 3, 4);
  const SmoothMap<double> c = a;
  const Vec<double> y = eval_map(c, Vec<double>(Vec<double>::Zero(3)));
  EXPECT_EQ(Eigen::Map<const Mat<double>>(y.data(), 4, 4), a.a[0]);
}

TEST(EvalMap, QuadraticAtZeroIsConstants) {
  const auto q = random_family(2, 3, 4);
  EXPECT_EQ(eval_map(SmoothMap<double>(q), Vec<double>(Vec<double>::Zero(3))), q.c0);
}

TEST(EvalMap, AnalyticPairByHand) {
  const SmoothMap<double> c = AnalyticPair{};
  const Vec<double> y = eval_map(c, Vec<double>{{0.0, 1.0}});
  EXPECT_DOUBLE_EQ(y(0), -4.0);
  EXPECT_DOUBLE_EQ(y(1), 12.0);
}

TEST(EvalMap, DimensionMismatch) {
  EXPECT_THROW(eval_map(SmoothMap<double>(AnalyticPair{}), Vec<double>(Vec<double>::Zero(3))), DimensionMismatch);
}

TEST(Differential, AffineIndependentOfX) {
  const SmoothMap<double> c = random_affine(3, 4, 3);
  EXPECT_EQ(jacobian(c, Vec<double>(Vec<double>::Zero(4))), jacobian(c, Vec<double>(Vec<double>::Ones(4))));
}

TEST(Differential, ZeroCurvatureFamilyHasConstantRows) {
  auto q = random_family(4, 3, 2);
  for (auto& a : q.a) a.setZero();
  const Mat<double> j = jacobian(SmoothMap<double>(q), Vec<double>{{0.3, -1.0, 2.0}});
  for (Index i = 0; i < 2; ++i) EXPECT_EQ(Vec<double>(j.row(i).transpose()), q.b[static_cast<std::size_t>(i)]);
}

TEST(Differential, AdjointPairing) {
  CounterRng rng(5);
  for (const SmoothMap<double>& c :
       {SmoothMap<double>(random_family(6, 4, 3)), SmoothMap<double>(random_affine(7, 4, 3)), SmoothMap<double>(AnalyticPair{})}) {
    const Index n = input_dim(c);
    const Vec<double> x = random_vec(rng, n);
    const Vec<double> u = random_vec(rng, n);
    Vec<double> w = random_vec(rng, output_dim(c));
    if (std::holds_alternative<AffineMatrixMap<double>>(c)) {
      const Index m = std::get<AffineMatrixMap<double>>(c).a[0].rows();
      Mat<double> wm = Eigen::Map<Mat<double>>(w.data(), m, m);
      wm = (wm + wm.transpose()).eval() / 2;
      w = Eigen::Map<Vec<double>>(wm.data(), m * m);
    }
    EXPECT_NEAR(differential(c, x, u).dot(w), u.dot(differential_adjoint(c, x, w)), 1e-12 * (1 + w.norm() * u.norm()));
  }
}

TEST(Differential, FiniteDifferenceChecks) {
  CounterRng rng(8);
  for (const SmoothMap<double>& c :
       {SmoothMap<double>(random_family(9, 5, 4)), SmoothMap<double>(random_affine(10, 5, 4)), SmoothMap<double>(AnalyticPair{})}) {
    const Index n = input_dim(c);
    const Vec<double> x = random_vec(rng, n);
    const Vec<double> u = random_vec(rng, n);
    const Vec<double> v = random_vec(rng, n);
    const double h = std::cbrt(machine_eps<double>());
    const Vec<double> fd = (eval_map(c, Vec<double>(x + h * u)) - eval_map(c, Vec<double>(x - h * u))) / (2 * h);
    EXPECT_LE((differential(c, x, u) - fd).norm(), 1e-7 * (1 + fd.norm()));
    const Vec<double> fd2 = (differential(c, Vec<double>(x + h * v), u) - differential(c, Vec<double>(x - h * v), u)) / (2 * h);
    EXPECT_LE((second_directional(c, x, u, v) - fd2).norm(), 1e-6 * (1 + fd2.norm()));
    EXPECT_TRUE(check_map_derivatives(c, x, u, v).pass);
  }
}

TEST(SecondDirectional, AffineIsZero) {
  const SmoothMap<double> c = random_affine(11, 3, 3);
  EXPECT_TRUE(is_affine(c));
  EXPECT_EQ(second_directional(c, Vec<double>(Vec<double>::Ones(3)), Vec<double>(Vec<double>::Ones(3)), Vec<double>(Vec<double>::Ones(3))).norm(), 0.0);
}

TEST(SecondDirectional, QuadraticUnitDirections) {
  const auto q = random_family(12, 3, 4);
  const Vec<double> e1 = Vec<double>::Unit(3, 0);
  const Vec<double> s = second_directional(SmoothMap<double>(q), Vec<double>(Vec<double>::Zero(3)), e1, e1);
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(s(i), q.a[static_cast<std::size_t>(i)](0, 0));
}

TEST(CompositeSubgradient, AnalyticPairByHand) {
  const auto inst = bench::pair_demo();
  const auto sg = composite_subgradient(inst, Vec<double>{{1.0, 1.0}});
  EXPECT_DOUBLE_EQ(sg.value, 13.0);
  EXPECT_DOUBLE_EQ(sg.v(0), 2.0);
  EXPECT_DOUBLE_EQ(sg.v(1), 16.0);
  EXPECT_TRUE(sg.differentiable);
}

TEST(CompositeSubgradient, MaxQuadAtOriginAndTieFlag) {
  const auto inst = bench::build_maxquad();
  const auto& q = std::get<QuadraticFamily<double>>(inst.map);
  EXPECT_EQ(composite_value(inst, Vec<double>(Vec<double>::Zero(10))), q.c0.maxCoeff());
  // every piece vanishes at the origin
  EXPECT_FALSE(composite_subgradient(inst, Vec<double>(Vec<double>::Zero(10))).differentiable);
  EXPECT_TRUE(composite_subgradient(inst, Vec<double>(Vec<double>::Ones(10))).differentiable);
}

TEST(CompositeSubgradient, LamMaxTieFlag) {
  AffineMatrixMap<double> a;
  a.a.push_back(Mat<double>::Identity(3, 3));
  a.a.push_back(Mat<double>(Vec<double>{{1.0, 0.0, 0.0}}.asDiagonal()));
  const CompositeInstance<double> inst{"tie", a, NonsmoothFunction::lammax(3), std::nullopt, std::nullopt};
  EXPECT_FALSE(composite_subgradient(inst, Vec<double>{{0.0}}).differentiable);
  EXPECT_TRUE(composite_subgradient(inst, Vec<double>{{0.5}}).differentiable);
}

TEST(CompositeSubgradient, SubgradientInequalityOnConvexInstances) {
  for (const auto& inst : {bench::build_maxquad(), bench::build_eigmax_affine(42, 6, 12)}) {
    CounterRng rng(13);
    const Vec<double> x = random_vec(rng, inst.n());
    const auto sg = composite_subgradient(inst, x);
    for (int t = 0; t < 100; ++t) {
      const Vec<double> d = 1e-3 * random_vec(rng, inst.n());
      ASSERT_GE(composite_value(inst, Vec<double>(x + d)), sg.value + sg.v.dot(d) - 1e-8);
    }
  }
}

TEST(InstanceJson, HexRoundTripIsBitExact) {
  for (const auto& inst : {bench::build_maxquad(), bench::build_eigmax_affine(42, 6, 12), bench::pair_demo()}) {
    const auto back = instance_from_json(nlohmann::json::parse(instance_to_json(inst, true).dump()));
    EXPECT_EQ(back.name, inst.name);
    EXPECT_EQ(back.outer.kind, inst.outer.kind);
    CounterRng rng(14);
    const Vec<double> x = random_vec(rng, inst.n());
    EXPECT_EQ(eval_map(back.map, x), eval_map(inst.map, x));
  }
}

TEST(InstanceJson, MalformedRejected) {
  EXPECT_THROW(instance_from_json(nlohmann::json{{"kind", "quadratic_family"}}), DataError);
}

TEST(CompositeInstance, ValidateCatchesDimensionMismatch) {
  CompositeInstance<double> inst{"bad", random_family(15, 3, 4), NonsmoothFunction::max(5), std::nullopt, std::nullopt};
  EXPECT_THROW(inst.validate(), DimensionMismatch);
}

TEST(CastInstance, ExtendedAgreesWithDouble) {
  const auto inst = bench::pair_demo();
  const auto ext = cast_instance<Extended>(inst);
  const Vec<double> x{{0.3, -0.7}};
  EXPECT_NEAR(to_double(composite_value(ext, cast_vec<Extended>(x))), composite_value(inst, x), 1e-14);
}
