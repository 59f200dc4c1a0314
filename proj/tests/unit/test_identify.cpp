#include <gtest/gtest.h>

#include <cmath>

#include "proxsqp/bench.hpp"
#include "proxsqp/identify.hpp"
#include "proxsqp/rng.hpp"

using namespace proxsqp;

namespace {

Vec<double> random_vec(CounterRng& rng, Index n) {
  Vec<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

// Three quadratics tied at the origin with distinct gradients: c_i(x) = b_i^T x + |x|^2 / 2.
CompositeInstance<double> three_piece() {
  QuadraticFamily<double> q;
  const double b[3][2] = {{1.0, 0.0}, {-0.5, 0.8}, {-0.5, -0.8}};
  for (const auto& bi : b) {
    q.a.push_back(Mat<double>::Identity(2, 2));
    q.b.push_back(Vec<double>{{bi[0], bi[1]}});
  }
  q.c0 = Vec<double>::Zero(3);
  return {"three", q, NonsmoothFunction::max(3), std::nullopt, std::nullopt};
}

Vec<double> maxquad_solution() {
  const auto inst = bench::build_maxquad();
  return cast_vec<double>(bench::load_reference(inst)->x);
}

}  // namespace

TEST(Detect, SmallGammaSeesNoStructure) {
  const auto inst = three_piece();
  const Vec<double> x{{0.05, 0.02}};
  const auto det = detect(inst, x, 1e-6);
  EXPECT_EQ(structure_size(det.prox.manifold), 1);
  EXPECT_EQ(det.manifold.codim(), 0);
}

TEST(Detect, LargeGammaOverIdentifies) {
  const auto inst = three_piece();
  const Vec<double> x{{0.05, 0.02}};
  const auto det = detect(inst, x, 10.0);
  EXPECT_EQ(manifold_code(det.prox.manifold), "max{1 2 3}");
  EXPECT_EQ(det.manifold.codim(), 2);
}

TEST(Detect, MaxQuadSolutionMidRange) {
  const auto inst = bench::build_maxquad();
  const auto det = detect(inst, maxquad_solution(), 1.0);
  EXPECT_EQ(manifold_code(det.prox.manifold), "max{2 3 4 5}");
}

TEST(Detect, DeterministicDescriptor) {
  const auto inst = bench::build_eigmax_affine(42, 6, 12);
  CounterRng rng(1);
  const Vec<double> x = random_vec(rng, 6);
  const auto a = detect(inst, x, 0.3);
  const auto b = detect(inst, x, 0.3);
  EXPECT_EQ(manifold_code(a.prox.manifold), manifold_code(b.prox.manifold));
  EXPECT_EQ(std::get<EigMult<double>>(a.prox.manifold).ref_basis, std::get<EigMult<double>>(b.prox.manifold).ref_basis);
}

TEST(GammaInit, TwoEntriesNeedGammaOne) {
  // all entries active iff s <= 0 iff gamma >= 1
  const double g = gamma_init(NonsmoothFunction::max(2), Vec<double>{{1.0, 0.0}});
  EXPECT_NEAR(g, 1.0, 2e-6);
  EXPECT_GE(g, 1.0);
}

TEST(GammaInit, TieReturnsSeed) {
  const Vec<double> y{{0.7, 0.7}};
  EXPECT_DOUBLE_EQ(gamma_init(NonsmoothFunction::max(2), y), 1e-6 * (1 + y.norm()));
}

TEST(GammaInit, EigmaxReproducible) {
  const auto inst = bench::build_eigmax_affine(42, 6, 12);
  const Vec<double> x = Vec<double>::Ones(6);
  const double a = gamma_init(inst, x);
  const double b = gamma_init(inst, x);
  EXPECT_EQ(a, b);
  EXPECT_EQ(structure_size(detect(inst, x, a).prox.manifold), 12);
}

TEST(GammaRangeScan, HandWindow) {
  const Vec<double> y{{3.0, 2.0, 1.0}};
  const auto w = gamma_range_scan<double>(NonsmoothFunction::max(3), y, MaxActive{{0, 1}}, 1e-6, 1e3);
  ASSERT_FALSE(w.empty);
  EXPECT_TRUE(w.contiguous);
  EXPECT_NEAR(w.low, 1.0, 1e-5);
  EXPECT_NEAR(w.up, 3.0, 3e-5);
  // re-check the edges against the prox itself
  for (double g : {w.low * (1 + 1e-5), w.up * (1 - 1e-5)})
    EXPECT_EQ(manifold_code(prox_max(y, g).manifold), "max{1 2}");
  EXPECT_EQ(manifold_code(prox_max(y, w.low * (1 - 1e-5)).manifold), "max{1}");
  EXPECT_EQ(manifold_code(prox_max(y, w.up * (1 + 1e-5)).manifold), "max{1 2 3}");
}

TEST(GammaRangeScan, WholeSpaceStartsAtBracketEdge) {
  const auto w = gamma_range_scan<double>(NonsmoothFunction::max(3), Vec<double>{{3.0, 2.0, 1.0}}, MaxActive{{0}}, 1e-8, 1e3);
  ASSERT_FALSE(w.empty);
  EXPECT_DOUBLE_EQ(w.low, 1e-8);
  EXPECT_NEAR(w.up, 1.0, 1e-5);
}

TEST(GammaRangeScan, EmptyWindowReported) {
  const auto w = gamma_range_scan<double>(NonsmoothFunction::max(3), Vec<double>{{3.0, 2.0, 1.0}}, MaxActive{{1, 2}}, 1e-8, 1e3);
  EXPECT_TRUE(w.empty);
}

TEST(GammaRangeScan, BadBracket) {
  EXPECT_THROW(gamma_range_scan<double>(NonsmoothFunction::max(2), Vec<double>{{1.0, 0.0}}, MaxActive{{0}}, 1.0, 0.5),
               InvalidArgument);
}

TEST(Transversality, SinglePieceVacuous) {
  const auto inst = bench::build_maxquad();
  const auto rep = transversality_check<double>(inst, Vec<double>::Ones(10), MaxActive{{3}});
  EXPECT_TRUE(rep.pass);
}

TEST(Transversality, MaxQuadSolutionPasses) {
  const auto inst = bench::build_maxquad();
  const auto rep = transversality_check<double>(inst, maxquad_solution(), MaxActive{{1, 2, 3, 4}});
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.min_singular_value, rep.rank_tol);
}

TEST(Transversality, DuplicatedPieceFails) {
  const auto inst = bench::degenerate_fixture();
  const auto rep = transversality_check<double>(inst, maxquad_solution(), MaxActive{{1, 2, 3, 4, 5}});
  EXPECT_FALSE(rep.pass);
}

TEST(GammaPolicy, Validation) {
  EXPECT_THROW((GammaPolicy{0.0, 0.5}.validate()), InvalidArgument);
  EXPECT_THROW((GammaPolicy{1.0, 1.0}.validate()), InvalidArgument);
  EXPECT_NO_THROW((GammaPolicy{1.0, 0.5}.validate()));
}

TEST(WorkingManifold, MaxLagrangianHessianByHand) {
  const auto inst = bench::build_maxquad();
  const auto& q = std::get<QuadraticFamily<double>>(inst.map);
  const WorkingManifold<double> wm(inst, MaxActive{{1, 2, 3, 4}});
  const auto wp = wm.evaluate(Vec<double>::Ones(10));
  const Vec<double> mult{{0.3, -0.2, 0.7}};
  // (1/4) sum_{i in I} A_i + sum_j mult_j (A_{i_j} - A_{i_last})
  Mat<double> expect = (q.a[1] + q.a[2] + q.a[3] + q.a[4]) / 4.0;
  for (int j = 0; j < 3; ++j) expect += mult(j) * (q.a[static_cast<std::size_t>(j + 1)] - q.a[4]);
  EXPECT_LE((wm.lagrangian_hessian(wp, mult) - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.cwiseAbs().maxCoeff());
}

TEST(WorkingManifold, ZeroMultiplierLinearAffineIsZero) {
  AffineMatrixMap<double> a;
  a.a.push_back(Mat<double>(Vec<double>{{2.0, 2.0, 0.0}}.asDiagonal()));
  a.a.push_back(Mat<double>::Identity(3, 3));
  const CompositeInstance<double> inst{"flat", a, NonsmoothFunction::lammax(3), std::nullopt, std::nullopt};
  const WorkingManifold<double> wm(inst, EigMult<double>{3, Mat<double>::Identity(3, 3)});
  const auto wp = wm.evaluate(Vec<double>{{0.4}});
  EXPECT_LE(wm.lagrangian_hessian(wp, Vec<double>::Zero(wm.codim())).norm(), 1e-14);
}

TEST(WorkingManifold, LamMaxLagrangianHessianMatchesFiniteDifferences) {
  const auto inst = bench::build_eigmax_affine(42, 6, 12);
  const Vec<double> xs = cast_vec<double>(bench::load_reference(inst)->x);
  CounterRng rng(3);
  for (Index r : {1, 2}) {
    // x* has a double top eigenvalue; the r = 1 chart needs a point with an open gap
    const Vec<double> x = r == 2 ? xs : Vec<double>(Vec<double>::Ones(6));
    // anchor the chart at the top-r eigenbasis of c(x)
    const auto ep = sym_eigen(SymMatrix<double>::unflatten(eval_map(inst.map, x), 12));
    const WorkingManifold<double> wm(inst, EigMult<double>{r, ep.vectors.leftCols(r)});
    const auto wp = wm.evaluate(x);
    const Vec<double> mult = random_vec(rng, wm.codim());
    const Mat<double> hess = wm.lagrangian_hessian(wp, mult);
    const double h = std::cbrt(machine_eps<double>());
    const auto grad_l = [&](const Vec<double>& z) {
      const auto w = wm.evaluate(z);
      return Vec<double>(w.grad + w.jh.transpose() * mult);
    };
    for (int t = 0; t < 3; ++t) {
      const Vec<double> v = random_vec(rng, 6);
      const Vec<double> fd = (grad_l(Vec<double>(x + h * v)) - grad_l(Vec<double>(x - h * v))) / (2 * h);
      EXPECT_LE((hess * v - fd).norm(), 1e-6 * (1 + fd.norm())) << "r=" << r;
    }
  }
}

TEST(WorkingManifold, LamMaxJacobianMatchesFiniteDifferences) {
  const auto inst = bench::build_eigmax_affine(42, 6, 12);
  const Vec<double> x = cast_vec<double>(bench::load_reference(inst)->x);
  const auto ep = sym_eigen(SymMatrix<double>::unflatten(eval_map(inst.map, x), 12));
  const WorkingManifold<double> wm(inst, EigMult<double>{2, ep.vectors.leftCols(2)});
  const auto wp = wm.evaluate(x);
  CounterRng rng(4);
  const double h = std::cbrt(machine_eps<double>());
  for (int t = 0; t < 3; ++t) {
    const Vec<double> v = random_vec(rng, 6);
    const Vec<double> fd = (wm.constraint(Vec<double>(x + h * v)) - wm.constraint(Vec<double>(x - h * v))) / (2 * h);
    EXPECT_LE((wp.jh * v - fd).norm(), 1e-6 * (1 + fd.norm()));
    const double fdf = (wm.evaluate(Vec<double>(x + h * v)).f_tilde - wm.evaluate(Vec<double>(x - h * v)).f_tilde) / (2 * h);
    EXPECT_NEAR(wp.grad.dot(v), fdf, 1e-6 * (1 + std::abs(fdf)));
  }
}
