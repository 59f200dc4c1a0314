#include "proxsqp/nsfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "proxsqp/rng.hpp"

namespace proxsqp {

NonsmoothFunction NonsmoothFunction::max(Index m) {
  if (m < 1) throw InvalidArgument("max needs m >= 1");
  return {OuterKind::Max, m};
}

NonsmoothFunction NonsmoothFunction::lammax(Index m) {
  if (m < 1) throw InvalidArgument("lammax needs m >= 1");
  return {OuterKind::LamMax, m};
}

template <class T>
Index structure_size(const ManifoldDescriptor<T>& d) {
  if (const auto* mx = std::get_if<MaxActive>(&d)) return static_cast<Index>(mx->indices.size());
  return std::get<EigMult<T>>(d).r;
}

template <class T>
bool same_structure(const ManifoldDescriptor<T>& a, const ManifoldDescriptor<T>& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ma = std::get_if<MaxActive>(&a)) return ma->indices == std::get<MaxActive>(b).indices;
  return std::get<EigMult<T>>(a).r == std::get<EigMult<T>>(b).r;
}

template <class T>
std::string manifold_code(const ManifoldDescriptor<T>& d) {
  std::ostringstream os;
  if (const auto* mx = std::get_if<MaxActive>(&d)) {
    os << "max{";
    for (std::size_t i = 0; i < mx->indices.size(); ++i) os << (i ? " " : "") << mx->indices[i] + 1;
    os << "}";
  } else {
    os << "eig{r=" << std::get<EigMult<T>>(d).r << "}";
  }
  return os.str();
}

namespace {

template <class T>
Eigen::Map<const Mat<T>> as_matrix(const Vec<T>& v, Index m) {
  if (v.size() != m * m) throw DimensionMismatch("intermediate point has wrong size");
  return Eigen::Map<const Mat<T>>(v.data(), m, m);
}

template <class T>
Vec<T> flatten(const Mat<T>& a) {
  return Eigen::Map<const Vec<T>>(a.data(), a.size());
}

template <class T>
T spectral_scale(const Vec<T>& eigenvalues) {
  return max_abs(eigenvalues);
}

template <class T>
T gap_tolerance(const Vec<T>& eigenvalues, const ChartTolerances& tol) {
  return T(tol.gap_factor) * machine_eps<T>() * spectral_scale(eigenvalues);
}

template <class T>
void require_gap(const Vec<T>& lambda, Index r, const ChartTolerances& tol) {
  if (r >= lambda.size()) return;
  const T gap = lambda(r - 1) - lambda(r);
  const T gtol = gap_tolerance(lambda, tol);
  if (!(gap > gtol)) throw GapCollapse(to_double(gap), to_double(gtol));
}

}  // namespace

template <class T>
WaterFill<T> water_fill(const Vec<T>& z, T gamma) {
  if (!(gamma > T(0))) throw InvalidArgument("water_fill: gamma must be positive");
  const Index m = z.size();
  if (m == 0) throw InvalidArgument("water_fill: empty input");
  std::vector<T> sorted(z.data(), z.data() + m);
  std::sort(sorted.begin(), sorted.end(), [](const T& a, const T& b) { return a > b; });
  T prefix = T(0);
  T level = T(0);
  Index k = 0;
  for (Index j = 0; j < m; ++j) {
    prefix += sorted[static_cast<std::size_t>(j)];
    level = (prefix - gamma) / T(static_cast<double>(j + 1));
    k = j + 1;
    if (j + 1 == m || sorted[static_cast<std::size_t>(j + 1)] <= level) break;
  }
  Index count = 0;
  for (Index i = 0; i < m; ++i)
    if (z(i) > level) ++count;
  // gamma below the resolution of the largest entry: keep the scan's count
  return {level, count > 0 ? count : k};
}

template <class T>
T value(const NonsmoothFunction& g, const Vec<T>& y) {
  if (y.size() != g.intermediate_dim()) throw DimensionMismatch("value: point has wrong dimension");
  if (g.kind == OuterKind::Max) return y.maxCoeff();
  return sym_eigen(SymMatrix<T>::from_lower(as_matrix(y, g.m))).values(0);
}

template <class T>
ProxOutcome<T> prox_max(const Vec<T>& y, T gamma) {
  if (!(gamma > T(0))) throw InvalidArgument("prox_max: gamma must be positive");
  const WaterFill<T> wf = water_fill(y, gamma);
  ProxOutcome<T> out;
  out.gamma = gamma;
  out.threshold = wf.level;
  out.point = y;
  MaxActive active;
  bool strict_found = false;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) > wf.level) {
      active.indices.push_back(i);
      out.point(i) = wf.level;
      strict_found = true;
    }
  }
  if (!strict_found) {
    // gamma under one ulp of max(y): the prox leaves y unchanged
    Index best = 0;
    for (Index i = 1; i < y.size(); ++i)
      if (y(i) > y(best)) best = i;
    active.indices.push_back(best);
  }
  out.manifold = active;
  return out;
}

template <class T>
ProxOutcome<T> prox_lammax(const SymMatrix<T>& y, T gamma) {
  if (!(gamma > T(0))) throw InvalidArgument("prox_lammax: gamma must be positive");
  const EigenPair<T> ep = sym_eigen(y);
  const ProxOutcome<T> inner = prox_max(ep.values, gamma);
  const Index r = static_cast<Index>(std::get<MaxActive>(inner.manifold).indices.size());
  ProxOutcome<T> out;
  out.gamma = gamma;
  out.threshold = inner.threshold;
  out.spectrum = inner.point;
  out.basis = ep.vectors;
  const Mat<T> p = ep.vectors * out.spectrum.asDiagonal() * ep.vectors.transpose();
  out.point = SymMatrix<T>::symmetrized(p).flatten();
  out.manifold = EigMult<T>{r, ep.vectors.leftCols(r)};
  return out;
}

template <class T>
ProxOutcome<T> prox(const NonsmoothFunction& g, const Vec<T>& y, T gamma) {
  if (y.size() != g.intermediate_dim()) throw DimensionMismatch("prox: point has wrong dimension");
  if (g.kind == OuterKind::Max) return prox_max(y, gamma);
  return prox_lammax(SymMatrix<T>::from_lower(as_matrix(y, g.m)), gamma);
}

// ---------------------------------------------------------------------------
// Charts

namespace {

template <class T>
class MaxChartPoint final : public ChartPoint<T> {
 public:
  MaxChartPoint(const std::vector<Index>& active, const Vec<T>& y) : active_(active), y_(y) {
    h_ = defining_map_max(active_, y_);
  }
  Index codim() const override { return h_.size(); }
  const Vec<T>& constraint() const override { return h_; }
  Vec<T> constraint_derivative(const Vec<T>& dir) const override { return defining_map_max(active_, dir); }
  T extension_value() const override {
    T s = T(0);
    for (Index i : active_) s += y_(i);
    return s / T(static_cast<double>(active_.size()));
  }
  Vec<T> extension_gradient() const override {
    Vec<T> grad = Vec<T>::Zero(y_.size());
    const T w = T(1) / T(static_cast<double>(active_.size()));
    for (Index i : active_) grad(i) = w;
    return grad;
  }
  Vec<T> extension_hessian_vector(const Vec<T>& dir) const override { return Vec<T>::Zero(dir.size()); }
  Vec<T> lagrangian_hessian_vector(const Vec<T>&, const Vec<T>& dir) const override {
    return Vec<T>::Zero(dir.size());
  }

 private:
  const std::vector<Index>& active_;
  Vec<T> y_;
  Vec<T> h_;
};

template <class T>
class MaxChart final : public StructureChart<T> {
 public:
  MaxChart(Index m, MaxActive active) : m_(m), active_(std::move(active)) {
    if (active_.indices.empty()) throw InvalidArgument("max chart needs a nonempty active set");
    for (std::size_t i = 0; i < active_.indices.size(); ++i) {
      if (active_.indices[i] < 0 || active_.indices[i] >= m_) throw InvalidArgument("active index out of range");
      if (i > 0 && active_.indices[i] <= active_.indices[i - 1])
        throw InvalidArgument("active indices must be strictly increasing");
    }
  }
  Index codim() const override { return static_cast<Index>(active_.indices.size()) - 1; }
  std::unique_ptr<ChartPoint<T>> at(const Vec<T>& y) const override {
    if (y.size() != m_) throw DimensionMismatch("max chart: point has wrong dimension");
    return std::make_unique<MaxChartPoint<T>>(active_.indices, y);
  }

 private:
  Index m_;
  MaxActive active_;
};

/// Chart of {lambda_1 = ... = lambda_r} around the anchor basis R:
/// U(Y) = U0 polar(U0^T R), B = U^T Y U, h = (B_ij (i<j), B_ii - B_rr (i<r)).
template <class T>
class EigChartPoint final : public ChartPoint<T> {
 public:
  EigChartPoint(Index m, Index r, const Mat<T>& ref, const Vec<T>& y, const ChartTolerances& tol)
      : m_(m), r_(r), ref_(ref) {
    const EigenPair<T> ep = sym_eigen(SymMatrix<T>::from_lower(as_matrix(y, m)));
    require_gap(ep.values, r, tol);
    lambda_ = ep.values;
    u0_ = ep.vectors.leftCols(r);
    v_ = ep.vectors.rightCols(m - r);
    q_ = polar_factor<T>(u0_.transpose() * ref_);
    u_ = u0_ * q_;
    const Mat<T> b = q_.transpose() * lambda_.head(r).asDiagonal() * q_;
    b_ = (b + b.transpose()) / T(2);
    h_ = extract(b_);
    // H = U^T R is symmetric positive definite for the Procrustes alignment
    const Mat<T> hmat = u_.transpose() * ref_;
    const EigenPair<T> hp = sym_eigen(SymMatrix<T>::symmetrized(hmat));
    hvals_ = hp.values;
    hvecs_ = hp.vectors;
  }

  Index codim() const override { return r_ * (r_ + 1) / 2 - 1; }
  const Vec<T>& constraint() const override { return h_; }

  Vec<T> constraint_derivative(const Vec<T>& dir) const override {
    if (r_ == 1) return Vec<T>(0);
    const auto eta = as_matrix(dir, m_);
    // off-block coefficients of the top-r eigenvector derivatives
    const Mat<T> cross = v_.transpose() * eta * u0_;  // (m-r) x r
    Mat<T> chat(m_ - r_, r_);
    for (Index i = 0; i < r_; ++i)
      for (Index k = 0; k < m_ - r_; ++k) chat(k, i) = cross(k, i) / (lambda_(i) - lambda_(r_ + k));
    const Mat<T> du_perp = v_ * chat * q_;
    const Mat<T> n = du_perp.transpose() * ref_;
    const Mat<T> rhs = n - n.transpose();
    // W H + H W = rhs, solved in the eigenbasis of H
    Mat<T> wt = hvecs_.transpose() * rhs * hvecs_;
    for (Index a = 0; a < r_; ++a)
      for (Index c = 0; c < r_; ++c) wt(a, c) /= (hvals_(a) + hvals_(c));
    const Mat<T> w = hvecs_ * wt * hvecs_.transpose();
    const Mat<T> db = u_.transpose() * eta * u_ + b_ * w - w * b_;
    return extract(db);
  }

  T extension_value() const override { return lambda_.head(r_).sum() / T(static_cast<double>(r_)); }

  Vec<T> extension_gradient() const override {
    const Mat<T> g = (u0_ * u0_.transpose()) / T(static_cast<double>(r_));
    return flatten<T>(g);
  }

  Vec<T> extension_hessian_vector(const Vec<T>& dir) const override {
    const Mat<T> lam = Mat<T>::Identity(r_, r_) / T(static_cast<double>(r_));
    return contract_second_derivative(lam, dir);
  }

  Vec<T> lagrangian_hessian_vector(const Vec<T>& mult, const Vec<T>& dir) const override {
    if (mult.size() != codim()) throw DimensionMismatch("multiplier has wrong length");
    Mat<T> lam = Mat<T>::Identity(r_, r_) / T(static_cast<double>(r_));
    Index c = 0;
    for (Index i = 0; i < r_; ++i)
      for (Index j = i + 1; j < r_; ++j, ++c) {
        lam(i, j) += mult(c) / T(2);
        lam(j, i) += mult(c) / T(2);
      }
    for (Index i = 0; i + 1 < r_; ++i, ++c) {
      lam(i, i) += mult(c);
      lam(r_ - 1, r_ - 1) -= mult(c);
    }
    // weights are expressed on U = U0 Q; move them to the eigenbasis U0
    const Mat<T> lam0 = q_ * lam * q_.transpose();
    return contract_second_derivative(lam0, dir);
  }

 private:
  Vec<T> extract(const Mat<T>& b) const {
    Vec<T> out(codim());
    Index c = 0;
    for (Index i = 0; i < r_; ++i)
      for (Index j = i + 1; j < r_; ++j) out(c++) = b(i, j);
    for (Index i = 0; i + 1 < r_; ++i) out(c++) = b(i, i) - b(r_ - 1, r_ - 1);
    return out;
  }

  // X with <X, xi> = <lam, D^2 B[dir, xi]>, where on the eigenbasis
  // D^2 B_ij[eta, xi] = sum_k E_ki F_kj (1/(l_i - l_k) + 1/(l_j - l_k)) (symmetrized).
  Vec<T> contract_second_derivative(const Mat<T>& lam, const Vec<T>& dir) const {
    if (r_ == m_) return Vec<T>::Zero(m_ * m_);
    const auto eta = as_matrix(dir, m_);
    const Mat<T> e = v_.transpose() * eta * u0_;  // (m-r) x r
    Mat<T> t = Mat<T>::Zero(m_ - r_, r_);
    for (Index k = 0; k < m_ - r_; ++k) {
      const T lk = lambda_(r_ + k);
      for (Index j = 0; j < r_; ++j) {
        const T akj = T(1) / (lambda_(j) - lk);
        T acc = T(0);
        for (Index i = 0; i < r_; ++i) acc += e(k, i) * lam(i, j) * (T(1) / (lambda_(i) - lk) + akj);
        t(k, j) = acc;
      }
    }
    const Mat<T> x = v_ * t * u0_.transpose();
    const Mat<T> sym = (x + x.transpose()) / T(2);
    return flatten<T>(sym);
  }

  Index m_;
  Index r_;
  const Mat<T>& ref_;
  Vec<T> lambda_;
  Mat<T> u0_;
  Mat<T> v_;
  Mat<T> q_;
  Mat<T> u_;
  Mat<T> b_;
  Vec<T> h_;
  Vec<T> hvals_;
  Mat<T> hvecs_;
};

template <class T>
class EigChart final : public StructureChart<T> {
 public:
  EigChart(Index m, EigMult<T> d, ChartTolerances tol) : m_(m), d_(std::move(d)), tol_(tol) {
    if (d_.r < 1 || d_.r > m_) throw InvalidArgument("eig chart: multiplicity out of range");
    if (d_.ref_basis.rows() != m_ || d_.ref_basis.cols() != d_.r)
      throw DimensionMismatch("eig chart: reference basis must be m x r");
  }
  Index codim() const override { return d_.r * (d_.r + 1) / 2 - 1; }
  std::unique_ptr<ChartPoint<T>> at(const Vec<T>& y) const override {
    return std::make_unique<EigChartPoint<T>>(m_, d_.r, d_.ref_basis, y, tol_);
  }

 private:
  Index m_;
  EigMult<T> d_;
  ChartTolerances tol_;
};

}  // namespace

template <class T>
std::shared_ptr<const StructureChart<T>> make_chart(const NonsmoothFunction& g,
                                                    const ManifoldDescriptor<T>& d,
                                                    const ChartTolerances& tol) {
  if (g.kind == OuterKind::Max) {
    const auto* mx = std::get_if<MaxActive>(&d);
    if (!mx) throw InvalidArgument("max function needs a MaxActive descriptor");
    return std::make_shared<MaxChart<T>>(g.m, *mx);
  }
  const auto* em = std::get_if<EigMult<T>>(&d);
  if (!em) throw InvalidArgument("lammax function needs an EigMult descriptor");
  return std::make_shared<EigChart<T>>(g.m, *em, tol);
}

template <class T>
Vec<T> constraint_adjoint(const NonsmoothFunction& g, const ChartPoint<T>& pt, const Vec<T>& mult) {
  if (mult.size() != pt.codim()) throw DimensionMismatch("constraint_adjoint: multiplier has wrong length");
  const Index dim = g.intermediate_dim();
  Vec<T> w = Vec<T>::Zero(dim);
  if (mult.size() == 0) return w;
  Vec<T> e = Vec<T>::Zero(dim);
  if (g.kind == OuterKind::Max) {
    for (Index l = 0; l < dim; ++l) {
      e(l) = T(1);
      w(l) = pt.constraint_derivative(e).dot(mult);
      e(l) = T(0);
    }
    return w;
  }
  const Index m = g.m;
  for (Index j = 0; j < m; ++j)
    for (Index i = j; i < m; ++i) {
      e(i + j * m) += T(0.5);
      e(j + i * m) += T(0.5);
      const T v = pt.constraint_derivative(e).dot(mult);
      w(i + j * m) = v;
      w(j + i * m) = v;
      e(i + j * m) = T(0);
      e(j + i * m) = T(0);
    }
  return w;
}

template <class T>
Vec<T> defining_map_max(const std::vector<Index>& active, const Vec<T>& y) {
  if (active.empty()) throw InvalidArgument("defining_map_max: empty active set");
  const Index q = static_cast<Index>(active.size());
  Vec<T> h(q - 1);
  const T last = y(active.back());
  for (Index l = 0; l + 1 < q; ++l) h(l) = y(active[static_cast<std::size_t>(l)]) - last;
  return h;
}

template <class T>
Vec<T> defining_map_eig(Index r, const Mat<T>& ref_basis, const SymMatrix<T>& y,
                        const ChartTolerances& tol) {
  EigChart<T> chart(y.dim(), EigMult<T>{r, ref_basis}, tol);
  return chart.at(y.flatten())->constraint();
}

template <class T>
SmoothExtension<T>::SmoothExtension(NonsmoothFunction g, ManifoldDescriptor<T> d, ChartTolerances tol)
    : chart_(make_chart<T>(g, d, tol)) {}

template <class T>
T SmoothExtension<T>::value(const Vec<T>& y) const {
  return chart_->at(y)->extension_value();
}

template <class T>
Vec<T> SmoothExtension<T>::gradient(const Vec<T>& y) const {
  return chart_->at(y)->extension_gradient();
}

template <class T>
Vec<T> SmoothExtension<T>::hessian_vector(const Vec<T>& y, const Vec<T>& dir) const {
  return chart_->at(y)->extension_hessian_vector(dir);
}

// ---------------------------------------------------------------------------
// Manifold geometry

template <class T>
Vec<T> project_normal(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d, const Vec<T>& p,
                      const Vec<T>& v) {
  if (g.kind == OuterKind::Max) {
    const auto& idx = std::get<MaxActive>(d).indices;
    Vec<T> out = Vec<T>::Zero(v.size());
    T mean = T(0);
    for (Index i : idx) mean += v(i);
    mean /= T(static_cast<double>(idx.size()));
    for (Index i : idx) out(i) = v(i) - mean;
    return out;
  }
  const Index r = std::get<EigMult<T>>(d).r;
  const EigenPair<T> ep = sym_eigen(SymMatrix<T>::from_lower(as_matrix(p, g.m)));
  const Mat<T> u = ep.vectors.leftCols(r);
  Mat<T> z = u.transpose() * as_matrix(v, g.m) * u;
  z -= (z.trace() / T(static_cast<double>(r))) * Mat<T>::Identity(r, r);
  const Mat<T> n = u * z * u.transpose();
  return SymMatrix<T>::symmetrized(n).flatten();
}

template <class T>
Vec<T> project_to_manifold(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                           const Vec<T>& y) {
  if (g.kind == OuterKind::Max) {
    const auto& idx = std::get<MaxActive>(d).indices;
    T mean = T(0);
    for (Index i : idx) mean += y(i);
    mean /= T(static_cast<double>(idx.size()));
    Vec<T> out = y;
    T others = -std::numeric_limits<T>::infinity();
    for (Index i : idx) out(i) = mean;
    for (Index i = 0; i < y.size(); ++i)
      if (std::find(idx.begin(), idx.end(), i) == idx.end() && y(i) > others) others = y(i);
    if (others > mean) throw GapCollapse(to_double(mean - others), 0.0);
    return out;
  }
  const Index r = std::get<EigMult<T>>(d).r;
  const EigenPair<T> ep = sym_eigen(SymMatrix<T>::from_lower(as_matrix(y, g.m)));
  Vec<T> lam = ep.values;
  const T mean = lam.head(r).sum() / T(static_cast<double>(r));
  if (r < g.m) {
    const T gtol = gap_tolerance(lam, ChartTolerances{});
    if (!(mean - lam(r) > gtol)) throw GapCollapse(to_double(mean - lam(r)), to_double(gtol));
  }
  lam.head(r).setConstant(mean);
  const Mat<T> p = ep.vectors * lam.asDiagonal() * ep.vectors.transpose();
  return SymMatrix<T>::symmetrized(p).flatten();
}

template <class T>
Vec<T> riemannian_gradient(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                           const Vec<T>& p, const ChartTolerances& tol) {
  using std::abs;
  if (p.size() != g.intermediate_dim()) throw DimensionMismatch("riemannian_gradient: wrong dimension");
  const T on_tol = T(tol.on_manifold) * (T(1) + p.norm());
  Vec<T> ext;
  if (g.kind == OuterKind::Max) {
    const auto& idx = std::get<MaxActive>(d).indices;
    const T top = p.maxCoeff();
    for (Index i : idx)
      if (abs(p(i) - top) > on_tol) throw InvalidArgument("riemannian_gradient: point is off the manifold");
    ext = Vec<T>::Zero(p.size());
    for (Index i : idx) ext(i) = T(1) / T(static_cast<double>(idx.size()));
  } else {
    const Index r = std::get<EigMult<T>>(d).r;
    const EigenPair<T> ep = sym_eigen(SymMatrix<T>::from_lower(as_matrix(p, g.m)));
    if (ep.values(0) - ep.values(r - 1) > on_tol)
      throw InvalidArgument("riemannian_gradient: point is off the manifold");
    const Mat<T> u = ep.vectors.leftCols(r);
    ext = flatten<T>((u * u.transpose()) / T(static_cast<double>(r)));
  }
  return ext - project_normal(g, d, p, ext);
}

// ---------------------------------------------------------------------------
// Property checkers

double PolyhedralMax::value(const Vec<double>& y) const {
  return (slopes * y + offsets).maxCoeff();
}

double PolyhedralMax::directional_derivative(const Vec<double>& d) const {
  double best = -std::numeric_limits<double>::infinity();
  for (Index j : active) best = std::max(best, slopes.row(j).dot(d));
  return best;
}

Mat<double> PolyhedralMax::normal_basis() const {
  const Index k = static_cast<Index>(active.size()) - 1;
  if (k <= 0) return Mat<double>(slopes.cols(), 0);
  Mat<double> span(slopes.cols(), k);
  for (Index l = 0; l < k; ++l)
    span.col(l) = (slopes.row(active[static_cast<std::size_t>(l)]) - slopes.row(active.back())).transpose();
  Eigen::HouseholderQR<Mat<double>> qr(span);
  return qr.householderQ() * Mat<double>::Identity(span.rows(), k);
}

NormalAscentReport check_normal_ascent(const PolyhedralMax& g, int n_samples, std::uint64_t seed,
                                       double ascent_tol) {
  NormalAscentReport rep;
  const Mat<double> basis = g.normal_basis();
  if (basis.cols() == 0) {
    rep.min_directional_derivative = std::numeric_limits<double>::infinity();
    rep.pass = true;
    return rep;
  }
  CounterRng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    Vec<double> c(basis.cols());
    for (Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
    const Vec<double> d = basis * (c / c.norm());
    worst = std::min(worst, g.directional_derivative(d));
  }
  rep.min_directional_derivative = worst;
  rep.samples = n_samples;
  rep.pass = worst > ascent_tol;
  return rep;
}

template <class T>
NormalAscentReport check_normal_ascent(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                                       const Vec<T>& p, int n_samples, std::uint64_t seed,
                                       const ChartTolerances& tol) {
  // validates membership, throws when off the manifold
  (void)riemannian_gradient(g, d, p, tol);
  if (g.kind == OuterKind::Max) {
    PolyhedralMax poly;
    poly.slopes = Mat<double>::Identity(g.m, g.m);
    poly.offsets = Vec<double>::Zero(g.m);
    poly.active = std::get<MaxActive>(d).indices;
    return check_normal_ascent(poly, n_samples, seed, tol.ascent);
  }
  NormalAscentReport rep;
  const Index r = std::get<EigMult<T>>(d).r;
  if (r == 1) {
    rep.min_directional_derivative = std::numeric_limits<double>::infinity();
    rep.pass = true;
    return rep;
  }
  CounterRng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    Mat<double> z(r, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = j; i < r; ++i) {
        z(i, j) = rng.normal();
        z(j, i) = z(i, j);
      }
    z -= (z.trace() / static_cast<double>(r)) * Mat<double>::Identity(r, r);
    z /= z.norm();
    // lambda_max'(p; U Z U^T) = lambda_max(Z)
    worst = std::min(worst, sym_eigen(SymMatrix<double>::from_lower(z)).values(0));
  }
  rep.min_directional_derivative = worst;
  rep.samples = n_samples;
  rep.pass = worst > tol.ascent;
  return rep;
}

CurveProbeSet CurveProbeSet::log_spaced(double t_min, double t_max, int count, std::uint64_t seed) {
  CurveProbeSet p;
  p.seed = seed;
  for (int i = 0; i < count; ++i) {
    const double a = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    p.t_grid.push_back(t_min * std::pow(t_max / t_min, a));
  }
  return p;
}

template <class T>
CurveReport check_curve_property(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                                 const Vec<T>& y, const CurveProbeSet& probes,
                                 const ChartTolerances& tol) {
  using std::abs;
  CurveReport rep;
  try {
    const Vec<T> p = project_to_manifold(g, d, y);
    rep.distance = to_double((p - y).norm());
    rep.theta0 = to_double(project_normal(g, d, p, Vec<T>(p - y)).norm());
    const Vec<T> grad = riemannian_gradient(g, d, p, tol);
    const T floor = T(1e2) * machine_eps<T>() * (T(1) + y.norm());

    std::vector<Vec<T>> seconds{Vec<T>::Zero(y.size())};
    CounterRng rng(probes.seed);
    for (int k = 0; k < probes.random_directions; ++k) {
      Vec<T> xi(y.size());
      if (g.kind == OuterKind::Max) {
        for (Index i = 0; i < xi.size(); ++i) xi(i) = T(rng.normal());
      } else {
        Mat<T> s(g.m, g.m);
        for (Index j = 0; j < g.m; ++j)
          for (Index i = j; i < g.m; ++i) {
            s(i, j) = T(rng.normal());
            s(j, i) = s(i, j);
          }
        xi = flatten<T>(s);
      }
      xi -= project_normal(g, d, p, xi);
      xi *= T(probes.direction_scale) / xi.norm();
      seconds.push_back(xi);
    }

    double max_excess = 0.0;
    double exponent = std::numeric_limits<double>::infinity();
    bool any_fit = false;
    for (const Vec<T>& xi : seconds) {
      std::vector<double> lt;
      std::vector<double> le;
      for (double tv : probes.t_grid) {
        const T t(tv);
        const Vec<T> e = project_to_manifold(g, d, Vec<T>(p - t * grad + t * t * xi));
        const T theta = project_normal(g, d, e, Vec<T>(e - y)).norm();
        const T excess = abs(theta - T(rep.theta0));
        max_excess = std::max(max_excess, to_double(excess));
        if (excess > floor) {
          lt.push_back(std::log(tv));
          le.push_back(std::log(to_double(excess)));
        }
      }
      if (lt.size() < 3) continue;
      const double n = static_cast<double>(lt.size());
      const double mx = std::accumulate(lt.begin(), lt.end(), 0.0) / n;
      const double my = std::accumulate(le.begin(), le.end(), 0.0) / n;
      double sxx = 0.0;
      double sxy = 0.0;
      for (std::size_t i = 0; i < lt.size(); ++i) {
        sxx += (lt[i] - mx) * (lt[i] - mx);
        sxy += (lt[i] - mx) * (le[i] - my);
      }
      exponent = std::min(exponent, sxy / sxx);
      any_fit = true;
    }
    rep.max_excess = max_excess;
    rep.zero_excess = !any_fit && max_excess <= to_double(floor);
    rep.exponent = any_fit ? exponent : std::numeric_limits<double>::infinity();
    rep.pass = any_fit ? exponent >= 2.0 - tol.fit : rep.zero_excess;
  } catch (const GapCollapse&) {
    rep.chart_failure = true;
    rep.pass = false;
  }
  return rep;
}

#define PROXSQP_INSTANTIATE(T)                                                                          \
  template Index structure_size<T>(const ManifoldDescriptor<T>&);                                       \
  template bool same_structure<T>(const ManifoldDescriptor<T>&, const ManifoldDescriptor<T>&);         \
  template std::string manifold_code<T>(const ManifoldDescriptor<T>&);                                  \
  template WaterFill<T> water_fill<T>(const Vec<T>&, T);                                                \
  template T value<T>(const NonsmoothFunction&, const Vec<T>&);                                         \
  template ProxOutcome<T> prox_max<T>(const Vec<T>&, T);                                                \
  template ProxOutcome<T> prox_lammax<T>(const SymMatrix<T>&, T);                                       \
  template ProxOutcome<T> prox<T>(const NonsmoothFunction&, const Vec<T>&, T);                          \
  template std::shared_ptr<const StructureChart<T>> make_chart<T>(                                      \
      const NonsmoothFunction&, const ManifoldDescriptor<T>&, const ChartTolerances&);                  \
  template Vec<T> constraint_adjoint<T>(const NonsmoothFunction&, const ChartPoint<T>&, const Vec<T>&); \
  template Vec<T> defining_map_max<T>(const std::vector<Index>&, const Vec<T>&);                        \
  template Vec<T> defining_map_eig<T>(Index, const Mat<T>&, const SymMatrix<T>&, const ChartTolerances&); \
  template class SmoothExtension<T>;                                                                    \
  template Vec<T> project_normal<T>(const NonsmoothFunction&, const ManifoldDescriptor<T>&,             \
                                    const Vec<T>&, const Vec<T>&);                                      \
  template Vec<T> project_to_manifold<T>(const NonsmoothFunction&, const ManifoldDescriptor<T>&,        \
                                         const Vec<T>&);                                                \
  template Vec<T> riemannian_gradient<T>(const NonsmoothFunction&, const ManifoldDescriptor<T>&,        \
                                         const Vec<T>&, const ChartTolerances&);                        \
  template NormalAscentReport check_normal_ascent<T>(const NonsmoothFunction&,                          \
                                                     const ManifoldDescriptor<T>&, const Vec<T>&, int,  \
                                                     std::uint64_t, const ChartTolerances&);            \
  template CurveReport check_curve_property<T>(const NonsmoothFunction&, const ManifoldDescriptor<T>&,  \
                                               const Vec<T>&, const CurveProbeSet&,                     \
                                               const ChartTolerances&);

PROXSQP_INSTANTIATE(double)
PROXSQP_INSTANTIATE(Extended)

}  // namespace proxsqp
