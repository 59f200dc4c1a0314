#include "proxsqp/identify.hpp"

#include <cmath>
#include <limits>

namespace proxsqp {

template <class T>
WorkingManifold<T>::WorkingManifold(const CompositeInstance<T>& inst, ManifoldDescriptor<T> d,
                                    ChartTolerances tol)
    : inst_(&inst), descriptor_(std::move(d)), chart_(make_chart<T>(inst.outer, descriptor_, tol)) {}

template <class T>
WorkingPoint<T> WorkingManifold<T>::evaluate(const Vec<T>& x) const {
  WorkingPoint<T> wp;
  wp.x = x;
  wp.c = eval_map(inst_->map, x);
  wp.jc = jacobian(inst_->map, x);
  wp.chart = chart_;
  wp.chart_point = chart_->at(wp.c);
  const ChartPoint<T>& pt = *wp.chart_point;
  wp.h = pt.constraint();
  wp.jh.resize(pt.codim(), x.size());
  for (Index j = 0; j < x.size(); ++j) wp.jh.col(j) = pt.constraint_derivative(wp.jc.col(j));
  wp.f_tilde = pt.extension_value();
  wp.grad = wp.jc.transpose() * pt.extension_gradient();
  return wp;
}

template <class T>
Vec<T> WorkingManifold<T>::constraint(const Vec<T>& x) const {
  return chart_->at(eval_map(inst_->map, x))->constraint();
}

template <class T>
Mat<T> WorkingManifold<T>::lagrangian_hessian(const WorkingPoint<T>& wp, const Vec<T>& mult) const {
  const ChartPoint<T>& pt = *wp.chart_point;
  const Index n = wp.x.size();
  Mat<T> hv(wp.c.size(), n);
  for (Index j = 0; j < n; ++j) hv.col(j) = pt.lagrangian_hessian_vector(mult, wp.jc.col(j));
  Mat<T> hess = wp.jc.transpose() * hv;
  if (!is_affine(inst_->map)) {
    // gradient of g~ + <mult, h> in the intermediate space, contracted with D^2 c
    Vec<T> w = pt.extension_gradient();
    if (mult.size() > 0) w += constraint_adjoint(inst_->outer, pt, mult);
    Vec<T> ei = Vec<T>::Zero(n);
    Vec<T> ej = Vec<T>::Zero(n);
    for (Index i = 0; i < n; ++i) {
      ei(i) = T(1);
      for (Index j = 0; j <= i; ++j) {
        ej(j) = T(1);
        const T v = w.dot(second_directional(inst_->map, wp.x, ei, ej));
        hess(i, j) += v;
        if (i != j) hess(j, i) += v;
        ej(j) = T(0);
      }
      ei(i) = T(0);
    }
  }
  return (hess + hess.transpose()) / T(2);
}

template <class T>
Detection<T> detect(const CompositeInstance<T>& inst, const Vec<T>& x, T gamma, const ChartTolerances& tol) {
  ProxOutcome<T> p = prox(inst.outer, eval_map(inst.map, x), gamma);
  WorkingManifold<T> wm(inst, p.manifold, tol);
  return {std::move(p), std::move(wm)};
}

void GammaPolicy::validate() const {
  if (!(gamma0 > 0.0)) throw InvalidArgument("gamma0 must be positive");
  if (!(factor > 0.0 && factor < 1.0)) throw InvalidArgument("gamma factor must lie in (0, 1)");
}

template <class T>
T gamma_init(const NonsmoothFunction& g, const Vec<T>& y, double rel_tol) {
  const auto size_at = [&](T gamma) { return structure_size(prox(g, y, gamma).manifold); };
  const Index full = g.m;
  T gamma = T(1e-6) * (T(1) + y.norm());
  if (size_at(gamma) == full) return gamma;
  for (int i = 0; i < 4000 && size_at(gamma) < full; ++i) gamma *= T(2);
  T lo = gamma / T(2);
  T hi = gamma;
  while (hi - lo > T(rel_tol) * hi) {
    const T mid = (lo + hi) / T(2);
    if (size_at(mid) == full)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

template <class T>
T gamma_init(const CompositeInstance<T>& inst, const Vec<T>& x0, double rel_tol) {
  return gamma_init(inst.outer, eval_map(inst.map, x0), rel_tol);
}

template <class T>
GammaWindow gamma_range_scan(const NonsmoothFunction& g, const Vec<T>& y, const ManifoldDescriptor<T>& target,
                             double bracket_lo, double bracket_hi, double rel_tol) {
  if (!(bracket_lo > 0.0 && bracket_hi > bracket_lo)) throw InvalidArgument("gamma bracket must satisfy 0 < lo < hi");
  const auto detect_at = [&](double gamma) { return prox(g, y, T(gamma)).manifold; };
  const auto size_at = [&](double gamma) { return structure_size(detect_at(gamma)); };
  const Index k = structure_size(target);
  GammaWindow w;

  const auto bisect = [&](double lo, double hi, auto lower_side) {
    while (hi / lo - 1.0 > rel_tol) {
      const double mid = std::sqrt(lo * hi);
      if (lower_side(size_at(mid)))
        lo = mid;
      else
        hi = mid;
    }
    return std::pair{lo, hi};
  };

  if (size_at(bracket_lo) >= k) {
    w.low = bracket_lo;
  } else if (size_at(bracket_hi) < k) {
    return w;
  } else {
    w.low = bisect(bracket_lo, bracket_hi, [&](Index s) { return s < k; }).second;
  }
  if (size_at(bracket_hi) <= k) {
    w.up = bracket_hi;
  } else if (size_at(bracket_lo) > k) {
    return w;
  } else {
    w.up = bisect(bracket_lo, bracket_hi, [&](Index s) { return s <= k; }).first;
  }
  if (w.low > w.up) return w;
  if (!same_structure(detect_at(w.low), target) || !same_structure(detect_at(w.up), target)) return w;
  w.empty = false;
  constexpr int kProbes = 7;
  for (int i = 1; i < kProbes; ++i) {
    const double gamma = w.low * std::pow(w.up / w.low, static_cast<double>(i) / kProbes);
    if (!same_structure(detect_at(gamma), target)) w.contiguous = false;
  }
  return w;
}

template <class T>
GammaWindow gamma_range_scan(const CompositeInstance<T>& inst, const Vec<T>& x,
                             const ManifoldDescriptor<T>& target, double bracket_lo, double bracket_hi,
                             double rel_tol) {
  return gamma_range_scan(inst.outer, eval_map(inst.map, x), target, bracket_lo, bracket_hi, rel_tol);
}

template <class T>
TransversalityReport transversality_check(const CompositeInstance<T>& inst, const Vec<T>& x,
                                          const ManifoldDescriptor<T>& d, const ChartTolerances& tol) {
  TransversalityReport rep;
  const WorkingManifold<T> wm(inst, d, tol);
  const WorkingPoint<T> wp = wm.evaluate(x);
  const Index p = wp.jh.rows();
  const Index n = wp.jh.cols();
  if (p == 0) {
    rep.min_singular_value = std::numeric_limits<double>::infinity();
    rep.pass = true;
    return rep;
  }
  const Vec<T> sv = singular_values(wp.jh);
  rep.rank_tol = to_double(T(static_cast<double>(std::max(p, n))) * machine_eps<T>() * sv(0));
  rep.min_singular_value = p > n ? 0.0 : to_double(sv(p - 1));
  rep.pass = p <= n && rep.min_singular_value > rep.rank_tol;
  return rep;
}

#define PROXSQP_INSTANTIATE(T)                                                                            \
  template class WorkingManifold<T>;                                                                      \
  template Detection<T> detect<T>(const CompositeInstance<T>&, const Vec<T>&, T, const ChartTolerances&); \
  template T gamma_init<T>(const NonsmoothFunction&, const Vec<T>&, double);                              \
  template T gamma_init<T>(const CompositeInstance<T>&, const Vec<T>&, double);                           \
  template GammaWindow gamma_range_scan<T>(const NonsmoothFunction&, const Vec<T>&,                       \
                                           const ManifoldDescriptor<T>&, double, double, double);         \
  template GammaWindow gamma_range_scan<T>(const CompositeInstance<T>&, const Vec<T>&,                    \
                                           const ManifoldDescriptor<T>&, double, double, double);         \
  template TransversalityReport transversality_check<T>(const CompositeInstance<T>&, const Vec<T>&,       \
                                                        const ManifoldDescriptor<T>&, const ChartTolerances&);

PROXSQP_INSTANTIATE(double)
PROXSQP_INSTANTIATE(Extended)

}  // namespace proxsqp
