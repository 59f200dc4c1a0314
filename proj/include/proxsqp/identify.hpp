#pragma once

#include <functional>
#include <memory>

#include "proxsqp/nsfun.hpp"
#include "proxsqp/smoothmap.hpp"

namespace proxsqp {

/// Everything the SQP step needs at one input point x, for a fixed working
/// manifold: constraint h(x) = h_inter(c(x)), its Jacobian, and the smooth
/// extension F~(x) = g~(c(x)) with its gradient.
template <class T>
struct WorkingPoint {
  Vec<T> x;
  Vec<T> c;       ///< c(x), flattened
  Mat<T> jc;      ///< Jacobian of c
  Vec<T> h;
  Mat<T> jh;      ///< p x n
  T f_tilde = T(0);
  Vec<T> grad;    ///< gradient of F~
  std::shared_ptr<const StructureChart<T>> chart;
  std::shared_ptr<const ChartPoint<T>> chart_point;
};

/// Input-space working manifold c^{-1}(M) carried as a constraint map.
template <class T>
class WorkingManifold {
 public:
  WorkingManifold(const CompositeInstance<T>& inst, ManifoldDescriptor<T> d, ChartTolerances tol = {});

  const ManifoldDescriptor<T>& descriptor() const { return descriptor_; }
  Index codim() const { return chart_->codim(); }

  /// Throws GapCollapse when the chart is invalid at c(x).
  WorkingPoint<T> evaluate(const Vec<T>& x) const;
  Vec<T> constraint(const Vec<T>& x) const;

  /// Hessian of F~ + <mult, h> at the evaluated point, by the chain rule.
  Mat<T> lagrangian_hessian(const WorkingPoint<T>& wp, const Vec<T>& mult) const;

 private:
  const CompositeInstance<T>* inst_;
  ManifoldDescriptor<T> descriptor_;
  std::shared_ptr<const StructureChart<T>> chart_;
};

template <class T>
struct Detection {
  ProxOutcome<T> prox;
  WorkingManifold<T> manifold;
};

/// prox of gamma g at c(x); the prox eigenbasis anchors the LamMax chart.
template <class T>
Detection<T> detect(const CompositeInstance<T>& inst, const Vec<T>& x, T gamma,
                    const ChartTolerances& tol = {});

struct GammaPolicy {
  double gamma0 = 1.0;
  double factor = 0.5;
  void validate() const;
};

/// Smallest gamma for which prox_{gamma g}(y) has maximal structure: doubling
/// from 1e-6 (1 + ||y||), then bisection to relative tolerance `rel_tol`.
template <class T>
T gamma_init(const NonsmoothFunction& g, const Vec<T>& y, double rel_tol = 1e-6);

template <class T>
T gamma_init(const CompositeInstance<T>& inst, const Vec<T>& x0, double rel_tol = 1e-6);

struct GammaWindow {
  double low = 0.0;
  double up = 0.0;
  bool empty = true;
  bool contiguous = true;  ///< detection matched the target at every probe inside the window
};

/// Edges of the gamma interval inside [bracket_lo, bracket_hi] whose detection
/// equals `target`, bisected in log space to relative tolerance `rel_tol`.
/// Relies on structure size growing monotonically with gamma; contiguity is
/// probed and reported, not assumed silently.
template <class T>
GammaWindow gamma_range_scan(const NonsmoothFunction& g, const Vec<T>& y, const ManifoldDescriptor<T>& target,
                             double bracket_lo, double bracket_hi, double rel_tol = 1e-6);

template <class T>
GammaWindow gamma_range_scan(const CompositeInstance<T>& inst, const Vec<T>& x,
                             const ManifoldDescriptor<T>& target, double bracket_lo, double bracket_hi,
                             double rel_tol = 1e-6);

struct TransversalityReport {
  double min_singular_value = 0.0;
  double rank_tol = 0.0;
  bool pass = false;
};

/// Full-row-rank test of the Jacobian of h o c at x.
template <class T>
TransversalityReport transversality_check(const CompositeInstance<T>& inst, const Vec<T>& x,
                                          const ManifoldDescriptor<T>& d, const ChartTolerances& tol = {});

}  // namespace proxsqp
