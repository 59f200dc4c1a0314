#pragma once

#include "proxsqp/identify.hpp"

namespace proxsqp {

enum class SocRule { Classic, Literal };

template <class T>
struct SQPStep {
  Vec<T> d_sqp;
  Vec<T> d_normal;             ///< range-space part restoring Jh d = -h
  Vec<T> multiplier;
  T kkt_residual = T(0);       ///< ||grad + Jh^T mult||_inf at the current point
  T reduced_hessian_min_eig = T(0);
  T regularization = T(0);     ///< tau added to the reduced Hessian
};

/// argmin ||grad + Jh^T lambda||. Throws RankDeficient.
template <class T>
Vec<T> multiplier_ls(const Vec<T>& grad, const Mat<T>& jh);

/// Reduced-space solve of the equality-constrained QP
///   min <grad, d> + 1/2 <d, H d>  s.t.  h + Jh d = 0.
/// Adds tau I to the reduced Hessian Z^T H Z. Throws IndefiniteReducedHessian
/// and RankDeficient.
template <class T>
SQPStep<T> sqp_direction(const Vec<T>& grad, const Mat<T>& hess, const Vec<T>& h, const Mat<T>& jh,
                         T tau = T(0));

/// Minimum-norm d in the row space of Jh with Jh d = -h_eval.
template <class T>
Vec<T> second_order_correction(const Mat<T>& jh, const Vec<T>& h_eval);

/// Hessian of F~ + <mult, h> on the working manifold at wp.
template <class T>
Mat<T> lagrangian_hessian(const WorkingManifold<T>& wm, const WorkingPoint<T>& wp, const Vec<T>& mult);

/// Smallest eigenvalue of Z^T H Z, Z an orthonormal basis of ker Jh.
template <class T>
T reduced_hessian_min_eig(const Mat<T>& hess, const Mat<T>& jh);

}  // namespace proxsqp
