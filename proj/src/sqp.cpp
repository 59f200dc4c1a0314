#include "proxsqp/sqp.hpp"

namespace proxsqp {

namespace {

template <class T>
void require_full_row_rank(const Mat<T>& jh) {
  if (jh.rows() == 0) return;
  (void)nullspace_basis(jh);
}

template <class T>
T max_abs_or_zero(const Vec<T>& v) {
  return v.size() == 0 ? T(0) : max_abs(v);
}

}  // namespace

template <class T>
Vec<T> multiplier_ls(const Vec<T>& grad, const Mat<T>& jh) {
  if (jh.cols() != grad.size()) throw DimensionMismatch("multiplier_ls: Jacobian and gradient disagree");
  if (jh.rows() == 0) return Vec<T>(0);
  require_full_row_rank(jh);
  const Mat<T> jt = jh.transpose();
  return lstsq_min_norm<T>(jt, Vec<T>(-grad));
}

template <class T>
SQPStep<T> sqp_direction(const Vec<T>& grad, const Mat<T>& hess, const Vec<T>& h, const Mat<T>& jh, T tau) {
  const Index n = grad.size();
  if (hess.rows() != n || hess.cols() != n) throw DimensionMismatch("sqp_direction: Hessian has wrong size");
  if (jh.rows() != h.size() || jh.cols() != n) throw DimensionMismatch("sqp_direction: Jacobian has wrong size");
  SQPStep<T> step;
  const Mat<T> z = nullspace_basis(jh);
  step.d_normal = jh.rows() == 0 ? Vec<T>(Vec<T>::Zero(n)) : lstsq_min_norm<T>(jh, Vec<T>(-h));
  Mat<T> reduced = z.transpose() * hess * z;
  reduced = (reduced + reduced.transpose()) / T(2);
  if (z.cols() > 0) {
    const EigenPair<T> ep = sym_eigen(SymMatrix<T>::from_lower(reduced));
    step.reduced_hessian_min_eig = ep.values(ep.values.size() - 1);
  }
  reduced += tau * Mat<T>::Identity(z.cols(), z.cols());
  step.regularization = tau;
  const Vec<T> rhs = -(z.transpose() * (grad + hess * step.d_normal));
  const Vec<T> dt = solve_spd<T>(reduced, rhs);
  step.d_sqp = step.d_normal + z * dt;
  step.multiplier = multiplier_ls(grad, jh);
  step.kkt_residual = max_abs_or_zero(Vec<T>(grad + jh.transpose() * step.multiplier));
  return step;
}

template <class T>
Vec<T> second_order_correction(const Mat<T>& jh, const Vec<T>& h_eval) {
  if (jh.rows() != h_eval.size()) throw DimensionMismatch("second_order_correction: size mismatch");
  if (jh.rows() == 0) return Vec<T>::Zero(jh.cols());
  require_full_row_rank(jh);
  return lstsq_min_norm<T>(jh, Vec<T>(-h_eval));
}

template <class T>
Mat<T> lagrangian_hessian(const WorkingManifold<T>& wm, const WorkingPoint<T>& wp, const Vec<T>& mult) {
  return wm.lagrangian_hessian(wp, mult);
}

template <class T>
T reduced_hessian_min_eig(const Mat<T>& hess, const Mat<T>& jh) {
  const Mat<T> z = nullspace_basis(jh);
  if (z.cols() == 0) return T(0);
  const Mat<T> reduced = z.transpose() * hess * z;
  const EigenPair<T> ep = sym_eigen(SymMatrix<T>::symmetrized(reduced));
  return ep.values(ep.values.size() - 1);
}

#define PROXSQP_INSTANTIATE(T)                                                                       \
  template Vec<T> multiplier_ls<T>(const Vec<T>&, const Mat<T>&);                                    \
  template SQPStep<T> sqp_direction<T>(const Vec<T>&, const Mat<T>&, const Vec<T>&, const Mat<T>&, T); \
  template Vec<T> second_order_correction<T>(const Mat<T>&, const Vec<T>&);                          \
  template Mat<T> lagrangian_hessian<T>(const WorkingManifold<T>&, const WorkingPoint<T>&, const Vec<T>&); \
  template T reduced_hessian_min_eig<T>(const Mat<T>&, const Mat<T>&);

PROXSQP_INSTANTIATE(double)
PROXSQP_INSTANTIATE(Extended)

}  // namespace proxsqp
