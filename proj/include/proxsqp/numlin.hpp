#pragma once

#include "proxsqp/errors.hpp"
#include "proxsqp/scalar.hpp"

namespace proxsqp {

/// Real symmetric matrix. Symmetry is exact: every constructor fills the
/// upper triangle from the lower one.
template <class T>
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Index m) : full_(Mat<T>::Zero(m, m)) {}

  /// Keeps the lower triangle of `a`, mirrors it upward.
  static SymMatrix from_lower(const Mat<T>& a);
  /// (a + a^T) / 2.
  static SymMatrix symmetrized(const Mat<T>& a);
  static SymMatrix diagonal(const Vec<T>& d);

  Index dim() const { return full_.rows(); }
  const T& operator()(Index i, Index j) const { return full_(i, j); }
  void set(Index i, Index j, const T& v) {
    full_(i, j) = v;
    full_(j, i) = v;
  }
  const Mat<T>& dense() const { return full_; }

  /// Column-major m*m flattening; the Frobenius inner product of two
  /// symmetric matrices is the dot product of their flattenings.
  Vec<T> flatten() const;
  static SymMatrix unflatten(const Vec<T>& v, Index m);

 private:
  Mat<T> full_;
};

template <class T>
struct EigenPair {
  Vec<T> values;   ///< non-increasing
  Mat<T> vectors;  ///< orthogonal; column j pairs with values(j)
};

/// Cyclic Jacobi eigensolver. Eigenvalues sorted non-increasing (ties keep
/// their original relative order); each eigenvector's first numerically
/// nonzero component is made positive. Throws NonFiniteInput.
template <class T>
EigenPair<T> sym_eigen(const SymMatrix<T>& s);

/// Orthonormal basis of ker(A) for A of full row rank (p <= n). Throws
/// RankDeficient when sigma_min(A) <= max(p, n) * eps * sigma_max(A).
template <class T>
Mat<T> nullspace_basis(const Mat<T>& a);

/// Singular values of A, non-increasing.
template <class T>
Vec<T> singular_values(const Mat<T>& a);

/// Minimum-norm minimizer of ||A x - b||.
template <class T>
Vec<T> lstsq_min_norm(const Mat<T>& a, const Vec<T>& b);

/// Solves S x = b for symmetric positive definite S; throws
/// IndefiniteReducedHessian when the Cholesky factorization breaks down.
template <class T>
Vec<T> solve_spd(const Mat<T>& s, const Vec<T>& b);

/// Largest absolute entry.
template <class T>
T max_abs(const Mat<T>& a) {
  using std::abs;
  T best = T(0);
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (abs(a(i, j)) > best) best = abs(a(i, j));
  return best;
}

template <class T>
T max_abs(const Vec<T>& v) {
  using std::abs;
  T best = T(0);
  for (Index i = 0; i < v.size(); ++i)
    if (abs(v(i)) > best) best = abs(v(i));
  return best;
}

/// Orthogonal polar factor of a square matrix (nearest orthogonal matrix).
template <class T>
Mat<T> polar_factor(const Mat<T>& a);

}  // namespace proxsqp
