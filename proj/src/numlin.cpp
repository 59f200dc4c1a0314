#include "proxsqp/numlin.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <vector>

namespace proxsqp {

template <>
std::string to_string_exact<double>(const double& x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <>
std::string to_string_exact<Extended>(const Extended& x) {
  std::ostringstream os;
  os.precision(std::numeric_limits<Extended>::max_digits10);
  os << std::scientific << x;
  return os.str();
}

template <>
double parse_scalar<double>(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw DataError("cannot parse number '" + std::string(text) + "'");
  return v;
}

template <>
Extended parse_scalar<Extended>(std::string_view text) {
  try {
    return Extended(std::string(text));
  } catch (const std::exception&) {
    throw DataError("cannot parse number '" + std::string(text) + "'");
  }
}

std::string to_hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

double parse_hexfloat(std::string_view text) {
  std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw DataError("cannot parse hex float '" + s + "'");
  return v;
}

template <class T>
SymMatrix<T> SymMatrix<T>::from_lower(const Mat<T>& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("SymMatrix needs a square matrix");
  SymMatrix s(a.rows());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = j; i < a.rows(); ++i) s.set(i, j, a(i, j));
  return s;
}

template <class T>
SymMatrix<T> SymMatrix<T>::symmetrized(const Mat<T>& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("SymMatrix needs a square matrix");
  SymMatrix s(a.rows());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = j; i < a.rows(); ++i) s.set(i, j, (a(i, j) + a(j, i)) / T(2));
  return s;
}

template <class T>
SymMatrix<T> SymMatrix<T>::diagonal(const Vec<T>& d) {
  SymMatrix s(d.size());
  for (Index i = 0; i < d.size(); ++i) s.full_(i, i) = d(i);
  return s;
}

template <class T>
Vec<T> SymMatrix<T>::flatten() const {
  return Eigen::Map<const Vec<T>>(full_.data(), full_.size());
}

template <class T>
SymMatrix<T> SymMatrix<T>::unflatten(const Vec<T>& v, Index m) {
  if (v.size() != m * m) throw DimensionMismatch("flattened symmetric matrix has wrong length");
  Mat<T> a = Eigen::Map<const Mat<T>>(v.data(), m, m);
  return from_lower(a);
}

namespace {

template <class T>
void jacobi_rotate(Mat<T>& a, Mat<T>& v, Index p, Index q) {
  using std::abs;
  using std::sqrt;
  const Index m = a.rows();
  const T apq = a(p, q);
  const T theta = (a(q, q) - a(p, p)) / (T(2) * apq);
  const T t = (theta >= T(0) ? T(1) : T(-1)) / (abs(theta) + sqrt(theta * theta + T(1)));
  const T c = T(1) / sqrt(t * t + T(1));
  const T s = t * c;
  const T tau = s / (T(1) + c);

  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = T(0);
  a(q, p) = T(0);
  for (Index k = 0; k < m; ++k) {
    if (k == p || k == q) continue;
    const T akp = a(k, p);
    const T akq = a(k, q);
    const T nkp = akp - s * (akq + tau * akp);
    const T nkq = akq + s * (akp - tau * akq);
    a(k, p) = nkp;
    a(p, k) = nkp;
    a(k, q) = nkq;
    a(q, k) = nkq;
  }
  for (Index k = 0; k < m; ++k) {
    const T vkp = v(k, p);
    const T vkq = v(k, q);
    v(k, p) = vkp - s * (vkq + tau * vkp);
    v(k, q) = vkq + s * (vkp - tau * vkq);
  }
}

}  // namespace

template <class T>
EigenPair<T> sym_eigen(const SymMatrix<T>& s) {
  using std::abs;
  using std::sqrt;
  if (!all_finite(s.dense())) throw NonFiniteInput("sym_eigen: non-finite entry");
  const Index m = s.dim();
  Mat<T> a = s.dense();
  Mat<T> v = Mat<T>::Identity(m, m);
  const T eps = machine_eps<T>();
  const T tiny = std::numeric_limits<T>::min() / eps;

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p < m; ++p) {
      for (Index q = p + 1; q < m; ++q) {
        const T apq = abs(a(p, q));
        if (apq <= tiny) continue;
        // relative-accuracy threshold (Demmel-Veselic)
        if (apq <= eps * sqrt(abs(a(p, p))) * sqrt(abs(a(q, q)))) continue;
        jacobi_rotate(a, v, p, q);
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });

  EigenPair<T> out;
  out.values.resize(m);
  out.vectors.resize(m, m);
  const T sign_floor = T(static_cast<double>(m)) * eps;
  for (Index j = 0; j < m; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = a(src, src);
    out.vectors.col(j) = v.col(src);
    for (Index i = 0; i < m; ++i) {
      if (abs(out.vectors(i, j)) > sign_floor) {
        if (out.vectors(i, j) < T(0)) out.vectors.col(j) *= T(-1);
        break;
      }
    }
  }
  return out;
}

template <class T>
Vec<T> singular_values(const Mat<T>& a) {
  if (a.rows() == 0 || a.cols() == 0) return Vec<T>(0);
  Eigen::JacobiSVD<Mat<T>> svd(a);
  return svd.singularValues();
}

template <class T>
Mat<T> nullspace_basis(const Mat<T>& a) {
  const Index p = a.rows();
  const Index n = a.cols();
  if (p == 0) return Mat<T>::Identity(n, n);
  if (p > n) throw RankDeficient(0.0, 0.0);
  if (!all_finite(a)) throw NonFiniteInput("nullspace_basis: non-finite entry");
  Eigen::JacobiSVD<Mat<T>> svd(a, Eigen::ComputeFullV);
  const Vec<T>& sv = svd.singularValues();
  const T tol = T(static_cast<double>(std::max(p, n))) * machine_eps<T>() * sv(0);
  const T smin = sv(p - 1);
  if (!(smin > tol)) throw RankDeficient(to_double(smin), to_double(tol));
  return svd.matrixV().rightCols(n - p);
}

template <class T>
Vec<T> lstsq_min_norm(const Mat<T>& a, const Vec<T>& b) {
  if (a.rows() != b.size()) throw DimensionMismatch("lstsq: rows of A differ from length of b");
  if (a.cols() == 0) return Vec<T>(0);
  if (a.rows() == 0) return Vec<T>::Zero(a.cols());
  Eigen::JacobiSVD<Mat<T>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.solve(b);
}

template <class T>
Vec<T> solve_spd(const Mat<T>& s, const Vec<T>& b) {
  if (s.rows() == 0) return Vec<T>(0);
  Eigen::LLT<Mat<T>> llt(s);
  if (llt.info() != Eigen::Success) {
    const EigenPair<T> ep = sym_eigen(SymMatrix<T>::symmetrized(s));
    throw IndefiniteReducedHessian(to_double(ep.values(ep.values.size() - 1)));
  }
  return llt.solve(b);
}

template <class T>
Mat<T> polar_factor(const Mat<T>& a) {
  if (a.rows() == 0) return a;
  Eigen::JacobiSVD<Mat<T>> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

#define PROXSQP_INSTANTIATE(T)                                    \
  template class SymMatrix<T>;                                    \
  template EigenPair<T> sym_eigen<T>(const SymMatrix<T>&);        \
  template Mat<T> nullspace_basis<T>(const Mat<T>&);              \
  template Vec<T> singular_values<T>(const Mat<T>&);              \
  template Vec<T> lstsq_min_norm<T>(const Mat<T>&, const Vec<T>&); \
  template Vec<T> solve_spd<T>(const Mat<T>&, const Vec<T>&);     \
  template Mat<T> polar_factor<T>(const Mat<T>&);

PROXSQP_INSTANTIATE(double)
PROXSQP_INSTANTIATE(Extended)

}  // namespace proxsqp
