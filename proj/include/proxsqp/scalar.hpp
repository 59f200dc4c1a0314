#pragma once

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace proxsqp {

/// Software quad precision (113-bit mantissa, ~34 significant digits).
using Extended = boost::multiprecision::float128;

enum class Precision { Double, Extended };

using Index = Eigen::Index;

template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
inline T machine_eps() {
  return std::numeric_limits<T>::epsilon();
}

template <class T>
inline double to_double(const T& x) {
  return static_cast<double>(x);
}

/// Shortest decimal text that reads back to the same value.
template <class T>
std::string to_string_exact(const T& x);

template <class T>
T parse_scalar(std::string_view text);

/// C99 hex-float encoding, bit exact for double.
std::string to_hexfloat(double x);
double parse_hexfloat(std::string_view text);

template <class To, class From>
Vec<To> cast_vec(const Vec<From>& v) {
  Vec<To> out(v.size());
  for (Index i = 0; i < v.size(); ++i) out(i) = static_cast<To>(v(i));
  return out;
}

template <class To, class From>
Mat<To> cast_mat(const Mat<From>& a) {
  Mat<To> out(a.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) out(i, j) = static_cast<To>(a(i, j));
  return out;
}

template <class T>
bool all_finite(const Vec<T>& v) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  for (Index i = 0; i < v.size(); ++i)
    if (!isfinite(v(i))) return false;
  return true;
}

template <class T>
bool all_finite(const Mat<T>& a) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (!isfinite(a(i, j))) return false;
  return true;
}

}  // namespace proxsqp
