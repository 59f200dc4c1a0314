#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "proxsqp/nsfun.hpp"

namespace proxsqp {

/// c_i(x) = 1/2 x^T A_i x + b_i^T x + c0_i, i = 1..m.
template <class T>
struct QuadraticFamily {
  std::vector<Mat<T>> a;
  std::vector<Vec<T>> b;
  Vec<T> c0;
};

/// c(x) = A_0 + sum_i x_i A_i, symmetric m x m.
template <class T>
struct AffineMatrixMap {
  std::vector<Mat<T>> a;  ///< a[0] .. a[n]
};

/// c(x) = (2.6 x1^2 + 4 (x2 - 1)^2 - 4, x1^2 + 4 (x2 + 1)^2 - 4).
struct AnalyticPair {};

template <class T>
using SmoothMap = std::variant<QuadraticFamily<T>, AffineMatrixMap<T>, AnalyticPair>;

template <class T>
Index input_dim(const SmoothMap<T>& c);

/// Length of the flattened intermediate point.
template <class T>
Index output_dim(const SmoothMap<T>& c);

/// True when the second derivative vanishes identically.
template <class T>
bool is_affine(const SmoothMap<T>& c);

template <class T>
Vec<T> eval_map(const SmoothMap<T>& c, const Vec<T>& x);

/// Column j is Dc(x)[e_j] (flattened).
template <class T>
Mat<T> jacobian(const SmoothMap<T>& c, const Vec<T>& x);

/// Dc(x)[u].
template <class T>
Vec<T> differential(const SmoothMap<T>& c, const Vec<T>& x, const Vec<T>& u);

/// Dc(x)^*[w], i.e. (<Dc(x)[e_i], w>)_i.
template <class T>
Vec<T> differential_adjoint(const SmoothMap<T>& c, const Vec<T>& x, const Vec<T>& w);

/// D^2 c(x)[u, v].
template <class T>
Vec<T> second_directional(const SmoothMap<T>& c, const Vec<T>& x, const Vec<T>& u, const Vec<T>& v);

template <class T>
struct CompositeInstance {
  std::string name;
  SmoothMap<T> map;
  NonsmoothFunction outer;
  std::optional<std::string> known_manifold;  ///< manifold code, when known a priori
  std::optional<std::uint64_t> seed;

  Index n() const { return input_dim(map); }
  void validate() const;
};

template <class To, class From>
CompositeInstance<To> cast_instance(const CompositeInstance<From>& inst);

template <class T>
T composite_value(const CompositeInstance<T>& inst, const Vec<T>& x);

template <class T>
struct Subgradient {
  T value = T(0);
  Vec<T> v;
  bool differentiable = false;
};

/// F(x), an element of dF(x) built from an extreme subgradient of g at c(x)
/// (first maximal index, resp. leading eigenvector), and whether g is
/// differentiable there (no tie within 1e-12 (1 + |F|)).
template <class T>
Subgradient<T> composite_subgradient(const CompositeInstance<T>& inst, const Vec<T>& x);

struct DerivativeCheck {
  double jacobian_rel_error = 0.0;
  double second_rel_error = 0.0;
  bool pass = false;
};

/// Central differences at h = eps^{1/3} (scaled by 1 + |x|) against the
/// analytic Jacobian and second directional derivative.
DerivativeCheck check_map_derivatives(const SmoothMap<double>& c, const Vec<double>& x,
                                      const Vec<double>& u, const Vec<double>& v,
                                      double rel_tol = 1e-6);

/// Instance JSON. Matrices are row-major nested arrays; with `hex` every
/// number is a C99 hex-float string, which round-trips bit-exactly.
nlohmann::json instance_to_json(const CompositeInstance<double>& inst, bool hex = true);
CompositeInstance<double> instance_from_json(const nlohmann::json& j);

}  // namespace proxsqp
