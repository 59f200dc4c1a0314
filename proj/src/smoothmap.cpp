#include "proxsqp/smoothmap.hpp"

#include <algorithm>
#include <cmath>

namespace proxsqp {

namespace {

template <class T>
Vec<T> flat(const Mat<T>& a) {
  return Eigen::Map<const Vec<T>>(a.data(), a.size());
}

template <class T>
void check_input(const SmoothMap<T>& c, const Vec<T>& x) {
  if (x.size() != input_dim(c)) throw DimensionMismatch("input point has wrong dimension");
}

}  // namespace

template <class T>
Index input_dim(const SmoothMap<T>& c) {
  return std::visit(
      [](const auto& m) -> Index {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticFamily<T>>)
          return m.b.empty() ? 0 : m.b.front().size();
        else if constexpr (std::is_same_v<M, AffineMatrixMap<T>>)
          return static_cast<Index>(m.a.size()) - 1;
        else
          return 2;
      },
      c);
}

template <class T>
Index output_dim(const SmoothMap<T>& c) {
  return std::visit(
      [](const auto& m) -> Index {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticFamily<T>>)
          return m.c0.size();
        else if constexpr (std::is_same_v<M, AffineMatrixMap<T>>)
          return m.a.front().size();
        else
          return 2;
      },
      c);
}

template <class T>
bool is_affine(const SmoothMap<T>& c) {
  if (std::holds_alternative<AffineMatrixMap<T>>(c)) return true;
  if (const auto* q = std::get_if<QuadraticFamily<T>>(&c))
    return std::all_of(q->a.begin(), q->a.end(), [](const Mat<T>& a) { return a.isZero(0); });
  return false;
}

template <class T>
Vec<T> eval_map(const SmoothMap<T>& c, const Vec<T>& x) {
  check_input(c, x);
  return std::visit(
      [&](const auto& m) -> Vec<T> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticFamily<T>>) {
          Vec<T> out(m.c0.size());
          for (Index i = 0; i < out.size(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            out(i) = T(0.5) * x.dot(m.a[k] * x) + m.b[k].dot(x) + m.c0(i);
          }
          return out;
        } else if constexpr (std::is_same_v<M, AffineMatrixMap<T>>) {
          Mat<T> s = m.a[0];
          for (Index i = 0; i < x.size(); ++i) s += x(i) * m.a[static_cast<std::size_t>(i) + 1];
          return flat<T>(s);
        } else {
          Vec<T> out(2);
          const T u = x(1) - T(1);
          const T w = x(1) + T(1);
          out(0) = (T(26) / T(10)) * x(0) * x(0) + T(4) * u * u - T(4);
          out(1) = x(0) * x(0) + T(4) * w * w - T(4);
          return out;
        }
      },
      c);
}

template <class T>
Mat<T> jacobian(const SmoothMap<T>& c, const Vec<T>& x) {
  check_input(c, x);
  return std::visit(
      [&](const auto& m) -> Mat<T> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticFamily<T>>) {
          Mat<T> j(m.c0.size(), x.size());
          for (Index i = 0; i < j.rows(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            j.row(i) = (m.a[k] * x + m.b[k]).transpose();
          }
          return j;
        } else if constexpr (std::is_same_v<M, AffineMatrixMap<T>>) {
          const Index mm = m.a.front().size();
          Mat<T> j(mm, x.size());
          for (Index i = 0; i < x.size(); ++i) j.col(i) = flat<T>(m.a[static_cast<std::size_t>(i) + 1]);
          return j;
        } else {
          Mat<T> j(2, 2);
          j(0, 0) = (T(52) / T(10)) * x(0);
          j(0, 1) = T(8) * (x(1) - T(1));
          j(1, 0) = T(2) * x(0);
          j(1, 1) = T(8) * (x(1) + T(1));
          return j;
        }
      },
      c);
}

template <class T>
Vec<T> differential(const SmoothMap<T>& c, const Vec<T>& x, const Vec<T>& u) {
  if (u.size() != input_dim(c)) throw DimensionMismatch("direction has wrong dimension");
  return jacobian(c, x) * u;
}

template <class T>
Vec<T> differential_adjoint(const SmoothMap<T>& c, const Vec<T>& x, const Vec<T>& w) {
  if (w.size() != output_dim(c)) throw DimensionMismatch("adjoint argument has wrong dimension");
  return jacobian(c, x).transpose() * w;
}

template <class T>
Vec<T> second_directional(const SmoothMap<T>& c, const Vec<T>& x, const Vec<T>& u, const Vec<T>& v) {
  check_input(c, x);
  check_input(c, u);
  check_input(c, v);
  return std::visit(
      [&](const auto& m) -> Vec<T> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticFamily<T>>) {
          Vec<T> out(m.c0.size());
          for (Index i = 0; i < out.size(); ++i) out(i) = u.dot(m.a[static_cast<std::size_t>(i)] * v);
          return out;
        } else if constexpr (std::is_same_v<M, AffineMatrixMap<T>>) {
          return Vec<T>::Zero(m.a.front().size());
        } else {
          Vec<T> out(2);
          out(0) = (T(52) / T(10)) * u(0) * v(0) + T(8) * u(1) * v(1);
          out(1) = T(2) * u(0) * v(0) + T(8) * u(1) * v(1);
          return out;
        }
      },
      c);
}

template <class T>
void CompositeInstance<T>::validate() const {
  const Index out = output_dim(map);
  if (out != outer.intermediate_dim())
    throw DimensionMismatch("instance '" + name + "': map codomain does not match the outer function");
  if (const auto* q = std::get_if<QuadraticFamily<T>>(&map)) {
    const Index n = input_dim(map);
    if (q->a.size() != q->b.size() || static_cast<Index>(q->a.size()) != q->c0.size())
      throw DimensionMismatch("quadratic family: inconsistent piece count");
    for (std::size_t i = 0; i < q->a.size(); ++i) {
      if (q->a[i].rows() != n || q->a[i].cols() != n || q->b[i].size() != n)
        throw DimensionMismatch("quadratic family: inconsistent dimensions");
      if (!(q->a[i] - q->a[i].transpose()).isZero(0)) throw InvalidArgument("quadratic family: A_i not symmetric");
    }
  } else if (const auto* a = std::get_if<AffineMatrixMap<T>>(&map)) {
    if (a->a.empty()) throw InvalidArgument("affine map needs A_0");
    const Index m = a->a.front().rows();
    for (const Mat<T>& ai : a->a) {
      if (ai.rows() != m || ai.cols() != m) throw DimensionMismatch("affine map: inconsistent dimensions");
      if (!(ai - ai.transpose()).isZero(0)) throw InvalidArgument("affine map: A_i not symmetric");
    }
  }
}

template <class To, class From>
CompositeInstance<To> cast_instance(const CompositeInstance<From>& inst) {
  CompositeInstance<To> out;
  out.name = inst.name;
  out.outer = inst.outer;
  out.known_manifold = inst.known_manifold;
  out.seed = inst.seed;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticFamily<From>>) {
          QuadraticFamily<To> q;
          for (const auto& a : m.a) q.a.push_back(cast_mat<To>(a));
          for (const auto& b : m.b) q.b.push_back(cast_vec<To>(b));
          q.c0 = cast_vec<To>(m.c0);
          out.map = std::move(q);
        } else if constexpr (std::is_same_v<M, AffineMatrixMap<From>>) {
          AffineMatrixMap<To> a;
          for (const auto& ai : m.a) a.a.push_back(cast_mat<To>(ai));
          out.map = std::move(a);
        } else {
          out.map = AnalyticPair{};
        }
      },
      inst.map);
  return out;
}

template <class T>
T composite_value(const CompositeInstance<T>& inst, const Vec<T>& x) {
  return value(inst.outer, eval_map(inst.map, x));
}

template <class T>
Subgradient<T> composite_subgradient(const CompositeInstance<T>& inst, const Vec<T>& x) {
  using std::abs;
  const Vec<T> y = eval_map(inst.map, x);
  Subgradient<T> out;
  Vec<T> w = Vec<T>::Zero(y.size());
  T second;
  if (inst.outer.kind == OuterKind::Max) {
    Index best = 0;
    for (Index i = 1; i < y.size(); ++i)
      if (y(i) > y(best)) best = i;
    out.value = y(best);
    w(best) = T(1);
    second = -std::numeric_limits<T>::infinity();
    for (Index i = 0; i < y.size(); ++i)
      if (i != best && y(i) > second) second = y(i);
  } else {
    const Index m = inst.outer.m;
    const EigenPair<T> ep = sym_eigen(SymMatrix<T>::from_lower(Eigen::Map<const Mat<T>>(y.data(), m, m)));
    out.value = ep.values(0);
    const Vec<T> u = ep.vectors.col(0);
    const Mat<T> uu = u * u.transpose();
    w = flat<T>(uu);
    second = m > 1 ? ep.values(1) : -std::numeric_limits<T>::infinity();
  }
  out.v = differential_adjoint(inst.map, x, w);
  out.differentiable = out.value - second > T(1e-12) * (T(1) + abs(out.value));
  return out;
}

DerivativeCheck check_map_derivatives(const SmoothMap<double>& c, const Vec<double>& x,
                                      const Vec<double>& u, const Vec<double>& v, double rel_tol) {
  DerivativeCheck rep;
  const double h = std::cbrt(machine_eps<double>()) * (1.0 + x.norm());
  const Mat<double> j = jacobian(c, x);
  Mat<double> fd(j.rows(), j.cols());
  for (Index i = 0; i < x.size(); ++i) {
    Vec<double> xp = x;
    Vec<double> xm = x;
    xp(i) += h;
    xm(i) -= h;
    fd.col(i) = (eval_map(c, xp) - eval_map(c, xm)) / (2.0 * h);
  }
  rep.jacobian_rel_error = (fd - j).norm() / std::max(1.0, j.norm());
  // second derivative: central difference of the Jacobian along v, applied to u
  const Vec<double> d2 = second_directional(c, x, u, v);
  const Vec<double> fd2 = (jacobian<double>(c, x + h * v) * u - jacobian<double>(c, x - h * v) * u) / (2.0 * h);
  rep.second_rel_error = (fd2 - d2).norm() / std::max(1.0, d2.norm());
  rep.pass = rep.jacobian_rel_error <= rel_tol && rep.second_rel_error <= rel_tol;
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json encode(double x, bool hex) {
  if (hex) return to_hexfloat(x);
  return x;
}

double decode(const nlohmann::json& j) {
  if (j.is_string()) return parse_hexfloat(j.get<std::string>());
  if (j.is_number()) return j.get<double>();
  throw DataError("expected a number or hex-float string");
}

nlohmann::json vec_json(const Vec<double>& v, bool hex) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(encode(v(i), hex));
  return a;
}

nlohmann::json mat_json(const Mat<double>& m, bool hex) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose(), hex));
  return rows;
}

Vec<double> vec_from(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("expected an array");
  Vec<double> v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = decode(j[i]);
  return v;
}

Mat<double> mat_from(const nlohmann::json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) throw DataError("matrix has wrong row count");
  Mat<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vec<double> r = vec_from(j[static_cast<std::size_t>(i)]);
    if (r.size() != cols) throw DataError("matrix has wrong column count");
    m.row(i) = r.transpose();
  }
  return m;
}

}  // namespace

nlohmann::json instance_to_json(const CompositeInstance<double>& inst, bool hex) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["name"] = inst.name;
  j["outer"] = inst.outer.name();
  j["encoding"] = hex ? "hex" : "decimal";
  if (inst.seed) j["seed"] = *inst.seed;
  if (inst.known_manifold) j["known_manifold"] = *inst.known_manifold;
  j["dims"] = {{"n", inst.n()}, {"m", inst.outer.m}};
  if (const auto* q = std::get_if<QuadraticFamily<double>>(&inst.map)) {
    j["kind"] = "quadratic_family";
    nlohmann::json pieces = nlohmann::json::array();
    for (std::size_t i = 0; i < q->a.size(); ++i)
      pieces.push_back({{"A", mat_json(q->a[i], hex)},
                        {"b", vec_json(q->b[i], hex)},
                        {"c0", encode(q->c0(static_cast<Index>(i)), hex)}});
    j["pieces"] = pieces;
  } else if (const auto* a = std::get_if<AffineMatrixMap<double>>(&inst.map)) {
    j["kind"] = "affine_matrix";
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& ai : a->a) mats.push_back(mat_json(ai, hex));
    j["matrices"] = mats;
  } else {
    j["kind"] = "analytic_pair";
  }
  return j;
}

CompositeInstance<double> instance_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != 1) throw DataError("unsupported instance schema version");
    CompositeInstance<double> inst;
    inst.name = j.at("name").get<std::string>();
    const Index n = j.at("dims").at("n").get<Index>();
    const Index m = j.at("dims").at("m").get<Index>();
    const std::string outer = j.at("outer").get<std::string>();
    if (outer == "max")
      inst.outer = NonsmoothFunction::max(m);
    else if (outer == "lammax")
      inst.outer = NonsmoothFunction::lammax(m);
    else
      throw DataError("unknown outer function '" + outer + "'");
    if (j.contains("seed")) inst.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("known_manifold")) inst.known_manifold = j["known_manifold"].get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "quadratic_family") {
      QuadraticFamily<double> q;
      const auto& pieces = j.at("pieces");
      q.c0.resize(static_cast<Index>(pieces.size()));
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        q.a.push_back(mat_from(pieces[i].at("A"), n, n));
        q.b.push_back(vec_from(pieces[i].at("b")));
        q.c0(static_cast<Index>(i)) = decode(pieces[i].at("c0"));
      }
      inst.map = std::move(q);
    } else if (kind == "affine_matrix") {
      AffineMatrixMap<double> a;
      for (const auto& mj : j.at("matrices")) a.a.push_back(mat_from(mj, m, m));
      if (static_cast<Index>(a.a.size()) != n + 1) throw DataError("affine map needs n + 1 matrices");
      inst.map = std::move(a);
    } else if (kind == "analytic_pair") {
      inst.map = AnalyticPair{};
    } else {
      throw DataError("unknown map kind '" + kind + "'");
    }
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed instance JSON: ") + e.what());
  }
}

#define PROXSQP_INSTANTIATE(T)                                                                           \
  template Index input_dim<T>(const SmoothMap<T>&);                                                      \
  template Index output_dim<T>(const SmoothMap<T>&);                                                     \
  template bool is_affine<T>(const SmoothMap<T>&);                                                       \
  template Vec<T> eval_map<T>(const SmoothMap<T>&, const Vec<T>&);                                       \
  template Mat<T> jacobian<T>(const SmoothMap<T>&, const Vec<T>&);                                       \
  template Vec<T> differential<T>(const SmoothMap<T>&, const Vec<T>&, const Vec<T>&);                    \
  template Vec<T> differential_adjoint<T>(const SmoothMap<T>&, const Vec<T>&, const Vec<T>&);            \
  template Vec<T> second_directional<T>(const SmoothMap<T>&, const Vec<T>&, const Vec<T>&, const Vec<T>&); \
  template struct CompositeInstance<T>;                                                                  \
  template T composite_value<T>(const CompositeInstance<T>&, const Vec<T>&);                             \
  template Subgradient<T> composite_subgradient<T>(const CompositeInstance<T>&, const Vec<T>&);

PROXSQP_INSTANTIATE(double)
PROXSQP_INSTANTIATE(Extended)

template CompositeInstance<Extended> cast_instance<Extended, double>(const CompositeInstance<double>&);
template CompositeInstance<double> cast_instance<double, Extended>(const CompositeInstance<Extended>&);
template CompositeInstance<double> cast_instance<double, double>(const CompositeInstance<double>&);

}  // namespace proxsqp
