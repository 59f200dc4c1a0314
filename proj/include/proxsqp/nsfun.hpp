#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "proxsqp/numlin.hpp"

namespace proxsqp {

enum class OuterKind { Max, LamMax };

/// Outer nonsmooth function g of a composite F = g o c. Points of the
/// intermediate space are flattened: R^m for Max, column-major m*m symmetric
/// matrices for LamMax (Frobenius inner product = dot product).
struct NonsmoothFunction {
  OuterKind kind = OuterKind::Max;
  Index m = 1;

  static NonsmoothFunction max(Index m);
  static NonsmoothFunction lammax(Index m);

  Index intermediate_dim() const { return kind == OuterKind::Max ? m : m * m; }
  std::string name() const { return kind == OuterKind::Max ? "max" : "lammax"; }
};

/// y_i equal and maximal for i in `indices` (0-based, strictly increasing).
struct MaxActive {
  std::vector<Index> indices;
};

/// Largest eigenvalue of multiplicity r; `ref_basis` (m x r, orthonormal)
/// anchors the local chart.
template <class T>
struct EigMult {
  Index r = 1;
  Mat<T> ref_basis;
};

template <class T>
using ManifoldDescriptor = std::variant<MaxActive, EigMult<T>>;

/// |I| for MaxActive, r for EigMult.
template <class T>
Index structure_size(const ManifoldDescriptor<T>& d);

/// Same active set, resp. same multiplicity (bases are not compared).
template <class T>
bool same_structure(const ManifoldDescriptor<T>& a, const ManifoldDescriptor<T>& b);

/// Human-readable, comma-free code with 1-based indices: "max{2 3 4 5}", "eig{r=3}".
template <class T>
std::string manifold_code(const ManifoldDescriptor<T>& d);

template <class To, class From>
ManifoldDescriptor<To> cast_descriptor(const ManifoldDescriptor<From>& d) {
  if (const auto* mx = std::get_if<MaxActive>(&d)) return *mx;
  const auto& e = std::get<EigMult<From>>(d);
  return EigMult<To>{e.r, cast_mat<To>(e.ref_basis)};
}

template <class T>
struct ProxOutcome {
  Vec<T> point;  ///< flattened intermediate point
  ManifoldDescriptor<T> manifold;
  T threshold = T(0);  ///< water-filling level s (on the spectrum for LamMax)
  Vec<T> spectrum;     ///< LamMax: clipped spectrum; empty for Max
  Mat<T> basis;        ///< LamMax: full eigenbasis of the input
  T gamma = T(0);
};

template <class T>
struct WaterFill {
  T level = T(0);   ///< s with sum_{z_i > s} (z_i - s) = gamma
  Index active = 0; ///< number of entries strictly above s
};

/// Water-filling on arbitrary-order entries, by sorting and scanning prefix
/// sums. gamma must be positive.
template <class T>
WaterFill<T> water_fill(const Vec<T>& z, T gamma);

template <class T>
T value(const NonsmoothFunction& g, const Vec<T>& y);

template <class T>
ProxOutcome<T> prox_max(const Vec<T>& y, T gamma);

template <class T>
ProxOutcome<T> prox_lammax(const SymMatrix<T>& y, T gamma);

template <class T>
ProxOutcome<T> prox(const NonsmoothFunction& g, const Vec<T>& y, T gamma);

struct ChartTolerances {
  double gap_factor = 1e3;        ///< gap_tol = gap_factor * eps * ||Y||
  double on_manifold = 1e-8;      ///< relative to 1 + ||p||
  double ascent = 1e-10;
  double fit = 0.15;
};

/// Local evaluation of a structure chart at an intermediate point y: the
/// defining map h, the smooth extension g~ and their derivatives. The eigen
/// decomposition (LamMax) is computed once per evaluation.
template <class T>
class ChartPoint {
 public:
  virtual ~ChartPoint() = default;
  virtual Index codim() const = 0;
  virtual const Vec<T>& constraint() const = 0;
  /// Dh(y)[dir]
  virtual Vec<T> constraint_derivative(const Vec<T>& dir) const = 0;
  virtual T extension_value() const = 0;
  virtual Vec<T> extension_gradient() const = 0;
  virtual Vec<T> extension_hessian_vector(const Vec<T>& dir) const = 0;
  /// Hessian of g~ + <mult, h> applied to dir. For eigenvalue charts the
  /// constraint part is exact where the reference basis spans the top-r
  /// eigenspace of y (the chart anchor); g~ is exact everywhere.
  virtual Vec<T> lagrangian_hessian_vector(const Vec<T>& mult, const Vec<T>& dir) const = 0;
};

template <class T>
class StructureChart {
 public:
  virtual ~StructureChart() = default;
  virtual Index codim() const = 0;
  virtual std::unique_ptr<ChartPoint<T>> at(const Vec<T>& y) const = 0;
};

/// Gradient of y -> <mult, h(y)> (symmetric for LamMax), by probing
/// constraint_derivative along a basis of the intermediate space.
template <class T>
Vec<T> constraint_adjoint(const NonsmoothFunction& g, const ChartPoint<T>& pt, const Vec<T>& mult);

template <class T>
std::shared_ptr<const StructureChart<T>> make_chart(const NonsmoothFunction& g,
                                                    const ManifoldDescriptor<T>& d,
                                                    const ChartTolerances& tol = {});

/// h(y)_l = y_{i_l} - y_{i_|I|}.
template <class T>
Vec<T> defining_map_max(const std::vector<Index>& active, const Vec<T>& y);

/// Off-diagonal entries and diagonal differences of B = U^T Y U, with U the
/// Procrustes-aligned top-r eigenbasis of Y. Throws GapCollapse.
template <class T>
Vec<T> defining_map_eig(Index r, const Mat<T>& ref_basis, const SymMatrix<T>& y,
                        const ChartTolerances& tol = {});

/// Mean-based smooth extension of g off the manifold.
template <class T>
class SmoothExtension {
 public:
  SmoothExtension(NonsmoothFunction g, ManifoldDescriptor<T> d, ChartTolerances tol = {});
  T value(const Vec<T>& y) const;
  Vec<T> gradient(const Vec<T>& y) const;
  Vec<T> hessian_vector(const Vec<T>& y, const Vec<T>& dir) const;

 private:
  std::shared_ptr<const StructureChart<T>> chart_;
};

/// Orthogonal projection onto the normal space of the structure manifold at
/// an on-manifold point p (constant span for Max; U Z U^T, tr Z = 0 for LamMax).
template <class T>
Vec<T> project_normal(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d, const Vec<T>& p,
                      const Vec<T>& v);

/// Nearest point of the structure manifold (entries of I averaged, resp. top
/// r eigenvalues averaged). Throws GapCollapse if the averaged block would
/// not stay on top.
template <class T>
Vec<T> project_to_manifold(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                           const Vec<T>& y);

/// Tangent projection of the smooth-extension gradient at p. Throws
/// InvalidArgument when p is off the manifold.
template <class T>
Vec<T> riemannian_gradient(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                           const Vec<T>& p, const ChartTolerances& tol = {});

struct NormalAscentReport {
  double min_directional_derivative = 0.0;
  int samples = 0;
  bool pass = false;
};

/// Piecewise-linear g(y) = max_j <a_j, y> + b_j with pieces `active` tied at
/// the point of interest. Used for counterexamples outside Max/LamMax.
struct PolyhedralMax {
  Mat<double> slopes;  ///< row j = a_j
  Vec<double> offsets;
  std::vector<Index> active;

  double value(const Vec<double>& y) const;
  double directional_derivative(const Vec<double>& d) const;
  /// Orthonormal basis (columns) of span{a_j - a_last : j in active}.
  Mat<double> normal_basis() const;
};

template <class T>
NormalAscentReport check_normal_ascent(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                                       const Vec<T>& p, int n_samples, std::uint64_t seed,
                                       const ChartTolerances& tol = {});

NormalAscentReport check_normal_ascent(const PolyhedralMax& g, int n_samples, std::uint64_t seed,
                                       double ascent_tol = 1e-10);

struct CurveProbeSet {
  std::vector<double> t_grid;   ///< positive, increasing
  int random_directions = 3;    ///< tangent second-order terms (besides the plain curve)
  double direction_scale = 1.0;
  std::uint64_t seed = 0;

  static CurveProbeSet log_spaced(double t_min, double t_max, int count, std::uint64_t seed);
};

struct CurveReport {
  double theta0 = 0.0;      ///< theta at t = 0
  double distance = 0.0;    ///< dist(y, M)
  double max_excess = 0.0;  ///< max |theta(t) - theta(0)| over all probes
  double exponent = 0.0;    ///< fitted log-log slope; +inf when all excess is roundoff
  bool zero_excess = false;
  bool chart_failure = false;
  bool pass = false;
};

/// Probe curves e(t) = proj_M(proj_M(y) - t grad g + t^2 xi) for tangent xi,
/// theta(t) = ||proj_{N_{e(t)} M}(e(t) - y)||; fits |theta(t) - theta(0)| ~ t^k.
template <class T>
CurveReport check_curve_property(const NonsmoothFunction& g, const ManifoldDescriptor<T>& d,
                                 const Vec<T>& y, const CurveProbeSet& probes,
                                 const ChartTolerances& tol = {});

}  // namespace proxsqp
