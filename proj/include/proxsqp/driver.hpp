#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxsqp/sqp.hpp"

namespace proxsqp {

enum class DecreaseRule { FullStep, SqpOnly };

struct SolveOptions {
  std::optional<double> gamma0;  ///< empty: gamma_init at x0
  double gamma_factor = 0.5;
  int max_iter = 100;
  double tol_step = 1e-9;
  double tol_feas = 1e-9;
  double tol_stat = 1e-9;
  SocRule soc_rule = SocRule::Classic;
  DecreaseRule decrease_rule = DecreaseRule::FullStep;
  Precision precision = Precision::Double;
  int consecutive_fail_limit = 20;
  ChartTolerances chart;

  void validate() const;
  /// All three stopping tolerances set to `tol`.
  SolveOptions& with_tolerance(double tol);
};

enum class SolveStatus { Converged, MaxIter, ChartFailure, LineSearchFailure, Budget };

std::string to_string(SolveStatus s);

/// One outer iteration. NaN marks fields a method does not produce.
template <class T>
struct IterationRecord {
  int k = 0;
  double gamma = 0.0;
  std::string manifold;
  Index structure = 0;
  T f = T(0);              ///< F(x_k), before the step
  double step_norm = 0.0;  ///< ||d_sqp||_inf
  double corr_norm = 0.0;  ///< ||d_corr||_inf
  double h_norm = 0.0;     ///< ||h_k(x_k)||_inf
  double stat_norm = 0.0;  ///< ||grad F~ + Jh^T lambda||_inf
  double regularization = 0.0;
  bool decrease_test = false;
  bool accepted = false;
  bool chart_failure = false;
  std::int64_t wall_time_ns = 0;  ///< since the start of the run
};

template <class T>
struct SolveTrace {
  std::string method = "alg1";
  std::string instance;
  std::vector<IterationRecord<T>> records;
  std::vector<Vec<T>> iterates;  ///< x_k at the start of iteration k, then the final point
  Vec<T> x;
  T f = T(0);
  std::optional<ManifoldDescriptor<T>> manifold;  ///< last detected
  SolveStatus status = SolveStatus::MaxIter;
  double gamma0 = 0.0;

  int accepted_steps() const;
};

/// Identification + SQP loop with gamma decrease, decrease test on the full
/// step and a KKT-type stopping test.
template <class T>
SolveTrace<T> solve(const CompositeInstance<T>& inst, const Vec<T>& x0, const SolveOptions& opts);

struct ReferenceSolution {
  std::string instance;
  Vec<Extended> x;
  Extended f = Extended(0);
  std::string manifold;
  Index structure = 0;
  bool available = false;
  int iterations = 0;
};

/// Extended-precision solve with tolerances 1e-2 sqrt(eps_ext).
ReferenceSolution reference_solve(const CompositeInstance<double>& inst, const Vec<double>& x0,
                                  int max_iter = 200);

nlohmann::json reference_to_json(const ReferenceSolution& ref);
ReferenceSolution reference_from_json(const nlohmann::json& j);

template <class T>
nlohmann::json trace_to_json(const SolveTrace<T>& trace, bool with_timings = true);

/// One row per iteration, header row, LF line endings.
template <class T>
void write_trace_csv(std::ostream& os, const SolveTrace<T>& trace, bool with_timings = true);

}  // namespace proxsqp
