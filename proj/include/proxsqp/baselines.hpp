#pragma once

#include <cstdint>

#include "proxsqp/driver.hpp"

namespace proxsqp {

struct BaselineOptions {
  int max_iter = 100;
  double max_time = 0.0;  ///< seconds; 0 disables the wall-clock budget
  std::uint64_t rng_seed = 0;
  // gradient sampling
  int sample_count = 0;  ///< 0: 2n
  double sample_radius = 1e-1;
  double radius_min = 1e-12;
  double radius_shrink = 0.1;
  double stationarity_target = 1e-6;
  double armijo = 1e-8;
  int max_backtracks = 60;
  // nonsmooth BFGS
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.5;
  int max_line_search = 60;

  void validate(Index n) const;
};

/// Minimum-norm point of the convex hull of the columns of `points`
/// (Wolfe's algorithm); `weights` receives the convex combination.
Vec<double> min_norm_hull_point(const Mat<double>& points, Vec<double>* weights = nullptr);

/// Gradients sampled uniformly in a ball around x, min-norm convex
/// combination as search direction, Armijo backtracking, radius shrink when
/// the direction is short or the backtracking fails.
SolveTrace<double> gradient_sampling(const CompositeInstance<double>& inst, const Vec<double>& x0,
                                     const BaselineOptions& opts);

/// Full-memory inverse BFGS on the subgradient oracle with a weak Wolfe
/// bisection line search.
SolveTrace<double> nonsmooth_bfgs(const CompositeInstance<double>& inst, const Vec<double>& x0,
                                  const BaselineOptions& opts);

}  // namespace proxsqp
