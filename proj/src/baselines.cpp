#include "proxsqp/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "proxsqp/rng.hpp"

namespace proxsqp {

void BaselineOptions::validate(Index n) const {
  if (max_iter < 0) throw InvalidArgument("max_iter must be nonnegative");
  if (max_time < 0.0) throw InvalidArgument("max_time must be nonnegative");
  if (sample_count != 0 && sample_count < n + 1) throw InvalidArgument("sample_count must be at least n + 1");
  if (!(sample_radius > 0.0 && radius_min > 0.0)) throw InvalidArgument("sampling radii must be positive");
  if (!(radius_shrink > 0.0 && radius_shrink < 1.0)) throw InvalidArgument("radius_shrink must lie in (0, 1)");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
    throw InvalidArgument("Wolfe constants must satisfy 0 < c1 < c2 < 1");
}

Vec<double> min_norm_hull_point(const Mat<double>& points, Vec<double>* weights) {
  const Index k = points.cols();
  if (k == 0) throw InvalidArgument("min_norm_hull_point: no points");
  const double scale = points.colwise().squaredNorm().maxCoeff();
  const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());

  Index start = 0;
  points.colwise().squaredNorm().minCoeff(&start);
  std::vector<Index> set{start};
  Vec<double> w = Vec<double>::Ones(1);
  Vec<double> x = points.col(start);

  const auto subset = [&]() {
    Mat<double> ps(points.rows(), static_cast<Index>(set.size()));
    for (std::size_t i = 0; i < set.size(); ++i) ps.col(static_cast<Index>(i)) = points.col(set[i]);
    return ps;
  };

  for (int major = 0; major < 10 * static_cast<int>(k) + 100; ++major) {
    Index j = 0;
    (points.transpose() * x).minCoeff(&j);
    if (x.squaredNorm() - points.col(j).dot(x) <= tol) break;
    if (std::find(set.begin(), set.end(), j) != set.end()) break;
    set.push_back(j);
    w.conservativeResize(w.size() + 1);
    w(w.size() - 1) = 0.0;

    for (int minor = 0; minor < 10 * static_cast<int>(k) + 100; ++minor) {
      const Mat<double> ps = subset();
      const Index s = ps.cols();
      // affine minimizer: [P^T P 1; 1^T 0] [a; mu] = [0; 1]
      Mat<double> kkt = Mat<double>::Zero(s + 1, s + 1);
      kkt.topLeftCorner(s, s) = ps.transpose() * ps;
      kkt.block(0, s, s, 1).setOnes();
      kkt.block(s, 0, 1, s).setOnes();
      Vec<double> rhs = Vec<double>::Zero(s + 1);
      rhs(s) = 1.0;
      const Vec<double> alpha = lstsq_min_norm<double>(kkt, rhs).head(s);
      if (alpha.minCoeff() > 1e-14) {
        w = alpha;
        break;
      }
      double theta = 1.0;
      for (Index i = 0; i < s; ++i)
        if (alpha(i) <= 1e-14) theta = std::min(theta, w(i) / (w(i) - alpha(i)));
      w = w + theta * (alpha - w);
      std::vector<Index> keep_set;
      std::vector<double> keep_w;
      for (Index i = 0; i < s; ++i) {
        if (w(i) > 1e-14) {
          keep_set.push_back(set[static_cast<std::size_t>(i)]);
          keep_w.push_back(w(i));
        }
      }
      if (keep_set.size() == set.size()) {
        // guarantee progress: drop the smallest weight
        Index drop = 0;
        w.minCoeff(&drop);
        keep_set.erase(keep_set.begin() + drop);
        keep_w.erase(keep_w.begin() + drop);
      }
      set = keep_set;
      w = Eigen::Map<Vec<double>>(keep_w.data(), static_cast<Index>(keep_w.size()));
      w /= w.sum();
    }
    x = subset() * w;
  }
  if (weights) {
    *weights = Vec<double>::Zero(k);
    for (std::size_t i = 0; i < set.size(); ++i) (*weights)(set[i]) = w(static_cast<Index>(i));
  }
  return x;
}

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

IterationRecord<double> blank_record(int k, double f) {
  IterationRecord<double> r;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.k = k;
  r.f = f;
  r.gamma = r.step_norm = r.corr_norm = r.h_norm = r.stat_norm = r.regularization = nan;
  return r;
}

bool over_budget(const BaselineOptions& opts, Clock::time_point start) {
  return opts.max_time > 0.0 && static_cast<double>(elapsed_ns(start)) * 1e-9 >= opts.max_time;
}

}  // namespace

SolveTrace<double> gradient_sampling(const CompositeInstance<double>& inst, const Vec<double>& x0,
                                     const BaselineOptions& opts) {
  inst.validate();
  const Index n = inst.n();
  opts.validate(n);
  if (x0.size() != n) throw DimensionMismatch("gradient_sampling: x0 has wrong dimension");
  const auto start = Clock::now();
  const int samples = opts.sample_count > 0 ? opts.sample_count : static_cast<int>(2 * n);
  CounterRng rng(opts.rng_seed);

  SolveTrace<double> trace;
  trace.method = "gradient_sampling";
  trace.instance = inst.name;
  Vec<double> x = x0;
  Subgradient<double> sg = composite_subgradient(inst, x);
  double radius = opts.sample_radius;
  double target = opts.stationarity_target;

  for (int k = 0; k < opts.max_iter; ++k) {
    IterationRecord<double> rec = blank_record(k, sg.value);
    rec.gamma = radius;
    trace.iterates.push_back(x);
    Mat<double> grads(n, samples + 1);
    grads.col(0) = sg.v;
    for (int s = 1; s <= samples; ++s) {
      Vec<double> u(n);
      for (Index i = 0; i < n; ++i) u(i) = rng.normal();
      u *= std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) / u.norm();
      grads.col(s) = composite_subgradient<double>(inst, Vec<double>(x + radius * u)).v;
    }
    const Vec<double> g = min_norm_hull_point(grads);
    const double gnorm = g.norm();
    rec.stat_norm = gnorm;
    bool stop = false;
    if (gnorm <= target) {
      radius *= opts.radius_shrink;
      target *= opts.radius_shrink;
    } else {
      const Vec<double> d = -g;
      double t = 1.0;
      bool found = false;
      for (int b = 0; b < opts.max_backtracks; ++b, t *= 0.5) {
        const double ft = composite_value<double>(inst, Vec<double>(x + t * d));
        if (ft <= sg.value - opts.armijo * t * gnorm * gnorm) {
          found = true;
          break;
        }
      }
      if (found) {
        rec.step_norm = t * d.lpNorm<Eigen::Infinity>();
        x += t * d;
        sg = composite_subgradient(inst, x);
        rec.decrease_test = rec.accepted = true;
      } else {
        radius *= opts.radius_shrink;
        target *= opts.radius_shrink;
      }
    }
    if (radius < opts.radius_min) {
      trace.status = SolveStatus::Converged;
      stop = true;
    } else if (over_budget(opts, start)) {
      trace.status = SolveStatus::Budget;
      stop = true;
    }
    rec.wall_time_ns = elapsed_ns(start);
    trace.records.push_back(rec);
    if (stop) break;
  }
  trace.iterates.push_back(x);
  trace.x = x;
  trace.f = sg.value;
  return trace;
}

SolveTrace<double> nonsmooth_bfgs(const CompositeInstance<double>& inst, const Vec<double>& x0,
                                  const BaselineOptions& opts) {
  inst.validate();
  const Index n = inst.n();
  opts.validate(n);
  if (x0.size() != n) throw DimensionMismatch("nonsmooth_bfgs: x0 has wrong dimension");
  const auto start = Clock::now();

  SolveTrace<double> trace;
  trace.method = "nsbfgs";
  trace.instance = inst.name;
  Vec<double> x = x0;
  Subgradient<double> sg = composite_subgradient(inst, x);
  Mat<double> h = Mat<double>::Identity(n, n);

  for (int k = 0; k < opts.max_iter; ++k) {
    IterationRecord<double> rec = blank_record(k, sg.value);
    trace.iterates.push_back(x);
    rec.stat_norm = sg.v.norm();
    if (sg.v.norm() == 0.0) {
      trace.status = SolveStatus::Converged;
      rec.wall_time_ns = elapsed_ns(start);
      trace.records.push_back(rec);
      break;
    }
    Vec<double> d = -h * sg.v;
    double gd = sg.v.dot(d);
    if (!(gd < 0.0)) {
      h.setIdentity();
      d = -sg.v;
      gd = sg.v.dot(d);
    }
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double t = 1.0;
    bool found = false;
    Subgradient<double> trial;
    for (int ls = 0; ls < opts.max_line_search; ++ls) {
      trial = composite_subgradient<double>(inst, Vec<double>(x + t * d));
      if (!(trial.value <= sg.value + opts.wolfe_c1 * t * gd))
        hi = t;
      else if (trial.v.dot(d) < opts.wolfe_c2 * gd)
        lo = t;
      else {
        found = true;
        break;
      }
      t = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * lo;
    }
    if (!found && lo > 0.0) {
      t = lo;
      trial = composite_subgradient<double>(inst, Vec<double>(x + t * d));
      found = true;
    }
    bool stop = false;
    if (!found) {
      trace.status = SolveStatus::LineSearchFailure;
      stop = true;
    } else {
      const Vec<double> s = t * d;
      const Vec<double> y = trial.v - sg.v;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const double rho = 1.0 / sy;
        const Mat<double> v = Mat<double>::Identity(n, n) - rho * s * y.transpose();
        h = v * h * v.transpose() + rho * s * s.transpose();
      }
      rec.step_norm = s.lpNorm<Eigen::Infinity>();
      x += s;
      sg = trial;
      rec.decrease_test = rec.accepted = true;
      if (over_budget(opts, start)) {
        trace.status = SolveStatus::Budget;
        stop = true;
      }
    }
    rec.wall_time_ns = elapsed_ns(start);
    trace.records.push_back(rec);
    if (stop) break;
  }
  trace.iterates.push_back(x);
  trace.x = x;
  trace.f = sg.value;
  return trace;
}

}  // namespace proxsqp
