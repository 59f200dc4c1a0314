#include "proxsqp/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace proxsqp {

void SolveOptions::validate() const {
  if (gamma0 && !(*gamma0 > 0.0)) throw InvalidArgument("gamma0 must be positive");
  if (!(gamma_factor > 0.0 && gamma_factor < 1.0)) throw InvalidArgument("gamma factor must lie in (0, 1)");
  if (max_iter < 0) throw InvalidArgument("max_iter must be nonnegative");
  if (!(tol_step > 0.0 && tol_feas > 0.0 && tol_stat > 0.0)) throw InvalidArgument("tolerances must be positive");
  if (consecutive_fail_limit < 1) throw InvalidArgument("consecutive_fail_limit must be positive");
}

SolveOptions& SolveOptions::with_tolerance(double tol) {
  tol_step = tol_feas = tol_stat = tol;
  return *this;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::ChartFailure: return "chart_failure";
    case SolveStatus::LineSearchFailure: return "line_search_failure";
    case SolveStatus::Budget: return "budget";
  }
  return "unknown";
}

template <class T>
int SolveTrace<T>::accepted_steps() const {
  int n = 0;
  for (const auto& r : records)
    if (r.accepted) ++n;
  return n;
}

namespace {

template <class T>
double inf_norm(const Vec<T>& v) {
  return v.size() == 0 ? 0.0 : to_double(max_abs(v));
}

template <class T>
bool finite(const T& x) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  return isfinite(x);
}

template <class T>
SQPStep<T> regularized_step(const Vec<T>& grad, const Mat<T>& hess, const Vec<T>& h, const Mat<T>& jh) {
  try {
    return sqp_direction<T>(grad, hess, h, jh);
  } catch (const IndefiniteReducedHessian& e) {
    T tau = T(std::max(0.0, 1e-8 - e.min_eig()));
    for (int attempt = 0;; ++attempt) {
      try {
        SQPStep<T> step = sqp_direction<T>(grad, hess, h, jh, tau);
        return step;
      } catch (const IndefiniteReducedHessian&) {
        if (attempt >= 10) throw;
        tau = tau > T(0) ? tau * T(10) : T(1e-8);
      }
    }
  }
}

}  // namespace

template <class T>
SolveTrace<T> solve(const CompositeInstance<T>& inst, const Vec<T>& x0, const SolveOptions& opts) {
  opts.validate();
  inst.validate();
  if (x0.size() != inst.n()) throw DimensionMismatch("solve: x0 has wrong dimension");
  if (!all_finite(x0)) throw NonFiniteInput("solve: x0 is not finite");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  SolveTrace<T> trace;
  trace.instance = inst.name;
  T gamma = opts.gamma0 ? T(*opts.gamma0) : gamma_init(inst, x0);
  trace.gamma0 = to_double(gamma);
  Vec<T> x = x0;
  T fx = composite_value(inst, x);
  int fails = 0;

  for (int k = 0; k < opts.max_iter; ++k) {
    gamma *= T(opts.gamma_factor);
    IterationRecord<T> rec;
    rec.k = k;
    rec.gamma = to_double(gamma);
    rec.f = fx;
    rec.step_norm = rec.corr_norm = rec.h_norm = rec.stat_norm = std::numeric_limits<double>::quiet_NaN();
    trace.iterates.push_back(x);
    bool stop = false;
    try {
      const Detection<T> det = detect(inst, x, gamma, opts.chart);
      rec.manifold = manifold_code(det.prox.manifold);
      rec.structure = structure_size(det.prox.manifold);
      trace.manifold = det.prox.manifold;

      const WorkingPoint<T> wp = det.manifold.evaluate(x);
      const Vec<T> mult = multiplier_ls(wp.grad, wp.jh);
      const Mat<T> hess = lagrangian_hessian(det.manifold, wp, mult);
      const SQPStep<T> step = regularized_step(wp.grad, hess, wp.h, wp.jh);
      const Vec<T>& d = step.d_sqp;
      rec.regularization = to_double(step.regularization);
      rec.step_norm = inf_norm(d);
      rec.h_norm = inf_norm(wp.h);
      rec.stat_norm = to_double(step.kkt_residual);

      Vec<T> x_new;
      T f_new;
      if (opts.decrease_rule == DecreaseRule::FullStep) {
        Vec<T> h_eval = wp.h;
        bool corr = true;
        if (opts.soc_rule == SocRule::Classic) {
          try {
            h_eval = det.manifold.constraint(Vec<T>(x + d));
          } catch (const GapCollapse&) {
            corr = false;
          }
        }
        const Vec<T> dc = corr ? second_order_correction(wp.jh, h_eval) : Vec<T>(Vec<T>::Zero(x.size()));
        rec.corr_norm = inf_norm(dc);
        x_new = x + d + dc;
      } else {
        rec.corr_norm = 0.0;
        x_new = x + d;
      }
      f_new = composite_value(inst, x_new);
      rec.decrease_test = finite(f_new) && f_new <= fx;
      rec.accepted = rec.decrease_test;
      const bool kkt = rec.step_norm <= opts.tol_step && rec.h_norm <= opts.tol_feas &&
                       rec.stat_norm <= opts.tol_stat;
      if (rec.accepted) {
        x = x_new;
        fx = f_new;
      }
      fails = 0;
      // a rejected step at a point that already meets the test also ends the run
      if (kkt) {
        trace.status = SolveStatus::Converged;
        stop = true;
      }
    } catch (const GapCollapse&) {
      rec.chart_failure = true;
    } catch (const RankDeficient&) {
      rec.chart_failure = true;
    }
    if (rec.chart_failure && ++fails >= opts.consecutive_fail_limit) {
      trace.status = SolveStatus::ChartFailure;
      stop = true;
    }
    rec.wall_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
    trace.records.push_back(std::move(rec));
    if (stop) break;
  }
  trace.iterates.push_back(x);
  trace.x = x;
  trace.f = fx;
  return trace;
}

ReferenceSolution reference_solve(const CompositeInstance<double>& inst, const Vec<double>& x0, int max_iter) {
  using std::sqrt;
  const CompositeInstance<Extended> ext = cast_instance<Extended>(inst);
  SolveOptions opts;
  opts.precision = Precision::Extended;
  opts.max_iter = max_iter;
  opts.with_tolerance(1e-2 * to_double(sqrt(machine_eps<Extended>())));
  const SolveTrace<Extended> tr = solve(ext, cast_vec<Extended>(x0), opts);
  ReferenceSolution ref;
  ref.instance = inst.name;
  ref.x = tr.x;
  ref.f = tr.f;
  ref.iterations = static_cast<int>(tr.records.size());
  if (tr.manifold) {
    ref.manifold = manifold_code(*tr.manifold);
    ref.structure = structure_size(*tr.manifold);
  }
  ref.available = tr.status == SolveStatus::Converged;
  return ref;
}

nlohmann::json reference_to_json(const ReferenceSolution& ref) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["instance"] = ref.instance;
  j["available"] = ref.available;
  j["manifold"] = ref.manifold;
  j["structure"] = ref.structure;
  j["iterations"] = ref.iterations;
  j["f"] = to_string_exact(ref.f);
  nlohmann::json xs = nlohmann::json::array();
  for (Index i = 0; i < ref.x.size(); ++i) xs.push_back(to_string_exact(ref.x(i)));
  j["x"] = xs;
  return j;
}

ReferenceSolution reference_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != 1) throw DataError("unsupported reference schema version");
    ReferenceSolution ref;
    ref.instance = j.at("instance").get<std::string>();
    ref.available = j.at("available").get<bool>();
    ref.manifold = j.at("manifold").get<std::string>();
    ref.structure = j.at("structure").get<Index>();
    ref.iterations = j.at("iterations").get<int>();
    ref.f = parse_scalar<Extended>(j.at("f").get<std::string>());
    const auto& xs = j.at("x");
    ref.x.resize(static_cast<Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
      ref.x(static_cast<Index>(i)) = parse_scalar<Extended>(xs[i].get<std::string>());
    return ref;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed reference JSON: ") + e.what());
  }
}

namespace {

std::string num(double x) { return to_string_exact(x); }

}  // namespace

template <class T>
nlohmann::json trace_to_json(const SolveTrace<T>& trace, bool with_timings) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["method"] = trace.method;
  j["instance"] = trace.instance;
  j["status"] = to_string(trace.status);
  j["gamma0"] = num(trace.gamma0);
  j["f"] = to_string_exact(trace.f);
  nlohmann::json xs = nlohmann::json::array();
  for (Index i = 0; i < trace.x.size(); ++i) xs.push_back(to_string_exact(trace.x(i)));
  j["x"] = xs;
  if (trace.manifold) j["manifold"] = manifold_code(*trace.manifold);
  nlohmann::json its = nlohmann::json::array();
  for (const auto& r : trace.records) {
    nlohmann::json e{{"k", r.k},
                     {"gamma", num(r.gamma)},
                     {"manifold", r.manifold},
                     {"structure", r.structure},
                     {"f", to_string_exact(r.f)},
                     {"step_norm", num(r.step_norm)},
                     {"corr_norm", num(r.corr_norm)},
                     {"h_norm", num(r.h_norm)},
                     {"stat_norm", num(r.stat_norm)},
                     {"regularization", num(r.regularization)},
                     {"decrease_test", r.decrease_test},
                     {"accepted", r.accepted},
                     {"chart_failure", r.chart_failure}};
    if (with_timings) e["wall_time_ns"] = r.wall_time_ns;
    its.push_back(std::move(e));
  }
  j["iterations"] = its;
  return j;
}

template <class T>
void write_trace_csv(std::ostream& os, const SolveTrace<T>& trace, bool with_timings) {
  os << "iter,gamma,manifold,structure,F,step_norm,corr_norm,h_norm,stat_norm,regularization,"
        "decrease_test,accepted,chart_failure";
  if (with_timings) os << ",wall_time_ns";
  os << '\n';
  for (const auto& r : trace.records) {
    os << r.k << ',' << num(r.gamma) << ',' << r.manifold << ',' << r.structure << ',' << to_string_exact(r.f)
       << ',' << num(r.step_norm) << ',' << num(r.corr_norm) << ',' << num(r.h_norm) << ','
       << num(r.stat_norm) << ',' << num(r.regularization) << ',' << int(r.decrease_test) << ','
       << int(r.accepted) << ',' << int(r.chart_failure);
    if (with_timings) os << ',' << r.wall_time_ns;
    os << '\n';
  }
}

#define PROXSQP_INSTANTIATE(T)                                                                  \
  template struct SolveTrace<T>;                                                                \
  template SolveTrace<T> solve<T>(const CompositeInstance<T>&, const Vec<T>&, const SolveOptions&); \
  template nlohmann::json trace_to_json<T>(const SolveTrace<T>&, bool);                         \
  template void write_trace_csv<T>(std::ostream&, const SolveTrace<T>&, bool);

PROXSQP_INSTANTIATE(double)
PROXSQP_INSTANTIATE(Extended)

}  // namespace proxsqp
