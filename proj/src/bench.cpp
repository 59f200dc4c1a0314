#include "proxsqp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>
#include <thread>

#include "proxsqp/rng.hpp"

namespace proxsqp::bench {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string data_dir() {
  if (const char* env = std::getenv("PROXSQP_DATA_DIR")) return env;
  return PROXSQP_DATA_DIR;
}

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

template <class F>
auto parallel_map(std::size_t count, int threads, F&& f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(count);
  const std::size_t width =
      threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t begin = 0; begin < count; begin += width) {
    const std::size_t end = std::min(count, begin + width);
    std::vector<std::future<R>> futs;
    for (std::size_t i = begin; i < end; ++i) futs.push_back(std::async(std::launch::async, f, i));
    for (std::size_t i = begin; i < end; ++i) out[i] = futs[i - begin].get();
  }
  return out;
}

std::string num(double x) { return to_string_exact(x); }

}  // namespace

CompositeInstance<double> maxquad_construction() {
  constexpr Index n = 10;
  constexpr Index m = 5;
  QuadraticFamily<double> q;
  q.c0 = Vec<double>::Zero(m);
  for (Index k = 1; k <= m; ++k) {
    const double kd = static_cast<double>(k);
    Mat<double> a = Mat<double>::Zero(n, n);
    for (Index i = 1; i <= n; ++i)
      for (Index j = i + 1; j <= n; ++j) {
        const double id = static_cast<double>(i);
        const double jd = static_cast<double>(j);
        const double v = std::exp(id / jd) * std::cos(id * jd) * std::sin(kd);
        a(i - 1, j - 1) = v;
        a(j - 1, i - 1) = v;
      }
    for (Index i = 1; i <= n; ++i) {
      double off = 0.0;
      for (Index j = 1; j <= n; ++j)
        if (j != i) off += std::abs(a(i - 1, j - 1));
      a(i - 1, i - 1) = static_cast<double>(i) / 10.0 * std::abs(std::sin(kd)) + off;
    }
    Vec<double> b(n);
    for (Index i = 1; i <= n; ++i) {
      const double id = static_cast<double>(i);
      b(i - 1) = std::exp(id / kd) * std::sin(id * kd);
    }
    // f_k(x) = x^T A_k x - b_k^T x
    q.a.push_back(2.0 * a);
    q.b.push_back(-b);
  }
  CompositeInstance<double> inst;
  inst.name = "maxquad";
  inst.map = std::move(q);
  inst.outer = NonsmoothFunction::max(m);
  inst.validate();
  return inst;
}

nlohmann::json maxquad_data_file(const CompositeInstance<double>& inst) {
  nlohmann::json body = instance_to_json(inst, true);
  nlohmann::json file;
  file["instance"] = body;
  file["checksum"] = "fnv1a64:" + hex64(fnv1a64(body.dump()));
  return file;
}

CompositeInstance<double> build_maxquad(const std::string& dir) {
  const std::string path = dir + "/maxquad.json";
  const nlohmann::json file = read_json(path);
  if (!file.contains("instance") || !file.contains("checksum")) throw DataError(path + ": missing fields");
  const std::string expect = "fnv1a64:" + hex64(fnv1a64(file["instance"].dump()));
  if (file["checksum"].get<std::string>() != expect) throw DataError(path + ": checksum mismatch");
  CompositeInstance<double> inst = instance_from_json(file["instance"]);
  if (inst.n() != 10 || inst.outer.m != 5 || inst.outer.kind != OuterKind::Max)
    throw DataError(path + ": MaxQuad must have n = 10, m = 5");
  for (const auto& a : std::get<QuadraticFamily<double>>(inst.map).a) {
    const EigenPair<double> ep = sym_eigen(SymMatrix<double>::from_lower(a));
    if (ep.values(ep.values.size() - 1) < -1e-10) throw DataError(path + ": a MaxQuad piece is not convex");
  }
  return inst;
}

CompositeInstance<double> build_eigmax_affine(std::uint64_t seed, Index n, Index m) {
  if (n < 1 || m < 1) throw InvalidArgument("eigmax: dimensions must be positive");
  AffineMatrixMap<double> map;
  for (Index i = 0; i <= n; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    Mat<double> g(m, m);
    for (Index c = 0; c < m; ++c)
      for (Index r = 0; r < m; ++r) g(r, c) = rng.normal();
    map.a.push_back((g + g.transpose()) / 2.0);
  }
  CompositeInstance<double> inst;
  inst.name = "eigmax-n" + std::to_string(n) + "-m" + std::to_string(m) + "-s" + std::to_string(seed);
  inst.map = std::move(map);
  inst.outer = NonsmoothFunction::lammax(m);
  inst.seed = seed;
  inst.validate();
  return inst;
}

CompositeInstance<double> pair_demo() {
  CompositeInstance<double> inst;
  inst.name = "pair";
  inst.map = AnalyticPair{};
  inst.outer = NonsmoothFunction::max(2);
  inst.validate();
  return inst;
}

NormalAscentFixture normal_ascent_fixture() {
  NormalAscentFixture f;
  f.g.slopes.resize(2, 2);
  f.g.slopes << 1.0, 1.0, 1.0, 0.25;
  f.g.offsets = Vec<double>::Zero(2);
  f.g.active = {0, 1};
  f.point.resize(2);
  f.point << 2.0, 0.0;
  return f;
}

CompositeInstance<double> degenerate_fixture() {
  CompositeInstance<double> base = maxquad_construction();
  auto& q = std::get<QuadraticFamily<double>>(base.map);
  q.a.push_back(q.a[2]);
  q.b.push_back(q.b[2]);
  Vec<double> c0(6);
  c0 << q.c0, q.c0(2);
  q.c0 = c0;
  base.outer = NonsmoothFunction::max(6);
  base.name = "degenerate";
  base.validate();
  return base;
}

std::vector<std::string> instance_names() { return {"maxquad", "eigmax", "eigmax-large", "pair", "degenerate"}; }

CompositeInstance<double> make_instance(const std::string& name, std::uint64_t seed) {
  if (name == "maxquad") return build_maxquad();
  if (name == "eigmax") return build_eigmax_affine(seed, 6, 12);
  if (name == "eigmax-large") return build_eigmax_affine(seed, 25, 50);
  if (name == "pair") return pair_demo();
  if (name == "degenerate") return degenerate_fixture();
  throw InvalidArgument("unknown instance '" + name + "'");
}

std::string reference_file(const CompositeInstance<double>& inst) { return "reference_" + inst.name + ".json"; }

std::optional<ReferenceSolution> load_reference(const CompositeInstance<double>& inst, const std::string& dir) {
  const std::string path = dir + "/" + reference_file(inst);
  if (!std::filesystem::exists(path)) return std::nullopt;
  ReferenceSolution ref = reference_from_json(read_json(path));
  if (ref.instance != inst.name || ref.x.size() != inst.n()) throw DataError(path + ": reference does not match");
  return ref;
}

ManifoldDescriptor<double> descriptor_from_code(const std::string& code, Index m) {
  static const std::regex max_re(R"(max\{([0-9 ]+)\})");
  static const std::regex eig_re(R"(eig\{r=([0-9]+)\})");
  std::smatch mt;
  if (std::regex_match(code, mt, max_re)) {
    MaxActive a;
    std::istringstream is(mt[1].str());
    Index i = 0;
    while (is >> i) {
      if (i < 1 || i > m) throw DataError("manifold code index out of range: " + code);
      a.indices.push_back(i - 1);
    }
    return a;
  }
  if (std::regex_match(code, mt, eig_re)) {
    const Index r = std::stol(mt[1].str());
    if (r < 1 || r > m) throw DataError("manifold code multiplicity out of range: " + code);
    return EigMult<double>{r, Mat<double>::Identity(m, r)};
  }
  throw DataError("cannot parse manifold code '" + code + "'");
}

Vec<double> warm_start(const CompositeInstance<double>& inst, int iterations) {
  BaselineOptions opts;
  opts.max_iter = iterations;
  return nonsmooth_bfgs(inst, Vec<double>::Ones(inst.n()), opts).x;
}

void ExperimentConfig::validate() const {
  const auto names = instance_names();
  if (std::find(names.begin(), names.end(), instance) == names.end())
    throw InvalidArgument("unknown instance '" + instance + "'");
  for (const auto& s : solvers)
    if (s != "alg1" && s != "gradient_sampling" && s != "nsbfgs") throw InvalidArgument("unknown solver '" + s + "'");
  if (warm_start_iterations < 0 || iteration_budget < 0) throw InvalidArgument("iteration counts must be nonnegative");
  if (!(gamma_bracket_lo > 0.0 && gamma_bracket_hi > gamma_bracket_lo))
    throw InvalidArgument("gamma bracket must satisfy 0 < lo < hi");
  alg1.validate();
}

ExperimentConfig default_config(const std::string& instance) {
  ExperimentConfig c;
  c.instance = instance;
  if (instance == "maxquad") c.warm_start_iterations = 60;
  if (instance == "eigmax") c.warm_start_iterations = 20;
  if (instance == "eigmax-large") c.warm_start_iterations = 60;
  return c;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c = default_config(j.value("instance", std::string("maxquad")));
    c.seed = j.value("seed", c.seed);
    if (j.contains("solvers")) c.solvers = j["solvers"].get<std::vector<std::string>>();
    c.warm_start_iterations = j.value("warm_start_iterations", c.warm_start_iterations);
    c.iteration_budget = j.value("iteration_budget", c.iteration_budget);
    c.gamma_bracket_lo = j.value("gamma_bracket_lo", c.gamma_bracket_lo);
    c.gamma_bracket_hi = j.value("gamma_bracket_hi", c.gamma_bracket_hi);
    c.gamma_window = j.value("gamma_window", c.gamma_window);
    c.threads = j.value("threads", c.threads);
    if (j.contains("alg1")) {
      const auto& a = j["alg1"];
      if (a.contains("gamma0") && !a["gamma0"].is_null()) c.alg1.gamma0 = a["gamma0"].get<double>();
      c.alg1.gamma_factor = a.value("gamma_factor", c.alg1.gamma_factor);
      c.alg1.max_iter = a.value("max_iter", c.alg1.max_iter);
      if (a.contains("tol")) c.alg1.with_tolerance(a["tol"].get<double>());
      if (a.contains("soc")) {
        const std::string s = a["soc"].get<std::string>();
        if (s != "classic" && s != "literal") throw InvalidArgument("soc must be classic or literal");
        c.alg1.soc_rule = s == "classic" ? SocRule::Classic : SocRule::Literal;
      }
    }
    if (j.contains("baseline")) {
      const auto& b = j["baseline"];
      c.baseline.rng_seed = b.value("rng_seed", c.baseline.rng_seed);
      c.baseline.sample_count = b.value("sample_count", c.baseline.sample_count);
      c.baseline.sample_radius = b.value("sample_radius", c.baseline.sample_radius);
      c.baseline.wolfe_c1 = b.value("wolfe_c1", c.baseline.wolfe_c1);
      c.baseline.wolfe_c2 = b.value("wolfe_c2", c.baseline.wolfe_c2);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["instance"] = c.instance;
  j["seed"] = c.seed;
  j["solvers"] = c.solvers;
  j["warm_start_iterations"] = c.warm_start_iterations;
  j["iteration_budget"] = c.iteration_budget;
  j["gamma_bracket_lo"] = c.gamma_bracket_lo;
  j["gamma_bracket_hi"] = c.gamma_bracket_hi;
  j["gamma_window"] = c.gamma_window;
  j["threads"] = c.threads;
  j["alg1"] = {{"gamma0", c.alg1.gamma0 ? nlohmann::json(*c.alg1.gamma0) : nlohmann::json(nullptr)},
               {"gamma_factor", c.alg1.gamma_factor},
               {"max_iter", c.alg1.max_iter},
               {"tol", c.alg1.tol_step},
               {"soc", c.alg1.soc_rule == SocRule::Classic ? "classic" : "literal"}};
  j["baseline"] = {{"rng_seed", c.baseline.rng_seed},
                   {"sample_count", c.baseline.sample_count},
                   {"sample_radius", c.baseline.sample_radius},
                   {"wolfe_c1", c.baseline.wolfe_c1},
                   {"wolfe_c2", c.baseline.wolfe_c2}};
  return j;
}

std::vector<Artifact> run_subopt_vs_time(const ExperimentConfig& cfg, const ReferenceSolution& ref) {
  cfg.validate();
  std::vector<Artifact> out;
  if (cfg.solvers.empty()) return out;
  if (!ref.available) {
    nlohmann::json skip{{"skipped", true}, {"reason", "reference solution unavailable"}};
    out.push_back({"skip.json", skip.dump(2) + "\n", false});
    return out;
  }
  const CompositeInstance<double> inst = make_instance(cfg.instance, cfg.seed);
  const Vec<double> x0 = warm_start(inst, cfg.warm_start_iterations);

  int budget = cfg.iteration_budget;
  std::optional<SolveTrace<double>> alg1;
  if (budget == 0) {
    alg1 = solve(inst, x0, cfg.alg1);
    budget = std::max(1, static_cast<int>(alg1->records.size()));
  }
  const auto traces = parallel_map(cfg.solvers.size(), cfg.threads, [&](std::size_t i) {
    const std::string& s = cfg.solvers[i];
    if (s == "alg1") {
      if (alg1) return *alg1;
      SolveOptions o = cfg.alg1;
      o.max_iter = budget;
      return solve(inst, x0, o);
    }
    BaselineOptions b = cfg.baseline;
    b.max_iter = budget;
    return s == "nsbfgs" ? nonsmooth_bfgs(inst, x0, b) : gradient_sampling(inst, x0, b);
  });

  nlohmann::json summary;
  summary["instance"] = inst.name;
  summary["iteration_budget"] = budget;
  summary["warm_start_iterations"] = cfg.warm_start_iterations;
  summary["f_star"] = to_string_exact(ref.f);
  summary["x0_distance"] = num(to_double((cast_vec<Extended>(x0) - ref.x).norm()));
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& tr = traces[i];
    const std::string& s = cfg.solvers[i];
    std::ostringstream csv;
    std::ostringstream tcsv;
    csv << "iter,F,subopt\n";
    tcsv << "iter,wall_time_s\n";
    for (std::size_t k = 0; k < tr.iterates.size(); ++k) {
      const double f = k < tr.records.size() ? tr.records[k].f : tr.f;
      const double sub = to_double(Extended(f) - ref.f);
      csv << k << ',' << num(f) << ',' << num(sub) << '\n';
      const double t = k == 0 ? 0.0 : static_cast<double>(tr.records[k - 1].wall_time_ns) * 1e-9;
      tcsv << k << ',' << num(t) << '\n';
    }
    out.push_back({"subopt_" + s + ".csv", csv.str(), false});
    out.push_back({"timing_subopt_" + s + ".csv", tcsv.str(), true});
    summary["solvers"][s] = {{"iterations", tr.records.size()},
                             {"status", to_string(tr.status)},
                             {"final_subopt", num(to_double(Extended(tr.f) - ref.f))}};
  }
  out.push_back({"summary.json", summary.dump(2) + "\n", false});
  return out;
}

std::vector<GammaWindowRow> gamma_window_rows(const ExperimentConfig& cfg, const ReferenceSolution& ref) {
  cfg.validate();
  const CompositeInstance<double> inst = make_instance(cfg.instance, cfg.seed);
  const Vec<double> x0 = warm_start(inst, cfg.warm_start_iterations);
  const SolveTrace<double> tr = solve(inst, x0, cfg.alg1);
  const ManifoldDescriptor<double> target = descriptor_from_code(ref.manifold, inst.outer.m);
  return parallel_map(tr.records.size(), cfg.threads, [&](std::size_t k) {
    GammaWindowRow row;
    const auto& rec = tr.records[k];
    row.iter = rec.k;
    row.gamma = rec.gamma;
    row.manifold = rec.manifold;
    const Vec<double>& xk = tr.iterates[k];
    row.dist = to_double((cast_vec<Extended>(xk) - ref.x).norm());
    row.window = gamma_range_scan(inst, xk, target, cfg.gamma_bracket_lo, cfg.gamma_bracket_hi);
    return row;
  });
}

std::vector<Artifact> run_gamma_window(const ExperimentConfig& cfg, const ReferenceSolution& ref) {
  if (!ref.available) {
    nlohmann::json skip{{"skipped", true}, {"reason", "reference solution unavailable"}};
    return {{"gamma_window_skip.json", skip.dump(2) + "\n", false}};
  }
  const auto rows = gamma_window_rows(cfg, ref);
  std::ostringstream csv;
  csv << "iter,gamma_k,gamma_low,gamma_up,manifold_code,dist_estimate\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    csv << r.iter << ',' << num(r.gamma) << ',' << num(r.window.empty ? nan : r.window.low) << ','
        << num(r.window.empty ? nan : r.window.up) << ',' << r.manifold << ',' << num(r.dist) << '\n';
  }
  return {{"gamma_window.csv", csv.str(), false}};
}

// ---------------------------------------------------------------------------
// Verification

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json j;
  j["pass"] = pass();
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) arr.push_back({{"check", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = arr;
  return j;
}

namespace {

Mat<double> random_symmetric(CounterRng& rng, Index m) {
  Mat<double> g(m, m);
  for (Index c = 0; c < m; ++c)
    for (Index r = 0; r < m; ++r) g(r, c) = rng.normal();
  return (g + g.transpose()) / 2.0;
}

Vec<double> random_vec(CounterRng& rng, Index n) {
  Vec<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

double prox_max_residual(const Vec<double>& y, double gamma, const ProxOutcome<double>& p) {
  const auto& idx = std::get<MaxActive>(p.manifold).indices;
  const Vec<double> r = (y - p.point) / gamma;
  double err = std::abs(r.sum() - 1.0);
  for (Index i = 0; i < y.size(); ++i) {
    const bool in = std::find(idx.begin(), idx.end(), i) != idx.end();
    err = std::max(err, in ? std::max(0.0, -r(i)) : std::abs(r(i)));
  }
  return err;
}

double prox_lammax_residual(const Mat<double>& y, double gamma, const ProxOutcome<double>& p) {
  const Index m = y.rows();
  const Index r = structure_size(p.manifold);
  const Mat<double> pm = Eigen::Map<const Mat<double>>(p.point.data(), m, m);
  const Mat<double> res = (y - pm) / gamma;
  const Mat<double> e = p.basis.leftCols(r);
  const Mat<double> z = e.transpose() * res * e;
  double err = (res - e * z * e.transpose()).norm();
  err = std::max(err, std::abs(z.trace() - 1.0));
  const EigenPair<double> ep = sym_eigen(SymMatrix<double>::symmetrized(z));
  err = std::max(err, std::max(0.0, -ep.values(r - 1) - 1e-12));
  return err;
}

CheckResult check_prox_suite(OuterKind kind, int count, std::uint64_t seed) {
  CheckResult c;
  c.name = kind == OuterKind::Max ? "prox_inclusion_max" : "prox_inclusion_lammax";
  double worst = 0.0;
  double worst_budget = 0.0;
  for (int s = 0; s < count; ++s) {
    CounterRng rng(seed, static_cast<std::uint64_t>(s));
    const Index m = 2 + static_cast<Index>(rng.uniform() * 7.0);
    const double gamma = std::pow(10.0, -3.0 + 5.0 * rng.uniform());
    if (kind == OuterKind::Max) {
      const Vec<double> y = random_vec(rng, m);
      const auto p = prox_max(y, gamma);
      worst = std::max(worst, prox_max_residual(y, gamma, p));
      double budget = -gamma;
      for (Index i : std::get<MaxActive>(p.manifold).indices) budget += y(i) - p.threshold;
      worst_budget = std::max(worst_budget, std::abs(budget) / (1.0 + y.norm()));
    } else {
      const Mat<double> y = random_symmetric(rng, m);
      const auto p = prox_lammax(SymMatrix<double>::from_lower(y), gamma);
      worst = std::max(worst, prox_lammax_residual(y, gamma, p));
    }
  }
  c.pass = worst <= 1e-10 && worst_budget <= 1e-12;
  c.detail = {{"inputs", count}, {"max_inclusion_error", num(worst)}, {"max_budget_error", num(worst_budget)}};
  return c;
}

CheckResult check_normal_ascent_fixtures() {
  CheckResult c;
  c.name = "normal_ascent_fixtures";
  const auto gmax = NonsmoothFunction::max(4);
  Vec<double> p(4);
  p << 1.0, 1.0, 1.0, 0.0;
  const auto rmax = check_normal_ascent<double>(gmax, MaxActive{{0, 1, 2}}, p, 200, 1);
  const auto glam = NonsmoothFunction::lammax(3);
  Vec<double> d(3);
  d << 3.0, 3.0, 0.0;
  const Vec<double> pl = SymMatrix<double>::diagonal(d).flatten();
  const auto rlam = check_normal_ascent<double>(glam, EigMult<double>{2, Mat<double>::Identity(3, 2)}, pl, 200, 2);
  c.pass = rmax.pass && rlam.pass;
  c.detail = {{"max_min_derivative", num(rmax.min_directional_derivative)},
              {"lammax_min_derivative", num(rlam.min_directional_derivative)}};
  return c;
}

CheckResult check_counterexample() {
  CheckResult c;
  c.name = "normal_ascent_counterexample_fails";
  const auto fx = normal_ascent_fixture();
  const auto rep = check_normal_ascent(fx.g, 200, 3);
  c.pass = !rep.pass && rep.min_directional_derivative < 0.0;
  c.detail = {{"min_derivative", num(rep.min_directional_derivative)}, {"property_holds", rep.pass}};
  return c;
}

CheckResult check_curves() {
  CheckResult c;
  c.name = "curve_property";
  CounterRng rng(7);
  const auto glam = NonsmoothFunction::lammax(3);
  Vec<double> d(3);
  d << 3.0, 3.0, 0.0;
  const Mat<double> y = Mat<double>(d.asDiagonal()) + 1e-3 * random_symmetric(rng, 3);
  const Vec<double> yl = Eigen::Map<const Vec<double>>(y.data(), 9);
  const auto probes = CurveProbeSet::log_spaced(1e-4, 1e-2, 9, 11);
  const auto rlam = check_curve_property<double>(glam, EigMult<double>{2, Mat<double>::Identity(3, 2)}, yl, probes);
  const auto gmax = NonsmoothFunction::max(4);
  Vec<double> ym(4);
  ym << 1.0, 0.999, 1.001, 0.2;
  const auto rmax = check_curve_property<double>(gmax, MaxActive{{0, 1, 2}}, ym, probes);
  c.pass = rlam.pass && rlam.exponent >= 1.9 && rmax.zero_excess;
  c.detail = {{"lammax_exponent", num(rlam.exponent)},
              {"lammax_max_excess", num(rlam.max_excess)},
              {"max_max_excess", num(rmax.max_excess)},
              {"max_zero_excess", rmax.zero_excess}};
  return c;
}

CheckResult check_map_fd(const CompositeInstance<double>& inst, std::uint64_t seed) {
  CheckResult c;
  c.name = "fd_map_" + inst.name;
  CounterRng rng(seed);
  double worst_j = 0.0;
  double worst_s = 0.0;
  bool pass = true;
  for (int t = 0; t < 5; ++t) {
    const Vec<double> x = random_vec(rng, inst.n());
    const Vec<double> u = random_vec(rng, inst.n());
    const Vec<double> v = random_vec(rng, inst.n());
    const auto rep = check_map_derivatives(inst.map, x, u, v);
    worst_j = std::max(worst_j, rep.jacobian_rel_error);
    worst_s = std::max(worst_s, rep.second_rel_error);
    pass = pass && rep.pass;
  }
  c.pass = pass;
  c.detail = {{"jacobian_rel_error", num(worst_j)}, {"second_rel_error", num(worst_s)}};
  return c;
}

CheckResult check_chart_fd(std::uint64_t seed) {
  CheckResult c;
  c.name = "fd_chart_lammax";
  CounterRng rng(seed);
  const Index m = 5;
  const Index r = 2;
  double worst_grad = 0.0;
  double worst_hv = 0.0;
  double worst_jac = 0.0;
  double worst_lag = 0.0;
  for (int t = 0; t < 5; ++t) {
    Vec<double> spec(m);
    spec << 3.0, 2.9, 1.0, 0.0, -1.0;
    Mat<double> q = Eigen::HouseholderQR<Mat<double>>(random_symmetric(rng, m)).householderQ();
    const Mat<double> y = q * spec.asDiagonal() * q.transpose();
    const Mat<double> eta = random_symmetric(rng, m);
    const Vec<double> yv = SymMatrix<double>::symmetrized(y).flatten();
    const Vec<double> ev = SymMatrix<double>::symmetrized(eta).flatten();
    const EigenPair<double> ep = sym_eigen(SymMatrix<double>::symmetrized(y));
    const auto g = NonsmoothFunction::lammax(m);
    const auto chart = make_chart<double>(g, EigMult<double>{r, ep.vectors.leftCols(r)});
    const double h = std::cbrt(machine_eps<double>()) * 4.0;
    const auto pt = chart->at(yv);
    const auto pp = chart->at(Vec<double>(yv + h * ev));
    const auto pm = chart->at(Vec<double>(yv - h * ev));
    const double fd_val = (pp->extension_value() - pm->extension_value()) / (2 * h);
    worst_grad = std::max(worst_grad, std::abs(fd_val - pt->extension_gradient().dot(ev)) / (1.0 + std::abs(fd_val)));
    const Vec<double> fd_g = (pp->extension_gradient() - pm->extension_gradient()) / (2 * h);
    const Vec<double> hv = pt->extension_hessian_vector(ev);
    worst_hv = std::max(worst_hv, (fd_g - hv).norm() / std::max(1.0, hv.norm()));
    const Vec<double> fd_h = (pp->constraint() - pm->constraint()) / (2 * h);
    const Vec<double> jh = pt->constraint_derivative(ev);
    worst_jac = std::max(worst_jac, (fd_h - jh).norm() / std::max(1.0, jh.norm()));
    // Lagrangian Hessian-vector against the FD gradient of g~ + <mu, h>
    const Vec<double> mu = random_vec(rng, pt->codim());
    const auto lag_grad = [&](const ChartPoint<double>& p) {
      return Vec<double>(p.extension_gradient() + constraint_adjoint(g, p, mu));
    };
    const Vec<double> fd_l = (lag_grad(*pp) - lag_grad(*pm)) / (2 * h);
    const Vec<double> lv = pt->lagrangian_hessian_vector(mu, ev);
    worst_lag = std::max(worst_lag, (fd_l - lv).norm() / std::max(1.0, lv.norm()));
  }
  c.pass = worst_grad <= 1e-6 && worst_hv <= 1e-6 && worst_jac <= 1e-6 && worst_lag <= 1e-6;
  c.detail = {{"gradient_rel_error", num(worst_grad)},
              {"hessian_vector_rel_error", num(worst_hv)},
              {"constraint_jacobian_rel_error", num(worst_jac)},
              {"lagrangian_hessian_rel_error", num(worst_lag)}};
  return c;
}

CheckResult check_transversality(const std::string& dir) {
  CheckResult c;
  c.name = "transversality";
  const auto mq = build_maxquad(dir);
  const auto ref = load_reference(mq, dir);
  if (!ref || !ref->available) {
    c.pass = false;
    c.detail = {{"skipped", "maxquad reference unavailable"}};
    return c;
  }
  const Vec<double> xs = cast_vec<double>(ref->x);
  const auto good = transversality_check<double>(mq, xs, descriptor_from_code(ref->manifold, 5));
  const auto deg = degenerate_fixture();
  const auto bad = transversality_check<double>(deg, xs, MaxActive{{1, 2, 3, 4, 5}});
  c.pass = good.pass && !bad.pass;
  c.detail = {{"maxquad_sigma_min", num(good.min_singular_value)},
              {"degenerate_sigma_min", num(bad.min_singular_value)},
              {"degenerate_rank_tol", num(bad.rank_tol)}};
  return c;
}

}  // namespace

VerifyReport run_verify(bool full, int threads) {
  const std::string dir = data_dir();
  std::vector<std::function<CheckResult()>> tasks{
      [] { return check_prox_suite(OuterKind::Max, 1000, 101); },
      [] { return check_prox_suite(OuterKind::LamMax, 1000, 202); },
      [] { return check_normal_ascent_fixtures(); },
      [] { return check_counterexample(); },
      [] { return check_curves(); },
      [dir] { return check_map_fd(build_maxquad(dir), 5); },
      [] { return check_map_fd(build_eigmax_affine(42, 6, 12), 6); },
      [] { return check_map_fd(pair_demo(), 7); },
      [] { return check_chart_fd(8); },
      [dir] { return check_transversality(dir); },
  };
  if (full) tasks.push_back([] { return check_map_fd(build_eigmax_affine(42, 25, 50), 9); });
  VerifyReport rep;
  rep.checks = parallel_map(tasks.size(), threads, [&](std::size_t i) { return tasks[i](); });
  return rep;
}

void write_artifacts(const std::string& dir, const std::vector<Artifact>& artifacts) {
  std::filesystem::create_directories(dir);
  nlohmann::json sums = nlohmann::json::object();
  for (const auto& a : artifacts) {
    std::ofstream out(dir + "/" + a.filename, std::ios::binary);
    if (!out) throw DataError("cannot write " + dir + "/" + a.filename);
    out << a.content;
    if (!a.timing) sums[a.filename] = "fnv1a64:" + hex64(fnv1a64(a.content));
  }
  std::ofstream out(dir + "/checksums.json", std::ios::binary);
  out << sums.dump(2) << '\n';
}

}  // namespace proxsqp::bench
