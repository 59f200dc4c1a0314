#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "proxsqp/bench.hpp"

using namespace proxsqp;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailure = 1;
constexpr int kUsage = 2;

/// nsBFGS steps from the origin used for the recorded reference solutions;
/// deliberately different from the benchmark warm starts.
constexpr int kReferenceStart = 100;

template <class T>
void emit_trace(const SolveTrace<T>& tr, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    write_trace_csv(out, tr);
  else
    out << trace_to_json(tr).dump(2) << '\n';
}

template <class T>
int run_solve(const CompositeInstance<double>& inst, const SolveOptions& opts, int warm, const std::string& trace) {
  const Vec<double> x0 = bench::warm_start(inst, warm);
  const CompositeInstance<T> it = cast_instance<T>(inst);
  const SolveTrace<T> tr = solve(it, cast_vec<T>(x0), opts);
  std::cout << "instance  " << inst.name << "\n"
            << "status    " << to_string(tr.status) << "\n"
            << "iters     " << tr.records.size() << " (" << tr.accepted_steps() << " accepted)\n"
            << "F         " << to_string_exact(tr.f) << "\n"
            << "manifold  " << (tr.manifold ? manifold_code(*tr.manifold) : std::string("-")) << "\n";
  if (!trace.empty()) emit_trace(tr, trace);
  return tr.status == SolveStatus::Converged ? kOk : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prox-identification SQP solver for max and max-eigenvalue composites"};
  app.require_subcommand(1);

  std::string instance = "maxquad";
  std::uint64_t seed = 42;
  std::string gamma0 = "auto";
  double tol = 1e-9;
  int max_iter = 100;
  std::string precision = "double";
  std::string soc = "classic";
  std::string trace;
  int warm = -1;

  auto* solve_cmd = app.add_subcommand("solve", "Run the identification/SQP loop from the warm start");
  solve_cmd->add_option("--instance", instance, "maxquad | eigmax | eigmax-large | pair");
  solve_cmd->add_option("--seed", seed, "Instance seed (eigmax)");
  solve_cmd->add_option("--gamma0", gamma0, "Initial gamma or 'auto'");
  solve_cmd->add_option("--tol", tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iter", max_iter, "Iteration cap")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--precision", precision)->check(CLI::IsMember({"double", "extended"}));
  solve_cmd->add_option("--soc", soc, "Second-order correction rule")->check(CLI::IsMember({"classic", "literal"}));
  solve_cmd->add_option("--warm-start", warm, "nsBFGS warm-start steps (default from the instance config)");
  solve_cmd->add_option("--trace", trace, "Trace output (.json, or .csv for the flat table)");

  std::string scan_out;
  auto* scan_cmd = app.add_subcommand("scan-gamma", "Identification window of every iterate");
  scan_cmd->add_option("--instance", instance);
  scan_cmd->add_option("--seed", seed);
  scan_cmd->add_option("--trace", scan_out, "CSV output")->required();

  std::string config_path;
  std::string out_dir;
  auto* bench_cmd = app.add_subcommand("bench", "Suboptimality and gamma-window experiments");
  bench_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", out_dir, "Output directory")->required();

  bool full = false;
  std::string verify_out;
  auto* verify_cmd = app.add_subcommand("verify", "Property checks across the registry");
  verify_cmd->add_flag("--full", full, "Include the large Eigmax instance");
  verify_cmd->add_option("--out", verify_out, "Write the JSON report here");

  std::string ref_out;
  auto* ref_cmd = app.add_subcommand("reference", "Extended-precision reference solution");
  ref_cmd->add_option("--instance", instance);
  ref_cmd->add_option("--seed", seed);
  ref_cmd->add_option("--out", ref_out, "Output JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve_cmd) {
      const CompositeInstance<double> inst = bench::make_instance(instance, seed);
      SolveOptions opts;
      opts.max_iter = max_iter;
      opts.with_tolerance(tol);
      opts.soc_rule = soc == "classic" ? SocRule::Classic : SocRule::Literal;
      if (gamma0 != "auto") opts.gamma0 = std::stod(gamma0);
      opts.precision = precision == "extended" ? Precision::Extended : Precision::Double;
      const int steps = warm >= 0 ? warm : bench::default_config(instance).warm_start_iterations;
      if (opts.precision == Precision::Extended) return run_solve<Extended>(inst, opts, steps, trace);
      return run_solve<double>(inst, opts, steps, trace);
    }
    if (*scan_cmd) {
      bench::ExperimentConfig cfg = bench::default_config(instance);
      cfg.seed = seed;
      const auto inst = bench::make_instance(instance, seed);
      const auto ref = bench::load_reference(inst);
      if (!ref || !ref->available) {
        std::cerr << "no reference solution for " << inst.name << "\n";
        return kCheckFailure;
      }
      const auto arts = bench::run_gamma_window(cfg, *ref);
      std::ofstream out(scan_out, std::ios::binary);
      out << arts.front().content;
      return kOk;
    }
    if (*bench_cmd) {
      std::ifstream in(config_path);
      const bench::ExperimentConfig cfg = bench::config_from_json(nlohmann::json::parse(in));
      std::vector<bench::Artifact> arts;
      if (!cfg.solvers.empty()) {
        const auto inst = bench::make_instance(cfg.instance, cfg.seed);
        const auto ref = bench::load_reference(inst);
        const ReferenceSolution r = ref ? *ref : ReferenceSolution{};
        arts = bench::run_subopt_vs_time(cfg, r);
        if (cfg.gamma_window) {
          auto g = bench::run_gamma_window(cfg, r);
          arts.insert(arts.end(), g.begin(), g.end());
        }
      }
      arts.push_back({"config.json", bench::config_to_json(cfg).dump(2) + "\n", false});
      bench::write_artifacts(out_dir, arts);
      return kOk;
    }
    if (*verify_cmd) {
      const bench::VerifyReport rep = bench::run_verify(full);
      const std::string text = rep.to_json().dump(2) + "\n";
      if (!verify_out.empty()) {
        std::ofstream out(verify_out, std::ios::binary);
        out << text;
      }
      for (const auto& c : rep.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "\n";
      return rep.pass() ? kOk : kCheckFailure;
    }
    if (*ref_cmd) {
      const auto inst = bench::make_instance(instance, seed);
      const ReferenceSolution ref = reference_solve(inst, bench::warm_start(inst, kReferenceStart));
      std::ofstream out(ref_out, std::ios::binary);
      out << reference_to_json(ref).dump(2) << '\n';
      std::cout << inst.name << ": " << (ref.available ? "converged" : "NOT converged") << ", F* = "
                << to_string_exact(ref.f) << ", " << ref.manifold << "\n";
      return ref.available ? kOk : kCheckFailure;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailure;
  }
  return kUsage;
}
