#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "proxsqp/baselines.hpp"
#include "proxsqp/driver.hpp"

namespace proxsqp::bench {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Bundled data directory (overridable with PROXSQP_DATA_DIR at run time).
std::string data_dir();

/// The five convex quadratic pieces of MaxQuad straight from their closed-form
/// construction (n = 10, m = 5).
CompositeInstance<double> maxquad_construction();

/// Loads data/maxquad.json, verifies its checksum and that every A_i is PSD.
CompositeInstance<double> build_maxquad(const std::string& dir = data_dir());

/// Writes the checksummed MaxQuad data file.
nlohmann::json maxquad_data_file(const CompositeInstance<double>& inst);

/// A_0..A_n: entrywise standard normal from the counter RNG, then (G + G^T) / 2.
CompositeInstance<double> build_eigmax_affine(std::uint64_t seed, Index n, Index m);

CompositeInstance<double> pair_demo();

/// g(y) = max(y1 + y2, y1 + y2/4) at y* = (2, 0): both pieces tie there but
/// g decreases along a normal direction.
struct NormalAscentFixture {
  PolyhedralMax g;
  Vec<double> point;
};
NormalAscentFixture normal_ascent_fixture();

/// MaxQuad with piece 3 duplicated: rank-deficient constraints on {.., 3, 6}.
CompositeInstance<double> degenerate_fixture();

/// Registry names: maxquad, eigmax (n=6, m=12), eigmax-large (n=25, m=50),
/// pair, degenerate.
CompositeInstance<double> make_instance(const std::string& name, std::uint64_t seed = 42);
std::vector<std::string> instance_names();

/// File name of the recorded reference for an instance.
std::string reference_file(const CompositeInstance<double>& inst);
std::optional<ReferenceSolution> load_reference(const CompositeInstance<double>& inst,
                                                const std::string& dir = data_dir());

/// "max{2 3 4 5}" / "eig{r=3}" back to a descriptor (EigMult gets e_1..e_r).
ManifoldDescriptor<double> descriptor_from_code(const std::string& code, Index m);

/// nsBFGS from the all-ones point for `iterations` steps.
Vec<double> warm_start(const CompositeInstance<double>& inst, int iterations);

struct ExperimentConfig {
  std::string instance = "maxquad";
  std::uint64_t seed = 42;
  std::vector<std::string> solvers{"alg1", "gradient_sampling", "nsbfgs"};
  int warm_start_iterations = 20;
  int iteration_budget = 0;  ///< 0: the number of alg1 iterations
  SolveOptions alg1;
  BaselineOptions baseline;
  double gamma_bracket_lo = 1e-20;
  double gamma_bracket_hi = 1e4;
  bool gamma_window = true;
  int threads = 0;  ///< 0: hardware concurrency

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
/// Warm-start length tuned so that ||x0 - x*|| is about 1e-2.
ExperimentConfig default_config(const std::string& instance);

struct Artifact {
  std::string filename;
  std::string content;
  bool timing = false;  ///< wall-clock data, excluded from checksums
};

/// Per-solver suboptimality series from a shared warm start.
std::vector<Artifact> run_subopt_vs_time(const ExperimentConfig& cfg, const ReferenceSolution& ref);

/// gamma_k against the measured identification window of each iterate.
std::vector<Artifact> run_gamma_window(const ExperimentConfig& cfg, const ReferenceSolution& ref);

struct GammaWindowRow {
  int iter = 0;
  double gamma = 0.0;
  GammaWindow window;
  std::string manifold;
  double dist = 0.0;
};
std::vector<GammaWindowRow> gamma_window_rows(const ExperimentConfig& cfg, const ReferenceSolution& ref);

struct CheckResult {
  std::string name;
  bool pass = false;
  nlohmann::json detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool pass() const;
  nlohmann::json to_json() const;
};

/// Prox inclusions, property checkers, derivative FD checks and
/// transversality across the registry. `full` adds the large Eigmax.
VerifyReport run_verify(bool full = false, int threads = 0);

/// Writes artifacts plus checksums.json (FNV-1a 64 of every non-timing file).
void write_artifacts(const std::string& dir, const std::vector<Artifact>& artifacts);

}  // namespace proxsqp::bench
