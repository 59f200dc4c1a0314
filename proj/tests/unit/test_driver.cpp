#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "proxsqp/bench.hpp"
#include "proxsqp/driver.hpp"

using namespace proxsqp;

namespace {

struct MaxQuadRun {
  CompositeInstance<double> inst = bench::build_maxquad();
  Vec<double> x0 = bench::warm_start(inst, bench::default_config("maxquad").warm_start_iterations);
  SolveTrace<double> trace = solve(inst, x0, SolveOptions{});
};

const MaxQuadRun& maxquad_run() {
  static const MaxQuadRun run;
  return run;
}

}  // namespace

TEST(SolveOptions, Validation) {
  SolveOptions o;
  EXPECT_NO_THROW(o.validate());
  o.gamma_factor = 1.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = SolveOptions{};
  o.gamma0 = -1.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = SolveOptions{};
  o.tol_feas = 0.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
}

TEST(Solve, RejectsBadStart) {
  const auto inst = bench::pair_demo();
  EXPECT_THROW(solve(inst, Vec<double>(Vec<double>::Zero(3)), SolveOptions{}), DimensionMismatch);
  EXPECT_THROW(solve(inst, Vec<double>{{std::nan(""), 0.0}}, SolveOptions{}), NonFiniteInput);
}

TEST(Solve, MaxQuadIdentifiesAndConverges) {
  const auto& run = maxquad_run();
  ASSERT_EQ(run.trace.status, SolveStatus::Converged);
  EXPECT_EQ(run.trace.records.front().manifold, "max{2 3 4 5}");
  for (const auto& r : run.trace.records) EXPECT_EQ(r.manifold, "max{2 3 4 5}");
  const auto ref = bench::load_reference(run.inst);
  ASSERT_TRUE(ref && ref->available);
  EXPECT_NEAR(run.trace.f, to_double(ref->f), 1e-14);
  EXPECT_LE(run.trace.accepted_steps(), 5);
}

TEST(Solve, AcceptedValuesNonIncreasing) {
  const auto& run = maxquad_run();
  for (std::size_t k = 1; k < run.trace.records.size(); ++k) EXPECT_LE(run.trace.records[k].f, run.trace.records[k - 1].f);
}

TEST(Solve, RejectedStepKeepsIterate) {
  const auto inst = bench::build_maxquad();
  // starting from the origin every piece is tied; the first steps get rejected
  SolveOptions o;
  o.max_iter = 30;
  const auto tr = solve(inst, Vec<double>(Vec<double>::Zero(10)), o);
  bool saw_reject = false;
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    if (!tr.records[k].accepted && !tr.records[k].chart_failure && tr.status != SolveStatus::Converged) {
      saw_reject = true;
      EXPECT_EQ(tr.iterates[k + 1], tr.iterates[k]);
    }
  }
  EXPECT_TRUE(saw_reject);
  for (std::size_t k = 1; k < tr.records.size(); ++k)
    EXPECT_NEAR(tr.records[k].gamma, tr.records[k - 1].gamma * 0.5, 1e-18 * tr.records[k - 1].gamma);
}

TEST(Solve, QuadraticContraction) {
  const auto& run = maxquad_run();
  const auto ref = bench::load_reference(run.inst);
  const Vec<double> xs = cast_vec<double>(ref->x);
  std::vector<double> e;
  for (const auto& x : run.trace.iterates) {
    const double d = (x - xs).norm();
    if (d > 1e-13) e.push_back(d);
  }
  ASSERT_GE(e.size(), 3u);
  for (std::size_t k = 0; k + 1 < e.size(); ++k) EXPECT_LE(e[k + 1], 100 * e[k] * e[k]);
}

TEST(Solve, ExtendedPrecisionReachesFarBelowDouble) {
  const auto& run = maxquad_run();
  const auto ext = cast_instance<Extended>(run.inst);
  SolveOptions o;
  o.precision = Precision::Extended;
  o.with_tolerance(1e-28);
  const auto tr = solve(ext, cast_vec<Extended>(run.x0), o);
  EXPECT_EQ(tr.status, SolveStatus::Converged);
  const auto ref = bench::load_reference(run.inst);
  EXPECT_LE(to_double((tr.x - ref->x).norm()), 1e-25);
}

TEST(Solve, EigmaxDeskIdentifiesCertifiedMultiplicity) {
  const auto inst = bench::make_instance("eigmax");
  const auto ref = bench::load_reference(inst);
  ASSERT_TRUE(ref && ref->available);
  EXPECT_GE(ref->structure, 2);
  const auto tr = solve(inst, bench::warm_start(inst, bench::default_config("eigmax").warm_start_iterations), SolveOptions{});
  ASSERT_EQ(tr.status, SolveStatus::Converged);
  EXPECT_EQ(tr.records.back().manifold, ref->manifold);
}

TEST(Solve, LiteralSocIsSelectable) {
  const auto& run = maxquad_run();
  SolveOptions o;
  o.soc_rule = SocRule::Literal;
  o.max_iter = 5;
  const auto tr = solve(run.inst, run.x0, o);
  EXPECT_EQ(tr.records.size(), 5u);
}

TEST(Trace, CsvHeaderAndRows) {
  const auto& run = maxquad_run();
  std::ostringstream os;
  write_trace_csv(os, run.trace, false);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "iter,gamma,manifold,structure,F,step_norm,corr_norm,h_norm,stat_norm,regularization,decrease_test,accepted,"
            "chart_failure");
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), run.trace.records.size() + 1);
  EXPECT_EQ(s.find('\r'), std::string::npos);
}

TEST(Trace, JsonFields) {
  const auto& run = maxquad_run();
  const auto j = trace_to_json(run.trace, true);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("status"), "converged");
  EXPECT_EQ(j.at("iterations").size(), run.trace.records.size());
  EXPECT_TRUE(j.at("iterations")[0].contains("wall_time_ns"));
  EXPECT_FALSE(trace_to_json(run.trace, false).at("iterations")[0].contains("wall_time_ns"));
}

TEST(Reference, JsonRoundTrip) {
  const auto inst = bench::build_maxquad();
  const auto ref = *bench::load_reference(inst);
  const auto back = reference_from_json(reference_to_json(ref));
  EXPECT_EQ(back.f, ref.f);
  EXPECT_EQ(back.x, ref.x);
  EXPECT_EQ(back.manifold, "max{2 3 4 5}");
  EXPECT_THROW(reference_from_json(nlohmann::json{{"schema_version", 1}}), DataError);
}

TEST(Reference, MaxQuadReproducibleInExtendedPrecision) {
  const auto inst = bench::build_maxquad();
  const Vec<double> x0 = bench::warm_start(inst, 100);
  const auto a = reference_solve(inst, x0);
  const auto b = reference_solve(inst, x0);
  ASSERT_TRUE(a.available);
  EXPECT_EQ(a.manifold, "max{2 3 4 5}");
  EXPECT_LE(to_double(abs(a.f - b.f)), 1e-30);
  const auto stored = bench::load_reference(inst);
  EXPECT_LE(to_double(abs(a.f - stored->f)), 1e-30);
}
