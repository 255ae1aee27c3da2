#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "saddlelab/errors.hpp"
#include "saddlelab/experiments.hpp"

using namespace saddlelab;

namespace {

Trajectory make_trajectory(std::vector<Point> points, std::vector<double> steps, Termination term) {
  Trajectory t;
  t.points = std::move(points);
  t.steps = std::move(steps);
  t.termination = term;
  t.grad_norms.assign(t.points.size(), 0.0);
  t.shrink_counts.assign(t.steps.size(), 0);
  t.initial_step = t.steps.empty() ? 1.0 : t.steps.front();
  return t;
}

CostModel saddle2d() {
  CostParams p;
  p.matrix = Eigen::Vector2d(1, -1).asDiagonal();
  return builtin_cost("quadratic", p, ManifoldSpec::euclidean(2));
}

ExperimentPlan interp2d_plan(double alpha, long runs) {
  ExperimentPlan plan;
  plan.manifold = ManifoldSpec::euclidean(2);
  plan.cost.name = "interp2d";
  plan.algorithm.kind = AlgorithmKind::FixedStep;
  plan.algorithm.alpha = alpha;
  plan.sampler.kind = SamplerKind::UniformAnnulus;
  plan.sampler.r_lo = 2.1;
  plan.sampler.r_hi = 3.0;
  plan.num_runs = runs;
  plan.seed = 7;
  plan.stop.max_iters = 2000;
  return plan;
}

bool same_record(const RunRecord& a, const RunRecord& b) {
  return a.index == b.index && a.seed == b.seed && a.x0 == b.x0 &&
         a.outcome.classification == b.outcome.classification && a.outcome.limit_point == b.outcome.limit_point &&
         a.outcome.iterations == b.outcome.iterations && a.outcome.final_step == b.outcome.final_step &&
         a.outcome.stabilization_index == b.outcome.stabilization_index && a.termination == b.termination &&
         a.error == b.error;
}

}  // namespace

TEST(Wilson, MatchesTextbookFormula) {
  const double z = 1.959963984540054;
  for (long n : {1L, 10L, 1000L}) {
    for (long k = 1; k < n; k += std::max(1L, n / 7)) {
      const double p = static_cast<double>(k) / n;
      const double centre = (p + z * z / (2 * n)) / (1 + z * z / n);
      const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n)) / (1 + z * z / n);
      const WilsonInterval w = wilson_interval(k, n);
      EXPECT_NEAR(w.lo, centre - half, 1e-14);
      EXPECT_NEAR(w.hi, centre + half, 1e-14);
    }
  }
}

TEST(Wilson, EndpointsAreExactAtExtremes) {
  EXPECT_EQ(wilson_interval(0, 1000).lo, 0.0);
  EXPECT_NEAR(wilson_interval(0, 1000).hi, 0.003826, 1e-6);
  EXPECT_EQ(wilson_interval(1000, 1000).hi, 1.0);
  EXPECT_NEAR(wilson_interval(1000, 1000).lo, 1.0 - 0.003826, 1e-6);
}

TEST(ClassifyLimit, EscapedAndUndecided) {
  const CostModel c = saddle2d();
  const auto m = ManifoldSpec::euclidean(2);
  const Trajectory esc = make_trajectory({Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 2e6)}, {1.0}, Termination::Escaped);
  EXPECT_EQ(classify_limit(esc, c, m).classification, Classification::Escaped);
  EXPECT_FALSE(classify_limit(esc, c, m).limit_point.has_value());

  std::vector<Point> moving;
  for (int t = 0; t < 30; ++t) moving.push_back(Eigen::Vector2d(0, 1e-3 * t));
  const Trajectory und = make_trajectory(moving, std::vector<double>(29, 0.5), Termination::MaxIters);
  EXPECT_EQ(classify_limit(und, c, m).classification, Classification::Undecided);

  const Trajectory short_run = make_trajectory({Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)}, {0.5}, Termination::MaxIters);
  EXPECT_EQ(classify_limit(short_run, c, m).classification, Classification::Undecided);
}

TEST(ClassifyLimit, ConvergedRunsUseCriticalPointLabels) {
  const CostModel c = saddle2d();
  const auto m = ManifoldSpec::euclidean(2);
  const Trajectory at_saddle =
      make_trajectory({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0)}, {1.0}, Termination::GradTol);
  const RunOutcome o = classify_limit(at_saddle, c, m);
  EXPECT_EQ(o.classification, Classification::ConvergedToStrictSaddle);
  EXPECT_EQ(o.limit_point, Point(Eigen::Vector2d(0, 0)));
  EXPECT_EQ(o.iterations, 1);
  EXPECT_EQ(o.final_step, 1.0);

  std::vector<Point> settled(25, Eigen::Vector2d(1e-12, 0));
  const Trajectory window = make_trajectory(settled, std::vector<double>(24, 0.5), Termination::MaxIters);
  EXPECT_EQ(classify_limit(window, c, m).classification, Classification::ConvergedToStrictSaddle);

  CostParams p;
  p.matrix = Eigen::Vector2d(1, 2).asDiagonal();
  const CostModel bowl = builtin_cost("quadratic", p, m);
  EXPECT_EQ(classify_limit(at_saddle, bowl, m).classification, Classification::ConvergedToOther);

  const Trajectory not_critical =
      make_trajectory({Eigen::Vector2d(1, 0), Eigen::Vector2d(0.5, 0)}, {0.5}, Termination::GradTol);
  EXPECT_EQ(classify_limit(not_critical, c, m).classification, Classification::ConvergedToOther);
}

TEST(StabilizationAudit, FindsStartOfConstantTail) {
  std::vector<double> steps = {1.0, 0.5, 0.5, 0.25};
  for (int i = 0; i < 30; ++i) steps.push_back(0.125);
  const Trajectory long_tail = make_trajectory(std::vector<Point>(steps.size() + 1, Vec::Zero(1)), steps, Termination::MaxIters);
  const StabilizationAudit a = step_stabilization_audit(long_tail);
  EXPECT_TRUE(a.stabilized);
  EXPECT_EQ(a.index, 4);
  EXPECT_EQ(a.final_alpha, 0.125);

  const std::vector<double> short_steps = {1.0, 0.5, 0.25, 0.25};
  const Trajectory short_tail = make_trajectory(std::vector<Point>(5, Vec::Zero(1)), short_steps, Termination::MaxIters);
  EXPECT_FALSE(step_stabilization_audit(short_tail).stabilized);
  const Trajectory converged = make_trajectory(std::vector<Point>(5, Vec::Zero(1)), short_steps, Termination::GradTol);
  EXPECT_TRUE(step_stabilization_audit(converged).stabilized);
  EXPECT_EQ(step_stabilization_audit(converged).index, 2);

  Trajectory empty = make_trajectory({Vec::Zero(1)}, {}, Termination::GradTol);
  empty.initial_step = 0.3;
  const StabilizationAudit e = step_stabilization_audit(empty);
  EXPECT_TRUE(e.stabilized);
  EXPECT_EQ(e.index, 0);
  EXPECT_EQ(e.final_alpha, 0.3);
}

TEST(Seeds, DependOnlyOnSeedAndIndex) {
  EXPECT_EQ(run_seed(7, 3), run_seed(7, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s : {0ULL, 1ULL, 7ULL}) {
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(run_seed(s, i));
  }
  EXPECT_EQ(seen.size(), 3000u);
}

TEST(Sampler, RespectsSupport) {
  std::mt19937_64 rng(51);
  SamplerSpec annulus{SamplerKind::UniformAnnulus, 1.0, 2.1, 3.0, {}};
  double mean_r2 = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double r = sample_initial_point(annulus, ManifoldSpec::euclidean(2), k, rng).norm();
    EXPECT_GE(r, 2.1);
    EXPECT_LE(r, 3.0);
    mean_r2 += r * r / n;
  }
  // Area-uniform: E[r^2] = (r_lo^2 + r_hi^2) / 2.
  EXPECT_NEAR(mean_r2, 0.5 * (2.1 * 2.1 + 9.0), 0.03);

  SamplerSpec sphere{SamplerKind::UniformSphere, 1.0, 0.0, 1.0, {}};
  for (int k = 0; k < 100; ++k) {
    EXPECT_NEAR(sample_initial_point(sphere, ManifoldSpec::sphere(2), k, rng).norm(), 1.0, 1e-15);
  }
  SamplerSpec listed{SamplerKind::Listed, 1.0, 0.0, 1.0, {Vec::Constant(1, 0.1), Vec::Constant(1, 0.3)}};
  EXPECT_EQ(sample_initial_point(listed, ManifoldSpec::euclidean(1), 3, rng)(0), 0.3);
  EXPECT_EQ(sample_initial_point(listed, ManifoldSpec::euclidean(1), 4, rng)(0), 0.1);
}

TEST(MonteCarlo, UnitStepInterp2dCollapsesOntoSaddle) {
  const MonteCarloResult r = monte_carlo_avoidance(interp2d_plan(1.0, 200));
  EXPECT_EQ(r.report.count_strict_saddle, 200);
  EXPECT_EQ(r.report.fraction_to_strict_saddle, 1.0);
  for (const RunRecord& rec : r.report.runs) {
    EXPECT_EQ(rec.outcome.iterations, 1);
    EXPECT_LE(rec.outcome.limit_point->norm(), 1e-12);
  }
}

TEST(MonteCarlo, CountsAreConservedAndWorkerCountIrrelevant) {
  const ExperimentPlan plan = interp2d_plan(0.9, 64);
  const MonteCarloResult one = monte_carlo_avoidance(plan, {1, false});
  const MonteCarloResult many = monte_carlo_avoidance(plan, {5, false});
  const AvoidanceReport& r = one.report;
  EXPECT_EQ(r.count_strict_saddle + r.count_other + r.count_escaped + r.count_undecided, r.num_runs);
  ASSERT_EQ(one.report.runs.size(), many.report.runs.size());
  for (size_t i = 0; i < r.runs.size(); ++i) {
    EXPECT_TRUE(same_record(one.report.runs[i], many.report.runs[i])) << i;
    EXPECT_EQ(r.runs[i].index, static_cast<long>(i));
    EXPECT_EQ(r.runs[i].seed, run_seed(plan.seed, i));
  }
  EXPECT_EQ(r.count_strict_saddle, 0);
}

TEST(MonteCarlo, FailingRunsAreRecordedNotFatal) {
  ExperimentPlan plan;
  plan.manifold = ManifoldSpec::euclidean(2);
  plan.cost.name = "quadratic";
  plan.cost.params.matrix = Eigen::Vector2d(1, -1).asDiagonal();
  plan.algorithm.kind = AlgorithmKind::ProximalPoint;
  plan.algorithm.alpha = 0.5;
  plan.algorithm.inner.max_iters = 1;
  plan.num_runs = 5;
  const MonteCarloResult r = monte_carlo_avoidance(plan);
  EXPECT_EQ(r.report.num_errors, 5);
  EXPECT_EQ(r.report.count_undecided, 5);
  for (const RunRecord& rec : r.report.runs) {
    ASSERT_TRUE(rec.error.has_value());
    EXPECT_NE(rec.error->find("iteration cap"), std::string::npos);
  }
}

TEST(MonteCarlo, LineSearchRunsReportStabilization) {
  ExperimentPlan plan = interp2d_plan(1.0, 20);
  plan.algorithm.kind = AlgorithmKind::StabilizedArmijo;
  plan.algorithm.line_search.alpha_bar = 1.0;
  const MonteCarloResult r = monte_carlo_avoidance(plan, {0, true});
  ASSERT_EQ(r.trajectories.size(), 20u);
  for (size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(r.report.runs[i].outcome.classification, Classification::ConvergedToStrictSaddle);
    EXPECT_EQ(r.report.runs[i].outcome.stabilization_index, 0);
    EXPECT_EQ(r.trajectories[i].steps, std::vector<double>{1.0});
  }
}

TEST(Plan, ValidationRejectsInconsistentPlans) {
  ExperimentPlan plan = interp2d_plan(1.0, 10);
  plan.num_runs = 0;
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = interp2d_plan(1.0, 10);
  plan.sampler.r_lo = 4.0;
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = interp2d_plan(1.0, 10);
  plan.sampler.kind = SamplerKind::UniformSphere;
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = interp2d_plan(1.0, 10);
  plan.cost.name = "no_such_cost";
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = interp2d_plan(1.0, 10);
  plan.algorithm.kind = AlgorithmKind::ProximalPoint;
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = interp2d_plan(1.0, 10);
  plan.sampler.kind = SamplerKind::Listed;
  plan.sampler.points = {Vec::Zero(3)};
  EXPECT_THROW(plan.validate(), ConfigError);
}
