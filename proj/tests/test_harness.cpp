#include "nkq/error.hpp"
#include "nkq/harness.hpp"
#include "nkq/problems.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

using namespace nkq;

namespace {

SweepSpec nmc_spec(Index replicates) {
  SweepSpec s;
  s.problem = "synthetic";
  s.estimators = {"nmc"};
  s.budgets = {BudgetPoint::delta(0.1)};
  s.replicates = replicates;
  s.seed = 42;
  return s;
}

}  // namespace

TEST(Harness, DeltaMappings) {
  const auto p = synthetic(1);  // rates 1/2, 1/2
  const auto a = plan_cell(p, EstimatorKind::NKQ, BudgetPoint::delta(0.01), 5);
  EXPECT_EQ(a.N, 10);
  EXPECT_EQ(a.T, 10);
  const auto b = plan_cell(p, EstimatorKind::NMC, BudgetPoint::delta(0.1), 5);
  EXPECT_EQ(b.N, 10);
  EXPECT_EQ(b.T, 100);
  const auto c = plan_cell(p, EstimatorKind::NKQ, BudgetPoint::cost(1e4), 5);
  EXPECT_EQ(c.N * c.T, 10000);
  const auto d = plan_cell(p, EstimatorKind::NMC, BudgetPoint::cost(1e6), 5);
  EXPECT_EQ(d.N, 100);
  EXPECT_EQ(d.T, 10000);
  const auto e = plan_cell(p, EstimatorKind::MLMC, BudgetPoint::cost(1e4), 5);
  EXPECT_EQ(e.levels.L, 5);
  const auto f = plan_cell(p, EstimatorKind::NKQ, BudgetPoint::explicit_cell(7, 9), 5);
  EXPECT_EQ(f.N, 7);
  EXPECT_EQ(f.T, 9);
  EXPECT_THROW(plan_cell(p, EstimatorKind::MLKQ, BudgetPoint::explicit_cell(7, 9), 5), Error);
  EXPECT_THROW(plan_cell(p, EstimatorKind::NKQ, BudgetPoint::cost(-1.0), 5), Error);
  const auto fin = finance();  // rates 1, 1
  const auto g = plan_cell(fin, EstimatorKind::NKQ, BudgetPoint::delta(0.01), 5);
  EXPECT_EQ(g.N, 100);
  EXPECT_EQ(g.T, 100);
}

TEST(Harness, SingleCellDeterminism) {
  const auto a = run_sweep(nmc_spec(2));
  ASSERT_EQ(a.records.size(), 2u);
  EXPECT_TRUE(a.failures.empty());
  EXPECT_NE(a.records[0].seed, a.records[1].seed);
  const auto b = run_sweep(nmc_spec(2));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.records[i].estimate, b.records[i].estimate);
    EXPECT_EQ(a.records[i].seed, b.records[i].seed);
  }
  EXPECT_EQ(a.records[0].estimator, "nmc");
  EXPECT_EQ(a.records[0].cost, 1000u);
}

TEST(Harness, WorkerCountDoesNotChangeResults) {
  SweepSpec s = nmc_spec(6);
  s.estimators = {"nmc", "nkq", "mlmc"};
  s.budgets = {BudgetPoint::cost(500), BudgetPoint::cost(2000)};
  const auto a = run_sweep(s);
  s.workers = 4;
  const auto b = run_sweep(s);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].estimate, b.records[i].estimate);
    EXPECT_EQ(a.records[i].estimator, b.records[i].estimator);
    EXPECT_EQ(a.records[i].replicate, b.records[i].replicate);
  }
  std::set<std::uint64_t> seeds;
  for (const auto &r : a.records) seeds.insert(r.seed);
  EXPECT_EQ(seeds.size(), a.records.size());
}

TEST(Harness, Validation) {
  SweepSpec s = nmc_spec(1);
  s.estimators.clear();
  try {
    run_sweep(s);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
  s = nmc_spec(0);
  EXPECT_THROW(run_sweep(s), Error);
  s = nmc_spec(1);
  s.budgets.clear();
  EXPECT_THROW(run_sweep(s), Error);
  s = nmc_spec(1);
  s.estimators = {"bogus"};
  EXPECT_THROW(run_sweep(s), Error);
}

TEST(Harness, FailingCellDoesNotStopSweep) {
  SweepSpec s = nmc_spec(2);
  s.estimators = {"mlmc", "nmc"};
  s.budgets = {BudgetPoint::explicit_cell(4, 4)};
  const auto r = run_sweep(s);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("mlmc"), std::string::npos);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].estimator, "nmc");

  SweepSpec f;
  f.problem = "finance";
  f.estimators = {"nkq"};
  f.budgets = {BudgetPoint::explicit_cell(8, 8)};
  f.nkq_template.change_of_variable = false;  // no KME path
  const auto g = run_sweep(f);
  EXPECT_TRUE(g.records.empty());
  ASSERT_EQ(g.failures.size(), 1u);
  EXPECT_NE(g.failures[0].find("kernel mean"), std::string::npos);
}

TEST(Harness, CostAudit) {
  SweepSpec s;
  s.problem = "finance";
  s.estimators = {"nmc", "nkq", "mlmc", "mlkq"};
  s.budgets = {BudgetPoint::cost(3000)};
  s.levels = 3;
  const auto p = make_problem("finance");
  for (const auto &name : s.estimators) {
    const auto kind = parse_estimator(name);
    const auto plan = plan_cell(p, kind, s.budgets[0], s.levels);
    const auto before = p.g_evaluations->load();
    const auto rec = run_single(p, kind, plan, s, 0, 77);
    EXPECT_EQ(p.g_evaluations->load() - before, rec.cost) << name;
    if (kind == EstimatorKind::NKQ || kind == EstimatorKind::NMC) {
      EXPECT_EQ(rec.cost, static_cast<std::uint64_t>(plan.N * plan.T));
    } else {
      EXPECT_EQ(rec.cost, plan.levels.cost());
      EXPECT_EQ(rec.L, 3);
    }
    EXPECT_NEAR(rec.abs_error, std::abs(rec.estimate - 3.077), 1e-12);
  }
}

TEST(Harness, SeedAudit) {
  SweepSpec s = nmc_spec(3);
  s.estimators = {"nkq", "mlkq"};
  s.budgets = {BudgetPoint::cost(2000)};
  const auto r = run_sweep(s);
  const auto p = make_problem("synthetic");
  for (const auto &rec : r.records) {
    const auto kind = parse_estimator(rec.estimator);
    const auto plan = plan_cell(p, kind, s.budgets[0], s.levels);
    EXPECT_EQ(run_single(p, kind, plan, s, rec.replicate, rec.seed).estimate, rec.estimate);
  }
}

TEST(Harness, NoTruthGivesNan) {
  SweepSpec s;
  s.problem = "gp_lookahead";
  s.estimators = {"nmc"};
  s.budgets = {BudgetPoint::explicit_cell(4, 4)};
  const auto r = run_sweep(s);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(std::isnan(r.records[0].abs_error));
}

TEST(Harness, CsvRoundTrip) {
  SweepSpec s = nmc_spec(3);
  s.estimators = {"nmc", "nkq"};
  s.budgets = {BudgetPoint::delta(0.2), BudgetPoint::delta(0.1)};
  auto recs = run_sweep(s).records;
  recs[0].abs_error = std::numeric_limits<double>::quiet_NaN();
  std::stringstream ss;
  write_csv(ss, recs);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i == 0) {
      EXPECT_TRUE(std::isnan(back[0].abs_error));
      auto a = recs[0], b = back[0];
      a.abs_error = b.abs_error = 0.0;
      EXPECT_EQ(a, b);
    } else {
      EXPECT_EQ(back[i], recs[i]);
    }
  }
  std::stringstream header;
  write_csv(header, {});
  EXPECT_EQ(header.str(), std::string(kCsvHeader) + "\n");
  std::stringstream bad("problem,estimator\n");
  EXPECT_THROW(read_csv(bad), Error);
}

TEST(Harness, LogLogFit) {
  const auto a = fit_loglog_slope({1.0, 10.0}, {1.0, 0.1});
  EXPECT_NEAR(a.slope, -1.0, 1e-15);
  EXPECT_NEAR(a.rate, 1.0, 1e-15);
  const auto b = fit_loglog_slope({1.0, 10.0, 100.0}, {2.0, 2.0, 2.0});
  EXPECT_EQ(b.slope, 0.0);
  EXPECT_EQ(b.rate, 0.0);
  const std::vector<double> c = {3.0, 30.0, 700.0, 5000.0}, e = {0.4, 0.09, 0.01, 0.004};
  EXPECT_NEAR(fit_loglog_slope(c, e).slope, oracle::loglog_slope(c, e), 1e-13);
  EXPECT_THROW(fit_loglog_slope({1.0, 0.0}, {1.0, 1.0}), Error);
  EXPECT_THROW(fit_loglog_slope({1.0, 2.0}, {1.0, -1.0}), Error);
  EXPECT_THROW(fit_loglog_slope({5.0, 5.0}, {1.0, 2.0}), Error);
}

TEST(Harness, Quantiles) {
  EXPECT_DOUBLE_EQ(quantile({4, 2, 3, 1}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.25), 7.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 1.0), 4.0);
}

TEST(Harness, SummaryGroupsInOrder) {
  std::vector<RunRecord> recs;
  for (int i = 1; i <= 4; ++i) {
    RunRecord r;
    r.problem = "synthetic";
    r.estimator = "nkq";
    r.point_source = "iid";
    r.N = r.T = 8;
    r.cost = 64;
    r.abs_error = i;
    r.estimate = i;
    r.wall_millis = 2.0 * i;
    recs.push_back(r);
  }
  RunRecord single = recs[0];
  single.estimator = "nmc";
  single.abs_error = 0.5;
  recs.insert(recs.begin(), single);
  const auto s = summarize(recs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].estimator, "nmc");
  EXPECT_EQ(s[0].mean_error, 0.5);
  EXPECT_EQ(s[0].q25, 0.5);
  EXPECT_EQ(s[0].q75, 0.5);
  EXPECT_EQ(s[1].count, 4);
  EXPECT_DOUBLE_EQ(s[1].mean_error, 2.5);
  EXPECT_DOUBLE_EQ(s[1].q25, 1.75);
  EXPECT_DOUBLE_EQ(s[1].q75, 3.25);
  EXPECT_DOUBLE_EQ(s[1].mean_wall_millis, 5.0);
  EXPECT_DOUBLE_EQ(s[1].mean_cost, 64.0);
}

TEST(Harness, SummaryReproducibleAcrossRuns) {
  SweepSpec s = nmc_spec(1000);
  s.budgets = {BudgetPoint::explicit_cell(4, 16)};
  const auto a = summarize(run_sweep(s).records);
  s.seed = 43;
  const auto b = summarize(run_sweep(s).records);
  ASSERT_EQ(a.size(), 1u);
  const double se = std::hypot(a[0].std_error, b[0].std_error);
  EXPECT_LT(std::abs(a[0].mean_error - b[0].mean_error), 3.0 * se);
}

TEST(Harness, TuneUsesTruthOrLeaveOneOut) {
  SweepSpec s;
  s.problem = "synthetic";
  s.estimators = {"nkq"};
  s.budgets = {BudgetPoint::explicit_cell(16, 16)};
  s.replicates = 2;
  const auto t = tune_lambda0(s);
  EXPECT_TRUE(t.used_truth);
  EXPECT_EQ(t.scores.size(), 9u);
  EXPECT_EQ(t.records.size(), 18u);
  const auto best = std::min_element(t.scores.begin(), t.scores.end()) - t.scores.begin();
  EXPECT_EQ(t.lambda0_x, t.grid_x[static_cast<std::size_t>(best / 3)]);
  EXPECT_EQ(t.lambda0_theta, t.grid_theta[static_cast<std::size_t>(best % 3)]);

  s.problem = "gp_lookahead";
  const auto g = tune_lambda0(s);
  EXPECT_FALSE(g.used_truth);
  for (double v : g.scores) EXPECT_TRUE(std::isfinite(v));
}
