#include "nkq/baselines.hpp"
#include "nkq/error.hpp"
#include "nkq/nested.hpp"
#include "nkq/problems.hpp"
#include "nkq/sampling.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nkq;

namespace {

NestedProblem linear_synthetic() {
  auto p = synthetic(1);
  p.targets[0].f = [](std::span<const double> z) { return z[0]; };
  p.true_value = 4.0 / 7.0;
  return p;
}

MlConfig levels(std::vector<Index> N, std::vector<Index> T, std::uint64_t seed) {
  MlConfig c;
  c.L = static_cast<Index>(N.size()) - 1;
  c.N_levels = std::move(N);
  c.T_levels = std::move(T);
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Baselines, ConstantIntegrand) {
  auto p = linear_synthetic();
  p.g = [](Point, Point, std::span<double> out) { out[0] = 1.75; };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EXPECT_EQ(nmc(p, 8, 16, PointSource::IID, seed), 1.75);
    EXPECT_EQ(nmc(p, 4, 32, PointSource::QMC, seed), 1.75);
    EXPECT_DOUBLE_EQ(nmc(p, 3, 7, PointSource::IID, seed), 1.75);
  }
}

TEST(Baselines, SingleOuterSampleIsInnerMean) {
  auto p = linear_synthetic();
  p.g = [](Point x, Point, std::span<double> out) { out[0] = x[0]; };
  const std::uint64_t seed = 4;
  const auto theta = draw_stage(p.outer, 1, PointSource::IID, derive_seed(seed, 0), false);
  const auto x = draw_stage(p.conditional(row_of(theta.native_points, 0)), 2, PointSource::IID,
                            derive_seed(seed, 1), false);
  const double expected = (x.native_points(0, 0) + x.native_points(1, 0)) / 2.0;
  EXPECT_NEAR(nmc(p, 2, 1, PointSource::IID, seed), expected, 1e-15);
}

TEST(Baselines, NmcUnbiasedForLinearF) {
  const auto p = linear_synthetic();
  std::vector<double> est;
  for (std::uint64_t r = 0; r < 10000; ++r) est.push_back(nmc(p, 4, 4, PointSource::IID, r));
  EXPECT_LT(std::abs(oracle::mean(est) - 4.0 / 7.0), 3.0 * oracle::std_error(est));
}

TEST(Baselines, MlmcLevelZeroIsNmc) {
  const auto p = finance();
  for (auto src : {PointSource::IID, PointSource::QMC}) {
    const auto r = mlmc(p, levels({16}, {40}, 9), src);
    NmcConfig c;
    c.N = 16;
    c.T = 40;
    c.seed = 9;
    c.point_source = src;
    EXPECT_EQ(r.estimate, nmc(p, c).estimate);
    EXPECT_EQ(r.cost, 640u);
  }
}

TEST(Baselines, MlmcAntitheticCancellationForLinearF) {
  const auto p = linear_synthetic();
  const auto cfg = levels({2, 4, 8, 16}, {64, 16, 4, 2}, 3);
  EXPECT_EQ(mlmc(p, cfg).estimate, nmc(p, 2, 64, PointSource::IID, 3));
}

TEST(Baselines, MlmcRequiresDoubling) {
  const auto p = synthetic(1);
  try {
    mlmc(p, levels({2, 3}, {8, 4}, 1));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  EXPECT_THROW(mlmc(p, levels({2, 2}, {8, 4}, 1)), Error);
  EXPECT_THROW(mlmc(p, levels({2, 4}, {8, 0}, 1)), Error);
}

TEST(Baselines, MlmcTelescoping) {
  // E[sum_l Y_l] = E[f(J_{N_L})]: paired comparison against NMC at the finest N.
  const auto p = synthetic(1);
  std::vector<double> diff;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const double ml = mlmc(p, levels({2, 4, 8}, {64, 32, 16}, r)).estimate;
    const double fine = nmc(p, 8, 64, PointSource::IID, 50000 + r);
    diff.push_back(ml - fine);
  }
  EXPECT_LT(std::abs(oracle::mean(diff)), 3.0 * oracle::std_error(diff));
}

TEST(Baselines, MlkqLevelZeroIsNkq) {
  for (const char *id : {"synthetic", "finance"}) {
    const auto p = make_problem(id);
    NkqConfig base;
    base.lambda0_x = 0.1;
    base.lambda0_theta = 0.1;
    const auto ml = mlkq(p, levels({12}, {20}, 6), base);
    NkqConfig c = base;
    c.N = 12;
    c.T = 20;
    c.seed = 6;
    EXPECT_EQ(ml.estimate, nkq::nkq(p, c).estimate) << id;
  }
}

TEST(Baselines, MlkqPreconditions) {
  const auto p = synthetic(1);  // ratio 2^(1/2)
  NkqConfig base;
  EXPECT_THROW(mlkq(p, levels({8, 8}, {8, 4}, 1), base), Error);
  try {
    mlkq(p, levels({8, 12}, {8, 4}, 1), base);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    EXPECT_NE(std::string(e.what()).find("2^(d_X/s_X)"), std::string::npos);
  }
  EXPECT_NO_THROW(mlkq(p, levels({8, 11}, {8, 4}, 1), base));
}

TEST(Baselines, AllocationRules) {
  const auto a = mlmc_allocation(1e4, 5);
  ASSERT_EQ(a.N_levels.size(), 6u);
  for (Index l = 0; l <= 5; ++l) EXPECT_EQ(a.N_levels[static_cast<std::size_t>(l)], 2 << l);
  EXPECT_NEAR(static_cast<double>(a.cost()), 1e4, 0.05 * 1e4);
  for (std::size_t l = 1; l < a.T_levels.size(); ++l) EXPECT_LE(a.T_levels[l], a.T_levels[l - 1]);

  const auto b = mlkq_allocation(1e4, 3, 1, 2.0, 1, 2.0);
  const double ratio = std::sqrt(2.0);
  for (std::size_t l = 1; l < b.N_levels.size(); ++l) {
    EXPECT_GT(b.N_levels[l], b.N_levels[l - 1]);
    EXPECT_LT(static_cast<double>(b.N_levels[l]), ratio * static_cast<double>(b.N_levels[l - 1]));
    EXPECT_LE(b.T_levels[l], b.T_levels[l - 1]);
  }
  EXPECT_NEAR(static_cast<double>(b.cost()), 1e4, 0.1 * 1e4);
}

TEST(Baselines, NqmcNotWorseOnFinance) {
  const auto p = finance();
  std::vector<double> e_iid, e_qmc;
  for (std::uint64_t r = 0; r < 50; ++r) {
    e_iid.push_back(std::abs(nmc(p, 32, 320, PointSource::IID, r) - 3.077));
    e_qmc.push_back(std::abs(nmc(p, 32, 320, PointSource::QMC, r) - 3.077));
  }
  EXPECT_LE(oracle::mean(e_qmc), oracle::mean(e_iid));
}

TEST(Baselines, MlmcFinanceErrorDecreases) {
  const auto p = finance();
  double prev = INFINITY;
  for (double budget : {1e3, 1e4, 1e5}) {
    const MlConfig base = mlmc_allocation(budget, 5);
    std::vector<double> e;
    for (std::uint64_t r = 0; r < 100; ++r) {
      MlConfig c = base;
      c.seed = r;
      e.push_back(std::abs(mlmc(p, c).estimate - 3.077));
    }
    const double m = oracle::mean(e);
    EXPECT_LT(m, prev) << budget;
    prev = m;
  }
}

TEST(Baselines, Deterministic) {
  const auto p = finance();
  const auto c = mlmc_allocation(2000, 3);
  EXPECT_EQ(mlmc(p, c).estimate, mlmc(p, c).estimate);
  NkqConfig base;
  const auto k = mlkq_allocation(2000, 2, 1, 1.0, 1, 1.0);
  EXPECT_EQ(mlkq(p, k, base).estimate, mlkq(p, k, base).estimate);
  const auto before = p.g_evaluations->load();
  const auto r = mlkq(p, k, base);
  EXPECT_EQ(r.cost, k.cost());
  EXPECT_EQ(p.g_evaluations->load() - before, k.cost());
}
