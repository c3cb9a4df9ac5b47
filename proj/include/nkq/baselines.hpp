#pragma once

#include "nkq/nested.hpp"
#include "nkq/problem.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nkq {

struct NmcConfig {
  Index N = 32;
  Index T = 32;
  PointSource point_source = PointSource::IID;  // QMC gives NQMC
  std::optional<bool> change_of_variable;        // only changes how points are drawn
  std::uint64_t seed = 0;
};

struct EstimateResult {
  double estimate = 0.0;
  Vector target_estimates;
  std::uint64_t cost = 0;
};

// (1/T) sum_t f((1/N) sum_n g(x_n^(t), theta_t)). Draws points exactly like
// nkq() with the same seed.
EstimateResult nmc(const NestedProblem &problem, const NmcConfig &config);
double nmc(const NestedProblem &problem, Index N, Index T, PointSource source,
           std::uint64_t seed);

struct MlConfig {
  Index L = 0;  // finest level; L + 1 levels in total
  std::vector<Index> N_levels;
  std::vector<Index> T_levels;
  std::uint64_t seed = 0;

  // Shared checks: L + 1 entries, N strictly increasing, T >= 1.
  void validate() const;
  std::uint64_t cost() const;
};

// Antithetic MLMC. Level 0 is nmc(N_0, T_0); level l >= 1 averages
// f(J_fine) - (f(J_a) + f(J_b)) / 2 over T_l outer samples, J_a and J_b being
// the two halves of N_l = 2 N_{l-1} inner samples.
EstimateResult mlmc(const NestedProblem &problem, const MlConfig &config,
                    PointSource source = PointSource::IID,
                    std::optional<bool> change_of_variable = {});

// Multilevel NKQ. Level 0 is nkq(N_0, T_0) with `base` settings; level l >= 1
// applies a Stage II KQ rule to F(N_l) - F(N_{l-1}) where the coarse rule
// uses the first N_{l-1} of the N_l inner points, with
// lambda_theta = lambda0_theta * T_l^(-2 s / (2 s + d)).
// Requires N_{l-1} < N_l < 2^(d_X/s_X) N_{l-1}.
EstimateResult mlkq(const NestedProblem &problem, const MlConfig &config,
                    const NkqConfig &base);

// N_l = N_0 2^l, T_l = ceil(T_0 2^(-2l)) with T_0 scaled so the total cost
// is close to `budget`.
MlConfig mlmc_allocation(double budget, Index L, Index N0 = 2);

// N_l = ceil(2^(d_X/s_X) N_{l-1}) - 1 (kept strictly inside the ratio bound),
// T_l proportional to 2^(-(2 s_T + d_T) l / s_T), N_0 from
// delta = budget^(-1 / (1 + d_X/(2 s_X) + d_T/(2 s_T))), T_0 fitted to budget.
MlConfig mlkq_allocation(double budget, Index L, Index d_x, double s_x, Index d_theta,
                         double s_theta);

}  // namespace nkq
