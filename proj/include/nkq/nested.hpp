#pragma once

#include "nkq/kernels.hpp"
#include "nkq/problem.hpp"
#include "nkq/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nkq {

// Unset fields keep the problem's choice; an unset lengthscale means the
// median heuristic.
struct KernelOverride {
  std::optional<KernelFamily> family;
  std::optional<Composition> composition;
  std::optional<double> lengthscale;
};

struct NkqConfig {
  Index N = 32;
  Index T = 32;
  KernelOverride kernel_x;
  KernelOverride kernel_theta;  // applied to every target
  double lambda0_x = 0.1;
  double lambda0_theta = 0.1;
  std::optional<double> smoothness_x;
  std::optional<double> smoothness_theta;
  PointSource point_source = PointSource::IID;
  std::optional<bool> change_of_variable;  // unset: problem default
  // One Stage I lengthscale for all t (median of pooled within-set distances).
  bool pooled_lengthscale = false;
  // Under a change of variable, reuse one base point set for every t so the
  // Stage I weights are solved once.
  bool share_inner_points = false;
  // Standardised values are integrated with their mean taken exactly, i.e.
  // the KQ weights are shifted to sum to one. Off gives the raw rule
  // w = (K + n lambda I)^{-1} mu.
  bool exact_mean = true;
  std::uint64_t seed = 0;
  // Test hook: weights 1/N and 1/T, no standardisation. Reproduces nmc().
  bool uniform_weights = false;

  void validate() const;
};

struct NkqDiagnostics {
  double lambda_x = 0.0;
  std::vector<double> lambda_theta;     // per target
  double mean_lengthscale_x = 0.0;
  std::vector<double> lengthscale_theta;  // per target
  double max_jitter = 0.0;
  double min_rcond = 1.0;
  bool clamped = false;
  Index degenerate_stage1 = 0;  // Stage I value sets with zero spread
};

struct NkqResult {
  double estimate = 0.0;
  Vector target_estimates;
  PointMatrix thetas;               // kernel coordinates
  PointMatrix thetas_native;
  Matrix stage1_values;             // T x outputs, J-hat(theta_t)
  Matrix stage2_inputs;             // T x targets, f(J-hat(theta_t))
  Matrix stage1_weights;            // T x N
  std::vector<Matrix> stage1_gvalues;  // per t: N x outputs
  std::vector<PointMatrix> stage1_points;  // per t, kernel coordinates
  Vector stage1_lengthscales;       // per t (0 under uniform weights)
  Matrix stage2_weights;            // T x targets
  NkqDiagnostics diagnostics;
  std::uint64_t cost = 0;           // g evaluations
};

NkqResult nkq(const NestedProblem &problem, const NkqConfig &config);

// Kernel ridge interpolation of the Stage I values of g-output `output` at
// native-coordinate query thetas, using the first target's Theta kernel.
Vector ckq(const NestedProblem &problem, const NkqConfig &config,
           const PointMatrix &query_thetas, Index output = 0);

}  // namespace nkq
