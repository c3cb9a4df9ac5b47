#pragma once

#include "nkq/kernels.hpp"
#include "nkq/measure.hpp"
#include "nkq/transform.hpp"
#include "nkq/types.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nkq {

// One integration stage. Samples live in native coordinates; under a change
// of variable the quadrature works on `base` and g sees to_native(u).
struct StageModel {
  MeasureSpec native;
  MeasureSpec base;
  TransformMap to_native;

  // No change of variable available: base = native, identity map.
  static StageModel direct(MeasureSpec native);
  static StageModel with_change_of_variable(MeasureSpec native, MeasureSpec base,
                                            TransformMap to_native);
};

// A nested expectation component: F = f(J) where J collects the inner
// expectations of every g output. Each target gets its own outer rule.
struct Target {
  std::string name;
  std::function<double(std::span<const double> j)> f;
  KernelSpec kernel_theta;  // family and composition; lengthscale is chosen per run
};

struct NestedProblem {
  std::string id;
  Index dim_x = 1;
  Index dim_theta = 1;
  Index outputs = 1;

  StageModel outer;
  // P_theta for a native-coordinate theta. The base measure must not depend
  // on theta.
  std::function<StageModel(Point theta)> conditional;
  // Writes `outputs` values of g(x, theta), both native.
  std::function<void(Point x, Point theta, std::span<double> out)> g;

  std::vector<Target> targets;
  // Final estimate from per-target estimates; defaults to the first one.
  std::function<double(std::span<const double> target_values)> combine;

  KernelSpec kernel_x;  // family and composition for Stage I
  // Smoothness used by the regularisation schedules; unset means the
  // Sobolev order of the kernel in use.
  std::optional<double> smoothness_x;
  std::optional<double> smoothness_theta;
  // Harness allocation N = ceil(delta^-rate_x), T = ceil(delta^-rate_theta).
  double alloc_rate_x = 1.0;
  double alloc_rate_theta = 1.0;

  bool default_change_of_variable = false;
  std::optional<double> true_value;
  std::string truth_provenance;

  // Total g evaluations across all copies of this problem.
  std::shared_ptr<std::atomic<std::uint64_t>> g_evaluations =
      std::make_shared<std::atomic<std::uint64_t>>(0);

  double combine_targets(const Vector &target_values) const;
  void validate() const;
};

const MeasureSpec &kernel_measure(const StageModel &stage, bool change_of_variable);

struct StageDraw {
  PointMatrix kernel_points;  // where the kernels and KME live
  PointMatrix native_points;  // where g is evaluated
  bool clamped = false;
};

StageDraw draw_stage(const StageModel &stage, Index n, PointSource source,
                     std::uint64_t seed, bool change_of_variable);

// rows(x) x outputs matrix of g(x_i, theta); bumps the evaluation counter.
Matrix eval_g(const NestedProblem &problem, const PointMatrix &x, Point theta);

}  // namespace nkq
