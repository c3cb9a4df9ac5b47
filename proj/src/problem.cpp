#include "nkq/problem.hpp"

#include "nkq/error.hpp"
#include "nkq/sampling.hpp"

namespace nkq {

StageModel StageModel::direct(MeasureSpec native) {
  StageModel s;
  s.base = native;
  s.native = std::move(native);
  return s;
}

StageModel StageModel::with_change_of_variable(MeasureSpec native, MeasureSpec base,
                                               TransformMap to_native) {
  if (to_native.output_dim(base.dim) != native.dim) {
    fail(ErrorCode::DimensionMismatch,
         "change of variable does not map the base onto the native dimension");
  }
  StageModel s;
  s.native = std::move(native);
  s.base = std::move(base);
  s.to_native = std::move(to_native);
  return s;
}

double NestedProblem::combine_targets(const Vector &target_values) const {
  if (combine) {
    return combine({target_values.data(), static_cast<std::size_t>(target_values.size())});
  }
  return target_values[0];
}

void NestedProblem::validate() const {
  require(dim_x >= 1 && dim_theta >= 1 && outputs >= 1, ErrorCode::InvalidArgument,
          "problem dimensions must be positive");
  require(static_cast<bool>(conditional) && static_cast<bool>(g),
          ErrorCode::InvalidArgument, "problem needs a conditional measure and g");
  require(!targets.empty(), ErrorCode::InvalidArgument, "problem has no targets");
  for (const auto &t : targets) {
    require(static_cast<bool>(t.f), ErrorCode::InvalidArgument, "target without f");
  }
  require(outer.native.dim == dim_theta, ErrorCode::DimensionMismatch,
          "outer measure does not match dim_theta");
}

const MeasureSpec &kernel_measure(const StageModel &stage, bool change_of_variable) {
  return change_of_variable ? stage.base : stage.native;
}

StageDraw draw_stage(const StageModel &stage, Index n, PointSource source,
                     std::uint64_t seed, bool change_of_variable) {
  StageDraw d;
  d.kernel_points = sample_points(kernel_measure(stage, change_of_variable), n, source,
                                  seed, &d.clamped);
  if (change_of_variable) {
    auto mapped = apply_transform(stage.to_native, d.kernel_points);
    d.clamped = d.clamped || mapped.clamped;
    d.native_points = std::move(mapped.points);
  } else {
    d.native_points = d.kernel_points;
  }
  return d;
}

Matrix eval_g(const NestedProblem &problem, const PointMatrix &x, Point theta) {
  require(x.cols() == problem.dim_x, ErrorCode::DimensionMismatch,
          "inner points do not match dim_x");
  Matrix out(x.rows(), problem.outputs);
  std::vector<double> buf(static_cast<std::size_t>(problem.outputs));
  for (Index i = 0; i < x.rows(); ++i) {
    problem.g(row_of(x, i), theta, buf);
    for (Index c = 0; c < problem.outputs; ++c) {
      out(i, c) = buf[static_cast<std::size_t>(c)];
    }
  }
  problem.g_evaluations->fetch_add(static_cast<std::uint64_t>(x.rows()),
                                   std::memory_order_relaxed);
  if (!out.allFinite()) {
    fail(ErrorCode::NonFinite, "g returned a non-finite value");
  }
  return out;
}

}  // namespace nkq
