#include "nkq/nested.hpp"

#include "nkq/sampling.hpp"
#include "stages.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nkq {

namespace detail {

namespace {

KernelSpec apply_override(KernelSpec spec, const KernelOverride &o) {
  if (o.family) spec.family = *o.family;
  if (o.composition) spec.composition = *o.composition;
  spec.amplitude = 1.0;
  spec.lengthscale = Vector::Ones(1);
  return spec;
}

}  // namespace

ResolvedSetup resolve(const NestedProblem &problem, const NkqConfig &config) {
  ResolvedSetup r;
  r.kernel_x = apply_override(problem.kernel_x, config.kernel_x);
  r.s_x = config.smoothness_x.value_or(problem.smoothness_x.value_or(
      sobolev_order(r.kernel_x.family, problem.dim_x)));
  for (const auto &t : problem.targets) {
    KernelSpec k = apply_override(t.kernel_theta, config.kernel_theta);
    r.s_theta.push_back(config.smoothness_theta.value_or(problem.smoothness_theta.value_or(
        sobolev_order(k.family, problem.dim_theta))));
    r.kernel_theta.push_back(k);
  }
  r.change_of_variable =
      config.change_of_variable.value_or(problem.default_change_of_variable);
  return r;
}

double choose_lengthscale(const PointMatrix &points, std::optional<double> fixed) {
  if (fixed) return *fixed;
  if (points.rows() < 2) return 1.0;
  return median_heuristic(points);
}

double pooled_median(const std::vector<PointMatrix> &sets) {
  std::vector<double> dist;
  for (const auto &p : sets) {
    for (Index i = 0; i < p.rows(); ++i)
      for (Index j = i + 1; j < p.rows(); ++j) dist.push_back((p.row(i) - p.row(j)).norm());
  }
  if (dist.empty()) return 1.0;
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double median = *mid;
  if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
  if (!(median > 0.0)) {
    fail(ErrorCode::DegenerateLengthscale, "pooled median pairwise distance is zero");
  }
  return median;
}

double fold_back(const Vector &weights, const Vector &y, bool *degenerate) {
  const Standardization s = standardize(y);
  if (degenerate != nullptr) *degenerate = s.degenerate;
  return s.std * kq_estimate(weights, s.values) + s.mean * weights.sum();
}

Vector uniform_weights(Index n) {
  return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

StageKq stage_kq(KernelSpec kernel, double lengthscale, const MeasureSpec &measure,
                 const PointMatrix &points, const Matrix &values, double lambda,
                 bool exact_mean) {
  kernel.lengthscale = Vector::Constant(1, lengthscale);
  StageKq out;
  out.lengthscale = lengthscale;
  const Vector mu = kme(kernel, measure, points);
  const RegularizedSolver solver(gram(kernel, points), lambda, kernel.amplitude);
  out.weights = solver.solve(mu);
  if (exact_mean) {
    out.weights.array() += (1.0 - out.weights.sum()) / static_cast<double>(points.rows());
  }
  out.jitter = solver.jitter();
  out.rcond = solver.rcond();
  out.values.resize(values.cols());
  for (Index c = 0; c < values.cols(); ++c) {
    bool deg = false;
    out.values[c] = fold_back(out.weights, values.col(c), &deg);
    if (deg) ++out.degenerate;
  }
  return out;
}

}  // namespace detail

void NkqConfig::validate() const {
  require(N >= 1 && T >= 1, ErrorCode::InvalidArgument, "N and T must be >= 1");
  require(std::isfinite(lambda0_x) && lambda0_x >= 0.0 && std::isfinite(lambda0_theta) &&
              lambda0_theta >= 0.0,
          ErrorCode::InvalidArgument, "lambda0 values must be finite and nonnegative");
  for (const auto *o : {&kernel_x, &kernel_theta}) {
    if (o->lengthscale) {
      require(std::isfinite(*o->lengthscale) && *o->lengthscale > 0.0,
              ErrorCode::InvalidArgument, "fixed lengthscale must be positive");
    }
  }
}

NkqResult nkq(const NestedProblem &problem, const NkqConfig &config) {
  problem.validate();
  config.validate();
  const auto setup = detail::resolve(problem, config);
  const bool cov = setup.change_of_variable;
  if (config.share_inner_points && !cov) {
    fail(ErrorCode::InvalidArgument, "share_inner_points needs the change of variable");
  }
  const Index N = config.N;
  const Index T = config.T;
  const Index n_targets = static_cast<Index>(problem.targets.size());

  NkqResult res;
  auto &diag = res.diagnostics;
  const StageDraw outer = draw_stage(problem.outer, T, config.point_source,
                                     derive_seed(config.seed, 0), cov);
  diag.clamped = outer.clamped;
  res.thetas = outer.kernel_points;
  res.thetas_native = outer.native_points;

  diag.lambda_x = config.uniform_weights
                      ? 0.0
                      : reg_schedule(config.lambda0_x, N, setup.s_x, problem.dim_x);

  auto draw_inner = [&](const StageModel &stage, Index t) {
    return draw_stage(stage, N, config.point_source,
                      derive_seed(config.seed, static_cast<std::uint64_t>(t) + 1), cov);
  };

  std::optional<double> fixed_ls = config.kernel_x.lengthscale;
  if (!fixed_ls && config.pooled_lengthscale && !config.uniform_weights) {
    std::vector<PointMatrix> sets;
    const Index k = config.share_inner_points ? 1 : std::min<Index>(T, 16);
    for (Index t = 0; t < k; ++t) {
      sets.push_back(
          draw_inner(problem.conditional(row_of(outer.native_points, t)), t).kernel_points);
    }
    fixed_ls = detail::pooled_median(sets);
  }

  res.stage1_values.resize(T, problem.outputs);
  res.stage2_inputs.resize(T, n_targets);
  res.stage1_weights.resize(T, N);
  res.stage1_gvalues.reserve(static_cast<std::size_t>(T));
  res.stage1_points.reserve(static_cast<std::size_t>(T));
  res.stage1_lengthscales = Vector::Zero(T);
  double last_ls = 0.0;

  PointMatrix shared_points;
  Vector shared_weights;
  double ls_sum = 0.0;
  Index ls_count = 0;

  detail::tagged("stage I", [&] {
    for (Index t = 0; t < T; ++t) {
      const Point theta = row_of(outer.native_points, t);
      const StageModel stage = problem.conditional(theta);
      StageDraw draw;
      if (config.share_inner_points) {
        if (t == 0) {
          draw = draw_inner(stage, 0);
          shared_points = draw.kernel_points;
        } else {
          draw.kernel_points = shared_points;
          auto mapped = apply_transform(stage.to_native, shared_points);
          draw.native_points = std::move(mapped.points);
          draw.clamped = mapped.clamped;
        }
      } else {
        draw = draw_inner(stage, t);
      }
      diag.clamped = diag.clamped || draw.clamped;
      const Matrix G = eval_g(problem, draw.native_points, theta);

      Vector w;
      std::vector<double> j(static_cast<std::size_t>(problem.outputs));
      if (config.uniform_weights) {
        w = detail::uniform_weights(N);
        for (Index c = 0; c < problem.outputs; ++c) {
          j[static_cast<std::size_t>(c)] = kq_estimate(w, G.col(c));
        }
      } else if (config.share_inner_points && t > 0) {
        w = shared_weights;
        for (Index c = 0; c < problem.outputs; ++c) {
          bool deg = false;
          j[static_cast<std::size_t>(c)] = detail::fold_back(w, G.col(c), &deg);
          if (deg) ++diag.degenerate_stage1;
        }
      } else {
        const double ls = detail::choose_lengthscale(draw.kernel_points, fixed_ls);
        const auto kq = detail::stage_kq(setup.kernel_x, ls, kernel_measure(stage, cov),
                                         draw.kernel_points, G, diag.lambda_x,
                                         config.exact_mean);
        w = kq.weights;
        for (Index c = 0; c < problem.outputs; ++c) {
          j[static_cast<std::size_t>(c)] = kq.values[c];
        }
        diag.degenerate_stage1 += kq.degenerate;
        diag.max_jitter = std::max(diag.max_jitter, kq.jitter);
        diag.min_rcond = std::min(diag.min_rcond, kq.rcond);
        ls_sum += ls;
        ++ls_count;
        last_ls = ls;
        if (config.share_inner_points) shared_weights = w;
      }

      for (Index c = 0; c < problem.outputs; ++c) {
        res.stage1_values(t, c) = j[static_cast<std::size_t>(c)];
      }
      for (Index k = 0; k < n_targets; ++k) {
        res.stage2_inputs(t, k) = problem.targets[static_cast<std::size_t>(k)].f(j);
      }
      res.stage1_weights.row(t) = w.transpose();
      res.stage1_gvalues.push_back(G);
      res.stage1_points.push_back(std::move(draw.kernel_points));
      if (!config.uniform_weights) res.stage1_lengthscales[t] = last_ls;
    }
  });
  diag.mean_lengthscale_x = ls_count > 0 ? ls_sum / static_cast<double>(ls_count) : 0.0;

  res.target_estimates.resize(n_targets);
  res.stage2_weights.resize(T, n_targets);
  detail::tagged("stage II", [&] {
    for (Index k = 0; k < n_targets; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (config.uniform_weights) {
        const Vector w = detail::uniform_weights(T);
        res.target_estimates[k] = kq_estimate(w, res.stage2_inputs.col(k));
        res.stage2_weights.col(k) = w;
        diag.lambda_theta.push_back(0.0);
        diag.lengthscale_theta.push_back(0.0);
        continue;
      }
      const double lam = reg_schedule(config.lambda0_theta, T, setup.s_theta[ku],
                                      problem.dim_theta);
      const double ls = detail::choose_lengthscale(res.thetas, config.kernel_theta.lengthscale);
      const auto kq = detail::stage_kq(setup.kernel_theta[ku], ls,
                                       kernel_measure(problem.outer, cov), res.thetas,
                                       res.stage2_inputs.col(k), lam, config.exact_mean);
      res.target_estimates[k] = kq.values[0];
      res.stage2_weights.col(k) = kq.weights;
      diag.lambda_theta.push_back(lam);
      diag.lengthscale_theta.push_back(ls);
      diag.max_jitter = std::max(diag.max_jitter, kq.jitter);
      diag.min_rcond = std::min(diag.min_rcond, kq.rcond);
    }
  });

  res.estimate = problem.combine_targets(res.target_estimates);
  res.cost = static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(T);
  return res;
}

Vector ckq(const NestedProblem &problem, const NkqConfig &config,
           const PointMatrix &query_thetas, Index output) {
  require(output >= 0 && output < problem.outputs, ErrorCode::InvalidArgument,
          "ckq: output index out of range");
  require(query_thetas.cols() == problem.dim_theta, ErrorCode::DimensionMismatch,
          "ckq: query thetas do not match dim_theta");
  const auto setup = detail::resolve(problem, config);
  const NkqResult base = nkq(problem, config);
  const Index T = config.T;

  KernelSpec kernel = setup.kernel_theta.front();
  kernel.lengthscale =
      Vector::Constant(1, detail::choose_lengthscale(base.thetas, config.kernel_theta.lengthscale));
  const double lam = reg_schedule(config.lambda0_theta, T, setup.s_theta.front(),
                                  problem.dim_theta);
  const PointMatrix q = setup.change_of_variable
                            ? apply_inverse_transform(problem.outer.to_native, query_thetas)
                            : query_thetas;
  return detail::tagged("ckq", [&] {
    const RegularizedSolver solver(gram(kernel, base.thetas), lam, kernel.amplitude);
    const Vector alpha = solver.solve(Vector(base.stage1_values.col(output)));
    return Vector(cross_gram(kernel, q, base.thetas) * alpha);
  });
}

}  // namespace nkq
