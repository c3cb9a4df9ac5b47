#include "nkq/baselines.hpp"

#include "nkq/sampling.hpp"
#include "stages.hpp"

#include <cmath>
#include <string>

namespace nkq {

namespace {

std::size_t us(Index i) { return static_cast<std::size_t>(i); }

Vector average_targets(const Matrix &per_t) {
  Vector out(per_t.cols());
  const Vector w = detail::uniform_weights(per_t.rows());
  for (Index k = 0; k < per_t.cols(); ++k) out[k] = kq_estimate(w, per_t.col(k));
  return out;
}

std::vector<double> inner_means(const Matrix &G, Index begin, Index count) {
  const Vector w = detail::uniform_weights(count);
  std::vector<double> j(us(G.cols()));
  for (Index c = 0; c < G.cols(); ++c) {
    j[us(c)] = kq_estimate(w, G.col(c).segment(begin, count));
  }
  return j;
}

}  // namespace

EstimateResult nmc(const NestedProblem &problem, const NmcConfig &config) {
  problem.validate();
  require(config.N >= 1 && config.T >= 1, ErrorCode::InvalidArgument,
          "nmc: N and T must be >= 1");
  const bool cov = config.change_of_variable.value_or(problem.default_change_of_variable);
  const Index n_targets = static_cast<Index>(problem.targets.size());
  const StageDraw outer = draw_stage(problem.outer, config.T, config.point_source,
                                     derive_seed(config.seed, 0), cov);
  Matrix F(config.T, n_targets);
  for (Index t = 0; t < config.T; ++t) {
    const Point theta = row_of(outer.native_points, t);
    const StageDraw draw =
        draw_stage(problem.conditional(theta), config.N, config.point_source,
                   derive_seed(config.seed, static_cast<std::uint64_t>(t) + 1), cov);
    const Matrix G = eval_g(problem, draw.native_points, theta);
    const std::vector<double> j = inner_means(G, 0, config.N);
    for (Index k = 0; k < n_targets; ++k) F(t, k) = problem.targets[us(k)].f(j);
  }
  EstimateResult r;
  r.target_estimates = average_targets(F);
  r.estimate = problem.combine_targets(r.target_estimates);
  r.cost = static_cast<std::uint64_t>(config.N) * static_cast<std::uint64_t>(config.T);
  return r;
}

double nmc(const NestedProblem &problem, Index N, Index T, PointSource source,
           std::uint64_t seed) {
  NmcConfig c;
  c.N = N;
  c.T = T;
  c.point_source = source;
  c.seed = seed;
  return nmc(problem, c).estimate;
}

void MlConfig::validate() const {
  require(L >= 0, ErrorCode::InvalidArgument, "L must be >= 0");
  require(static_cast<Index>(N_levels.size()) == L + 1 &&
              static_cast<Index>(T_levels.size()) == L + 1,
          ErrorCode::InvalidArgument, "need L + 1 entries in N_levels and T_levels");
  for (Index l = 0; l <= L; ++l) {
    require(N_levels[us(l)] >= 1, ErrorCode::InvalidArgument, "N_l must be >= 1");
    require(T_levels[us(l)] >= 1, ErrorCode::InvalidArgument, "T_l must be >= 1");
    if (l > 0 && N_levels[us(l)] <= N_levels[us(l - 1)]) {
      fail(ErrorCode::InvalidArgument,
           "N_l must be strictly increasing (level " + std::to_string(l) + ")");
    }
  }
}

std::uint64_t MlConfig::cost() const {
  std::uint64_t c = 0;
  for (std::size_t l = 0; l < N_levels.size() && l < T_levels.size(); ++l) {
    c += static_cast<std::uint64_t>(N_levels[l]) * static_cast<std::uint64_t>(T_levels[l]);
  }
  return c;
}

EstimateResult mlmc(const NestedProblem &problem, const MlConfig &config,
                    PointSource source, std::optional<bool> change_of_variable) {
  config.validate();
  for (Index l = 1; l <= config.L; ++l) {
    if (config.N_levels[us(l)] != 2 * config.N_levels[us(l - 1)]) {
      fail(ErrorCode::InvalidArgument,
           "antithetic MLMC needs N_l = 2 N_{l-1} (level " + std::to_string(l) + ")");
    }
  }
  NmcConfig base;
  base.N = config.N_levels[0];
  base.T = config.T_levels[0];
  base.point_source = source;
  base.change_of_variable = change_of_variable;
  base.seed = config.seed;
  EstimateResult r = nmc(problem, base);
  Vector total = r.target_estimates;

  const bool cov = change_of_variable.value_or(problem.default_change_of_variable);
  const Index n_targets = static_cast<Index>(problem.targets.size());
  for (Index l = 1; l <= config.L; ++l) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(l));
    const Index N = config.N_levels[us(l)];
    const Index T = config.T_levels[us(l)];
    const Index half = N / 2;
    const StageDraw outer = draw_stage(problem.outer, T, source, derive_seed(seed, 0), cov);
    Matrix Y(T, n_targets);
    std::vector<double> jf(us(problem.outputs));
    for (Index t = 0; t < T; ++t) {
      const Point theta = row_of(outer.native_points, t);
      const StageDraw draw = draw_stage(problem.conditional(theta), N, source,
                                        derive_seed(seed, static_cast<std::uint64_t>(t) + 1),
                                        cov);
      const Matrix G = eval_g(problem, draw.native_points, theta);
      const auto ja = inner_means(G, 0, half);
      const auto jb = inner_means(G, half, half);
      for (std::size_t c = 0; c < jf.size(); ++c) jf[c] = 0.5 * (ja[c] + jb[c]);
      for (Index k = 0; k < n_targets; ++k) {
        const auto &f = problem.targets[us(k)].f;
        Y(t, k) = f(jf) - (0.5 * f(ja) + 0.5 * f(jb));
      }
    }
    total += average_targets(Y);
  }
  r.target_estimates = total;
  r.estimate = problem.combine_targets(total);
  r.cost = config.cost();
  return r;
}

EstimateResult mlkq(const NestedProblem &problem, const MlConfig &config,
                    const NkqConfig &base) {
  config.validate();
  const auto setup = detail::resolve(problem, base);
  const double ratio = std::exp2(static_cast<double>(problem.dim_x) / setup.s_x);
  for (Index l = 1; l <= config.L; ++l) {
    const auto n = static_cast<double>(config.N_levels[us(l)]);
    const auto prev = static_cast<double>(config.N_levels[us(l - 1)]);
    if (!(n < ratio * prev)) {
      fail(ErrorCode::InvalidArgument,
           "MLKQ needs N_l < 2^(d_X/s_X) N_{l-1} (level " + std::to_string(l) + ")");
    }
  }

  NkqConfig level0 = base;
  level0.N = config.N_levels[0];
  level0.T = config.T_levels[0];
  level0.seed = config.seed;
  level0.uniform_weights = false;
  const NkqResult r0 = nkq(problem, level0);
  Vector total = r0.target_estimates;

  const bool cov = setup.change_of_variable;
  const Index n_targets = static_cast<Index>(problem.targets.size());
  for (Index l = 1; l <= config.L; ++l) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(l));
    const Index N = config.N_levels[us(l)];
    const Index Nc = config.N_levels[us(l - 1)];
    const Index T = config.T_levels[us(l)];
    const double lam_f = reg_schedule(base.lambda0_x, N, setup.s_x, problem.dim_x);
    const double lam_c = reg_schedule(base.lambda0_x, Nc, setup.s_x, problem.dim_x);
    const StageDraw outer =
        draw_stage(problem.outer, T, base.point_source, derive_seed(seed, 0), cov);
    Matrix D(T, n_targets);
    detail::tagged("MLKQ stage I", [&] {
      for (Index t = 0; t < T; ++t) {
        const Point theta = row_of(outer.native_points, t);
        const StageModel stage = problem.conditional(theta);
        const StageDraw draw =
            draw_stage(stage, N, base.point_source,
                       derive_seed(seed, static_cast<std::uint64_t>(t) + 1), cov);
        const Matrix G = eval_g(problem, draw.native_points, theta);
        const MeasureSpec &m = kernel_measure(stage, cov);
        const auto fine = detail::stage_kq(
            setup.kernel_x, detail::choose_lengthscale(draw.kernel_points, base.kernel_x.lengthscale),
            m, draw.kernel_points, G, lam_f, base.exact_mean);
        const PointMatrix coarse_pts = draw.kernel_points.topRows(Nc);
        const auto coarse = detail::stage_kq(
            setup.kernel_x, detail::choose_lengthscale(coarse_pts, base.kernel_x.lengthscale), m,
            coarse_pts, G.topRows(Nc), lam_c, base.exact_mean);
        const std::vector<double> jf(fine.values.data(), fine.values.data() + fine.values.size());
        const std::vector<double> jc(coarse.values.data(),
                                     coarse.values.data() + coarse.values.size());
        for (Index k = 0; k < n_targets; ++k) {
          const auto &f = problem.targets[us(k)].f;
          D(t, k) = f(jf) - f(jc);
        }
      }
    });
    detail::tagged("MLKQ stage II", [&] {
      const double ls = detail::choose_lengthscale(outer.kernel_points, base.kernel_theta.lengthscale);
      for (Index k = 0; k < n_targets; ++k) {
        const double s = setup.s_theta[us(k)];
        const double d = static_cast<double>(problem.dim_theta);
        const double lam =
            base.lambda0_theta * std::pow(static_cast<double>(T), -2.0 * s / (2.0 * s + d));
        const auto kq = detail::stage_kq(setup.kernel_theta[us(k)], ls,
                                         kernel_measure(problem.outer, cov), outer.kernel_points,
                                         D.col(k), lam, base.exact_mean);
        total[k] += kq.values[0];
      }
    });
  }
  EstimateResult r;
  r.target_estimates = total;
  r.estimate = problem.combine_targets(total);
  r.cost = config.cost();
  return r;
}

MlConfig mlmc_allocation(double budget, Index L, Index N0) {
  require(budget > 0.0 && std::isfinite(budget), ErrorCode::InvalidArgument,
          "budget must be positive");
  require(L >= 0 && N0 >= 1, ErrorCode::InvalidArgument, "need L >= 0 and N0 >= 1");
  double denom = 0.0;
  for (Index l = 0; l <= L; ++l) denom += std::exp2(-static_cast<double>(l));
  const double t0 = budget / (static_cast<double>(N0) * denom);
  MlConfig c;
  c.L = L;
  for (Index l = 0; l <= L; ++l) {
    c.N_levels.push_back(N0 << l);
    c.T_levels.push_back(std::max<Index>(
        1, static_cast<Index>(std::ceil(t0 * std::exp2(-2.0 * static_cast<double>(l))))));
  }
  return c;
}

MlConfig mlkq_allocation(double budget, Index L, Index d_x, double s_x, Index d_theta,
                         double s_theta) {
  require(budget > 0.0 && std::isfinite(budget), ErrorCode::InvalidArgument,
          "budget must be positive");
  require(L >= 0 && s_x > 0.0 && s_theta > 0.0 && d_x >= 1 && d_theta >= 1,
          ErrorCode::InvalidArgument, "invalid MLKQ allocation arguments");
  const double rx = static_cast<double>(d_x) / s_x;
  const double rt = static_cast<double>(d_theta) / s_theta;
  const double ratio = std::exp2(rx);
  const double delta = std::pow(budget, -1.0 / (1.0 + 0.5 * rx + 0.5 * rt));
  Index n0 = static_cast<Index>(std::ceil(std::pow(delta, -0.5 * rx)));
  n0 = std::max<Index>(n0, static_cast<Index>(std::floor(1.0 / (ratio - 1.0))) + 1);

  MlConfig c;
  c.L = L;
  c.N_levels.push_back(n0);
  for (Index l = 1; l <= L; ++l) {
    const double prev = static_cast<double>(c.N_levels.back());
    c.N_levels.push_back(static_cast<Index>(std::ceil(ratio * prev)) - 1);
  }
  const double decay = (2.0 * s_theta + static_cast<double>(d_theta)) / s_theta;
  double denom = 0.0;
  for (Index l = 0; l <= L; ++l) {
    denom += static_cast<double>(c.N_levels[us(l)]) * std::exp2(-decay * static_cast<double>(l));
  }
  const double t0 = budget / denom;
  for (Index l = 0; l <= L; ++l) {
    c.T_levels.push_back(std::max<Index>(
        1, static_cast<Index>(std::ceil(t0 * std::exp2(-decay * static_cast<double>(l))))));
  }
  return c;
}

}  // namespace nkq
