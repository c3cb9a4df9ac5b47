#include "nkq/harness.hpp"

#include "nkq/error.hpp"
#include "nkq/problems.hpp"
#include "nkq/quadrature.hpp"
#include "nkq/sampling.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace nkq {

std::string_view to_string(EstimatorKind kind) noexcept {
  switch (kind) {
  case EstimatorKind::NMC:
    return "nmc";
  case EstimatorKind::NKQ:
    return "nkq";
  case EstimatorKind::MLMC:
    return "mlmc";
  case EstimatorKind::MLKQ:
    return "mlkq";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "nmc") return EstimatorKind::NMC;
  if (name == "nkq") return EstimatorKind::NKQ;
  if (name == "mlmc") return EstimatorKind::MLMC;
  if (name == "mlkq") return EstimatorKind::MLKQ;
  fail(ErrorCode::Config, "unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(PointSource source) noexcept {
  return source == PointSource::IID ? "iid" : "qmc";
}

PointSource parse_point_source(std::string_view name) {
  if (name == "iid") return PointSource::IID;
  if (name == "qmc") return PointSource::QMC;
  fail(ErrorCode::Config, "unknown point source '" + std::string(name) + "'");
}

BudgetPoint BudgetPoint::delta(double d) {
  BudgetPoint b;
  b.kind = Kind::Delta;
  b.value = d;
  return b;
}

BudgetPoint BudgetPoint::cost(double c) {
  BudgetPoint b;
  b.kind = Kind::Cost;
  b.value = c;
  return b;
}

BudgetPoint BudgetPoint::explicit_cell(Index N, Index T) {
  BudgetPoint b;
  b.kind = Kind::Explicit;
  b.N = N;
  b.T = T;
  return b;
}

namespace {

Index ceil_pow(double delta, double rate) {
  // A small tolerance keeps exact powers (0.1^-2 = 100) from rounding up.
  const double v = std::pow(delta, -rate);
  return std::max<Index>(1, static_cast<Index>(std::ceil(v * (1.0 - 1e-12))));
}

double problem_smoothness_x(const NestedProblem &p) {
  if (p.smoothness_x) return *p.smoothness_x;
  return static_cast<double>(p.dim_x) / p.alloc_rate_x;
}

double problem_smoothness_theta(const NestedProblem &p) {
  if (p.smoothness_theta) return *p.smoothness_theta;
  return static_cast<double>(p.dim_theta) / p.alloc_rate_theta;
}

}  // namespace

CellPlan plan_cell(const NestedProblem &problem, EstimatorKind estimator,
                   const BudgetPoint &budget, Index levels, Index mlmc_n0) {
  CellPlan plan;
  const double rx = problem.alloc_rate_x;
  const double rt = problem.alloc_rate_theta;
  if (budget.kind == BudgetPoint::Kind::Explicit) {
    if (estimator == EstimatorKind::MLMC || estimator == EstimatorKind::MLKQ) {
      fail(ErrorCode::Config, "explicit (N, T) cells are not defined for multilevel estimators");
    }
    require(budget.N >= 1 && budget.T >= 1, ErrorCode::Config, "explicit cell needs N, T >= 1");
    plan.N = budget.N;
    plan.T = budget.T;
    return plan;
  }
  require(std::isfinite(budget.value) && budget.value > 0.0, ErrorCode::Config,
          "budget values must be positive");
  if (budget.kind == BudgetPoint::Kind::Delta) {
    require(budget.value < 1.0 || estimator == EstimatorKind::NKQ ||
                estimator == EstimatorKind::NMC,
            ErrorCode::Config, "delta must be below 1");
  }
  const bool is_delta = budget.kind == BudgetPoint::Kind::Delta;
  switch (estimator) {
  case EstimatorKind::NKQ: {
    const double delta = is_delta ? budget.value : std::pow(budget.value, -1.0 / (rx + rt));
    plan.N = ceil_pow(delta, rx);
    plan.T = ceil_pow(delta, rt);
    return plan;
  }
  case EstimatorKind::NMC: {
    const double delta = is_delta ? budget.value : std::pow(budget.value, -1.0 / 3.0);
    plan.N = ceil_pow(delta, 1.0);
    plan.T = plan.N * plan.N;
    return plan;
  }
  case EstimatorKind::MLMC: {
    const double cost = is_delta ? std::pow(budget.value, -2.0) : budget.value;
    plan.levels = mlmc_allocation(cost, levels, mlmc_n0);
    break;
  }
  case EstimatorKind::MLKQ: {
    const double cost =
        is_delta ? std::pow(budget.value, -(1.0 + 0.5 * rx + 0.5 * rt)) : budget.value;
    plan.levels = mlkq_allocation(cost, levels, problem.dim_x, problem_smoothness_x(problem),
                                  problem.dim_theta, problem_smoothness_theta(problem));
    break;
  }
  }
  plan.N = plan.levels.N_levels.back();
  plan.T = plan.levels.T_levels.front();
  return plan;
}

void SweepSpec::validate() const {
  require(!estimators.empty(), ErrorCode::Config, "sweep needs at least one estimator");
  require(!budgets.empty(), ErrorCode::Config, "sweep needs a nonempty budget grid");
  require(replicates >= 1, ErrorCode::Config, "replicates must be >= 1");
  require(workers >= 1, ErrorCode::Config, "workers must be >= 1");
  require(levels >= 0, ErrorCode::Config, "levels must be >= 0");
  require(std::isfinite(lambda0_x) && lambda0_x >= 0.0 && std::isfinite(lambda0_theta) &&
              lambda0_theta >= 0.0,
          ErrorCode::Config, "lambda0 values must be nonnegative");
  for (const auto &e : estimators) parse_estimator(e);
}

std::uint64_t replicate_seed(std::uint64_t base, std::string_view estimator,
                             PointSource source, Index budget_index, Index replicate) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the estimator name
  for (char c : estimator) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h ^= source == PointSource::QMC ? 0x51ULL : 0x11ULL;
  const std::uint64_t cell = derive_seed(derive_seed(base, h),
                                         static_cast<std::uint64_t>(budget_index));
  return derive_seed(cell, static_cast<std::uint64_t>(replicate));
}

RunRecord run_single(const NestedProblem &problem, EstimatorKind estimator,
                     const CellPlan &plan, const SweepSpec &spec, Index replicate,
                     std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.problem = problem.id;
  rec.estimator = std::string(to_string(estimator));
  rec.point_source = std::string(to_string(spec.point_source));
  rec.replicate = replicate;
  rec.seed = seed;
  rec.N = plan.N;
  rec.T = plan.T;
  rec.lambda0_x = spec.lambda0_x;
  rec.lambda0_theta = spec.lambda0_theta;

  NkqConfig cfg = spec.nkq_template;
  cfg.lambda0_x = spec.lambda0_x;
  cfg.lambda0_theta = spec.lambda0_theta;
  cfg.point_source = spec.point_source;
  cfg.seed = seed;

  switch (estimator) {
  case EstimatorKind::NMC: {
    NmcConfig c;
    c.N = plan.N;
    c.T = plan.T;
    c.point_source = spec.point_source;
    c.change_of_variable = cfg.change_of_variable;
    c.seed = seed;
    const auto r = nmc(problem, c);
    rec.estimate = r.estimate;
    rec.cost = r.cost;
    rec.lambda0_x = rec.lambda0_theta = 0.0;
    break;
  }
  case EstimatorKind::NKQ: {
    cfg.N = plan.N;
    cfg.T = plan.T;
    const auto r = nkq(problem, cfg);
    rec.estimate = r.estimate;
    rec.cost = r.cost;
    break;
  }
  case EstimatorKind::MLMC: {
    MlConfig ml = plan.levels;
    ml.seed = seed;
    const auto r = mlmc(problem, ml, spec.point_source, cfg.change_of_variable);
    rec.estimate = r.estimate;
    rec.cost = r.cost;
    rec.L = ml.L;
    rec.lambda0_x = rec.lambda0_theta = 0.0;
    break;
  }
  case EstimatorKind::MLKQ: {
    MlConfig ml = plan.levels;
    ml.seed = seed;
    const auto r = mlkq(problem, ml, cfg);
    rec.estimate = r.estimate;
    rec.cost = r.cost;
    rec.L = ml.L;
    break;
  }
  }
  rec.abs_error = problem.true_value ? std::abs(rec.estimate - *problem.true_value)
                                     : std::numeric_limits<double>::quiet_NaN();
  rec.wall_millis = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return rec;
}

namespace {

template <class Task>
void run_parallel(Index tasks, Index workers, Task &&task) {
  const Index n = std::min(tasks, workers);
  if (n <= 1) {
    for (Index i = 0; i < tasks; ++i) task(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (Index w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (Index i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) task(i);
    });
  }
  for (auto &t : pool) t.join();
}

}  // namespace

SweepResult run_sweep(const SweepSpec &spec) {
  spec.validate();
  const NestedProblem problem = make_problem(spec.problem, spec.problem_overrides);

  struct Cell {
    EstimatorKind estimator;
    std::string name;
    Index budget_index;
    CellPlan plan;
    std::string error;
  };
  std::vector<Cell> cells;
  for (const auto &name : spec.estimators) {
    for (std::size_t b = 0; b < spec.budgets.size(); ++b) {
      Cell c{parse_estimator(name), name, static_cast<Index>(b), {}, {}};
      try {
        c.plan = plan_cell(problem, c.estimator, spec.budgets[b], spec.levels, spec.mlmc_n0);
      } catch (const std::exception &e) {
        c.error = e.what();
      }
      cells.push_back(std::move(c));
    }
  }

  const Index R = spec.replicates;
  const auto n_tasks = static_cast<Index>(cells.size()) * R;
  std::vector<RunRecord> slots(static_cast<std::size_t>(n_tasks));
  std::vector<std::string> errors(static_cast<std::size_t>(n_tasks));
  std::vector<char> done(static_cast<std::size_t>(n_tasks), 0);

  run_parallel(n_tasks, spec.workers, [&](Index i) {
    const Cell &cell = cells[static_cast<std::size_t>(i / R)];
    const Index r = i % R;
    if (!cell.error.empty()) return;
    const auto seed =
        replicate_seed(spec.seed, cell.name, spec.point_source, cell.budget_index, r);
    try {
      slots[static_cast<std::size_t>(i)] =
          run_single(problem, cell.estimator, cell.plan, spec, r, seed);
      done[static_cast<std::size_t>(i)] = 1;
    } catch (const std::exception &e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });

  SweepResult out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::string first_error = cells[c].error;
    for (Index r = 0; r < R; ++r) {
      const auto i = c * static_cast<std::size_t>(R) + static_cast<std::size_t>(r);
      if (done[i]) {
        out.records.push_back(std::move(slots[i]));
      } else if (first_error.empty()) {
        first_error = errors[i];
      }
    }
    if (!first_error.empty()) {
      out.failures.push_back(cells[c].name + " @ budget " +
                             std::to_string(cells[c].budget_index) + ": " + first_error);
    }
  }
  if (!spec.output.empty()) write_csv(spec.output, out.records);
  return out;
}

namespace {

// Mean squared leave-one-out residual of kernel ridge regression, relative
// to the variance of y.
double loo_score(const KernelSpec &kernel, const PointMatrix &points, const Vector &y,
                 double lambda) {
  const Index n = points.rows();
  if (n < 3) return 0.0;
  const Standardization s = standardize(y);
  if (s.degenerate) return 0.0;
  const Matrix K = gram(kernel, points);
  const RegularizedSolver solver(K, lambda, kernel.amplitude);
  const Matrix H = K * solver.solve(Matrix(Matrix::Identity(n, n)));
  const Vector fit = H * s.values;
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double denom = std::max(1.0 - H(i, i), 1e-12);
    const double e = (s.values[i] - fit[i]) / denom;
    acc += e * e;
  }
  return acc / static_cast<double>(n);
}

}  // namespace

TuneResult tune_lambda0(const SweepSpec &spec) {
  SweepSpec checked = spec;
  if (checked.estimators.empty()) checked.estimators = {"nkq"};  // tune always runs NKQ
  checked.validate();
  const NestedProblem problem = make_problem(spec.problem, spec.problem_overrides);
  const CellPlan plan = plan_cell(problem, EstimatorKind::NKQ, spec.budgets.front(), spec.levels);
  TuneResult out;
  out.grid_x = {0.01, 0.1, 1.0};
  out.grid_theta = {0.01, 0.1, 1.0};
  out.used_truth = problem.true_value.has_value();

  double best = std::numeric_limits<double>::infinity();
  for (double lx : out.grid_x) {
    for (double lt : out.grid_theta) {
      SweepSpec s = spec;
      s.lambda0_x = lx;
      s.lambda0_theta = lt;
      double score = 0.0;
      for (Index r = 0; r < spec.replicates; ++r) {
        const auto seed = replicate_seed(spec.seed, "nkq", spec.point_source, 0, r);
        if (out.used_truth) {
          const RunRecord rec = run_single(problem, EstimatorKind::NKQ, plan, s, r, seed);
          score += rec.abs_error;
          out.records.push_back(rec);
          continue;
        }
        NkqConfig cfg = spec.nkq_template;
        cfg.N = plan.N;
        cfg.T = plan.T;
        cfg.lambda0_x = lx;
        cfg.lambda0_theta = lt;
        cfg.point_source = spec.point_source;
        cfg.seed = seed;
        const NkqResult res = nkq(problem, cfg);
        KernelSpec kt = problem.targets.front().kernel_theta;
        if (cfg.kernel_theta.family) kt.family = *cfg.kernel_theta.family;
        if (cfg.kernel_theta.composition) kt.composition = *cfg.kernel_theta.composition;
        kt.amplitude = 1.0;
        kt.lengthscale = Vector::Constant(1, res.diagnostics.lengthscale_theta.front());
        score += loo_score(kt, res.thetas, res.stage2_inputs.col(0),
                           res.diagnostics.lambda_theta.front());
        KernelSpec kx = problem.kernel_x;
        if (cfg.kernel_x.family) kx.family = *cfg.kernel_x.family;
        if (cfg.kernel_x.composition) kx.composition = *cfg.kernel_x.composition;
        kx.amplitude = 1.0;
        const Index probes = std::min<Index>(plan.T, 8);
        double inner = 0.0;
        for (Index t = 0; t < probes; ++t) {
          kx.lengthscale = Vector::Constant(1, res.stage1_lengthscales[t]);
          inner += loo_score(kx, res.stage1_points[static_cast<std::size_t>(t)],
                             res.stage1_gvalues[static_cast<std::size_t>(t)].col(0),
                             res.diagnostics.lambda_x);
        }
        score += inner / static_cast<double>(probes);
        RunRecord rec;
        rec.problem = problem.id;
        rec.estimator = "nkq";
        rec.point_source = std::string(to_string(spec.point_source));
        rec.cost = res.cost;
        rec.N = plan.N;
        rec.T = plan.T;
        rec.replicate = r;
        rec.seed = seed;
        rec.estimate = res.estimate;
        rec.abs_error = std::numeric_limits<double>::quiet_NaN();
        rec.lambda0_x = lx;
        rec.lambda0_theta = lt;
        out.records.push_back(rec);
      }
      score /= static_cast<double>(spec.replicates);
      out.scores.push_back(score);
      if (score < best) {
        best = score;
        out.lambda0_x = lx;
        out.lambda0_theta = lt;
      }
    }
  }
  return out;
}

}  // namespace nkq
