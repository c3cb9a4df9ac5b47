#pragma once

#include "nkq/baselines.hpp"
#include "nkq/nested.hpp"
#include "nkq/problem.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nkq {

enum class EstimatorKind { NMC, NKQ, MLMC, MLKQ };

std::string_view to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator(std::string_view name);
std::string_view to_string(PointSource source) noexcept;
PointSource parse_point_source(std::string_view name);

// One column of the budget grid.
struct BudgetPoint {
  enum class Kind { Delta, Cost, Explicit };
  Kind kind = Kind::Cost;
  double value = 0.0;  // delta or cost
  Index N = 0;         // explicit cells
  Index T = 0;

  static BudgetPoint delta(double d);
  static BudgetPoint cost(double c);
  static BudgetPoint explicit_cell(Index N, Index T);
};

// Sample sizes for one (estimator, budget) cell.
struct CellPlan {
  Index N = 0;
  Index T = 0;
  MlConfig levels;  // MLMC / MLKQ
};

// Delta mappings: NKQ N = ceil(delta^-rate_x), T = ceil(delta^-rate_theta);
// NMC N = ceil(1/delta), T = N^2; MLMC budget delta^-2; MLKQ budget
// delta^-(1 + rate_x/2 + rate_theta/2). Cost budgets are converted to a delta
// for NKQ/NMC and passed to the allocation rules for MLMC/MLKQ.
CellPlan plan_cell(const NestedProblem &problem, EstimatorKind estimator,
                   const BudgetPoint &budget, Index levels, Index mlmc_n0 = 2);

struct SweepSpec {
  std::string problem = "synthetic";
  std::string problem_overrides = "{}";
  std::vector<std::string> estimators;
  std::vector<BudgetPoint> budgets;
  Index replicates = 1;
  std::uint64_t seed = 0;
  PointSource point_source = PointSource::IID;
  double lambda0_x = 0.1;
  double lambda0_theta = 0.1;
  Index levels = 5;  // L for MLMC / MLKQ
  Index mlmc_n0 = 2;
  Index workers = 1;
  // Kernel overrides, change of variable and the other NKQ switches; N, T,
  // seed and lambda0 values are set per run.
  NkqConfig nkq_template;
  std::string output;  // CSV path, empty for none

  void validate() const;
};

struct RunRecord {
  std::string problem;
  std::string estimator;
  std::string point_source;
  std::uint64_t cost = 0;
  Index N = 0;
  Index T = 0;
  Index L = 0;
  Index replicate = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double abs_error = 0.0;  // NaN without a known truth
  double wall_millis = 0.0;
  double lambda0_x = 0.0;
  double lambda0_theta = 0.0;

  bool operator==(const RunRecord &) const = default;
};

struct SweepResult {
  std::vector<RunRecord> records;  // sorted by cell, then replicate
  std::vector<std::string> failures;  // one message per failed cell
};

// Seed of replicate r in cell (estimator, budget index).
std::uint64_t replicate_seed(std::uint64_t base, std::string_view estimator,
                             PointSource source, Index budget_index, Index replicate);

// One estimator run; the record's cost is the estimator's own g-evaluation
// count.
RunRecord run_single(const NestedProblem &problem, EstimatorKind estimator,
                     const CellPlan &plan, const SweepSpec &spec, Index replicate,
                     std::uint64_t seed);

SweepResult run_sweep(const SweepSpec &spec);

// CSV with the columns listed in kCsvHeader, one record per line.
inline constexpr std::string_view kCsvHeader =
    "problem,estimator,point_source,cost,N,T,L,replicate,seed,estimate,abs_error,"
    "wall_millis,lambda0_x,lambda0_theta";
void write_csv(std::ostream &out, const std::vector<RunRecord> &records);
void write_csv(const std::string &path, const std::vector<RunRecord> &records);
std::vector<RunRecord> read_csv(std::istream &in);
std::vector<RunRecord> read_csv(const std::string &path);

struct LogLogFit {
  double slope = 0.0;      // d log(error) / d log(cost)
  double intercept = 0.0;
  double rate = 0.0;       // r with cost ~ error^(-r): -1/slope, 0 if slope >= 0
};

LogLogFit fit_loglog_slope(const std::vector<double> &costs,
                           const std::vector<double> &errors);

// Linear-interpolation (type 7) quantile of unsorted data, p in [0,1].
double quantile(std::vector<double> values, double p);

struct CellSummary {
  std::string problem;
  std::string estimator;
  std::string point_source;
  Index N = 0;
  Index T = 0;
  Index L = 0;
  double mean_cost = 0.0;
  Index count = 0;
  double mean_error = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double std_error = 0.0;  // of the mean error
  double mean_estimate = 0.0;
  double estimate_std_error = 0.0;
  double mean_wall_millis = 0.0;
};

// Groups by (problem, estimator, point source, N, T, L) in order of first
// appearance.
std::vector<CellSummary> summarize(const std::vector<RunRecord> &records);

struct TuneResult {
  double lambda0_x = 0.1;
  double lambda0_theta = 0.1;
  bool used_truth = false;
  std::vector<double> grid_x;
  std::vector<double> grid_theta;
  std::vector<double> scores;  // row-major over (grid_x, grid_theta)
  std::vector<RunRecord> records;
};

// Grid search of (lambda0_x, lambda0_theta) over {0.01, 0.1, 1} for NKQ at a
// pilot budget (the first budget of the spec). Scores by mean absolute error
// when the truth is known, otherwise by the leave-one-out residual of the
// Stage I and Stage II kernel ridge fits.
TuneResult tune_lambda0(const SweepSpec &spec);

}  // namespace nkq
