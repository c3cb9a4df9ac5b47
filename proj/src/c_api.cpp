#include "nkq/nkq.h"

#include "nkq/error.hpp"
#include "nkq/harness.hpp"
#include "nkq/problems.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

using json = nlohmann::json;

struct nkq_problem {
  nkq::NestedProblem problem;
};

struct nkq_sweep {
  nkq::SweepResult result;
  std::string summary_json;
  std::string fit_json;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_buffer;
thread_local nkq::RunRecord g_record;

nkq_status to_status(nkq::ErrorCode code) { return static_cast<nkq_status>(code); }

template <class Fn>
nkq_status guarded(Fn &&fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const nkq::Error &e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception &e) {
    g_last_error = std::string("config: ") + e.what();
    return NKQ_ERR_CONFIG;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return NKQ_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return NKQ_ERR_INTERNAL;
  }
}

void check_out(const void *p, const char *what) {
  nkq::require(p != nullptr, nkq::ErrorCode::InvalidArgument,
               std::string(what) + " must not be null");
}

void check_keys(const json &obj, std::initializer_list<std::string_view> allowed,
                const std::string &where) {
  nkq::require(obj.is_object(), nkq::ErrorCode::Config, where + " must be a JSON object");
  for (const auto &item : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || item.key() == a;
    nkq::require(ok, nkq::ErrorCode::Config, "unknown key '" + item.key() + "' in " + where);
  }
}

nkq::KernelOverride parse_kernel_override(const json &j, const std::string &where) {
  check_keys(j, {"family", "composition", "lengthscale"}, where);
  nkq::KernelOverride k;
  if (j.contains("family")) k.family = nkq::parse_kernel_family(j["family"].get<std::string>());
  if (j.contains("composition")) {
    k.composition = nkq::parse_composition(j["composition"].get<std::string>());
  }
  if (j.contains("lengthscale")) k.lengthscale = j["lengthscale"].get<double>();
  return k;
}

nkq::NkqConfig parse_nkq(const json &j) {
  check_keys(j,
             {"kernel_x", "kernel_theta", "smoothness_x", "smoothness_theta",
              "change_of_variable", "pooled_lengthscale", "share_inner_points", "exact_mean"},
             "nkq");
  nkq::NkqConfig c;
  if (j.contains("kernel_x")) c.kernel_x = parse_kernel_override(j["kernel_x"], "nkq.kernel_x");
  if (j.contains("kernel_theta")) {
    c.kernel_theta = parse_kernel_override(j["kernel_theta"], "nkq.kernel_theta");
  }
  if (j.contains("smoothness_x")) c.smoothness_x = j["smoothness_x"].get<double>();
  if (j.contains("smoothness_theta")) c.smoothness_theta = j["smoothness_theta"].get<double>();
  if (j.contains("change_of_variable")) {
    c.change_of_variable = j["change_of_variable"].get<bool>();
  }
  if (j.contains("pooled_lengthscale")) c.pooled_lengthscale = j["pooled_lengthscale"].get<bool>();
  if (j.contains("share_inner_points")) c.share_inner_points = j["share_inner_points"].get<bool>();
  if (j.contains("exact_mean")) c.exact_mean = j["exact_mean"].get<bool>();
  return c;
}

nkq::SweepSpec parse_spec(const char *text) {
  check_out(text, "config");
  const json j = json::parse(text);
  check_keys(j,
             {"problem", "overrides", "estimators", "estimator", "delta_grid", "cost_grid",
              "cells", "delta", "cost", "N", "T", "replicates", "seed", "point_source",
              "lambda0_x", "lambda0_theta", "levels", "mlmc_n0", "workers", "out", "nkq"},
             "config");
  nkq::SweepSpec s;
  if (j.contains("problem")) s.problem = j["problem"].get<std::string>();
  if (j.contains("overrides")) s.problem_overrides = j["overrides"].dump();
  if (j.contains("estimators")) s.estimators = j["estimators"].get<std::vector<std::string>>();
  if (j.contains("estimator")) s.estimators.push_back(j["estimator"].get<std::string>());
  if (j.contains("delta_grid")) {
    for (double d : j["delta_grid"].get<std::vector<double>>()) {
      s.budgets.push_back(nkq::BudgetPoint::delta(d));
    }
  }
  if (j.contains("cost_grid")) {
    for (double c : j["cost_grid"].get<std::vector<double>>()) {
      s.budgets.push_back(nkq::BudgetPoint::cost(c));
    }
  }
  if (j.contains("cells")) {
    for (const auto &cell : j["cells"]) {
      const auto nt = cell.get<std::vector<nkq::Index>>();
      nkq::require(nt.size() == 2, nkq::ErrorCode::Config, "cells entries must be [N, T]");
      s.budgets.push_back(nkq::BudgetPoint::explicit_cell(nt[0], nt[1]));
    }
  }
  if (j.contains("delta")) s.budgets.push_back(nkq::BudgetPoint::delta(j["delta"].get<double>()));
  if (j.contains("cost")) s.budgets.push_back(nkq::BudgetPoint::cost(j["cost"].get<double>()));
  if (j.contains("N") || j.contains("T")) {
    nkq::require(j.contains("N") && j.contains("T"), nkq::ErrorCode::Config,
                 "N and T must be given together");
    s.budgets.push_back(
        nkq::BudgetPoint::explicit_cell(j["N"].get<nkq::Index>(), j["T"].get<nkq::Index>()));
  }
  if (j.contains("replicates")) s.replicates = j["replicates"].get<nkq::Index>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("point_source")) {
    s.point_source = nkq::parse_point_source(j["point_source"].get<std::string>());
  }
  if (j.contains("lambda0_x")) s.lambda0_x = j["lambda0_x"].get<double>();
  if (j.contains("lambda0_theta")) s.lambda0_theta = j["lambda0_theta"].get<double>();
  if (j.contains("levels")) s.levels = j["levels"].get<nkq::Index>();
  if (j.contains("mlmc_n0")) s.mlmc_n0 = j["mlmc_n0"].get<nkq::Index>();
  if (j.contains("workers")) s.workers = j["workers"].get<nkq::Index>();
  if (j.contains("out")) s.output = j["out"].get<std::string>();
  if (j.contains("nkq")) s.nkq_template = parse_nkq(j["nkq"]);
  return s;
}

void fill(const nkq::RunRecord &r, nkq_record *out) {
  out->problem = r.problem.c_str();
  out->estimator = r.estimator.c_str();
  out->point_source = r.point_source.c_str();
  out->cost = r.cost;
  out->N = r.N;
  out->T = r.T;
  out->L = r.L;
  out->replicate = r.replicate;
  out->seed = r.seed;
  out->estimate = r.estimate;
  out->abs_error = r.abs_error;
  out->wall_millis = r.wall_millis;
  out->lambda0_x = r.lambda0_x;
  out->lambda0_theta = r.lambda0_theta;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string summary_json(const std::vector<nkq::RunRecord> &records) {
  json arr = json::array();
  for (const auto &s : nkq::summarize(records)) {
    arr.push_back({{"problem", s.problem},
                   {"estimator", s.estimator},
                   {"point_source", s.point_source},
                   {"N", s.N},
                   {"T", s.T},
                   {"L", s.L},
                   {"count", s.count},
                   {"mean_cost", s.mean_cost},
                   {"mean_error", number_or_null(s.mean_error)},
                   {"q25", number_or_null(s.q25)},
                   {"q75", number_or_null(s.q75)},
                   {"std_error", number_or_null(s.std_error)},
                   {"mean_estimate", s.mean_estimate},
                   {"estimate_std_error", s.estimate_std_error},
                   {"mean_wall_millis", s.mean_wall_millis}});
  }
  return arr.dump(2);
}

std::string fit_json(const std::vector<nkq::RunRecord> &records) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<Key> order;
  for (const auto &s : nkq::summarize(records)) {
    if (!std::isfinite(s.mean_error) || s.mean_error <= 0.0) continue;
    const Key k{s.problem, s.estimator, s.point_source};
    if (!groups.count(k)) order.push_back(k);
    groups[k].first.push_back(s.mean_cost);
    groups[k].second.push_back(s.mean_error);
  }
  json arr = json::array();
  for (const auto &k : order) {
    const auto &[costs, errors] = groups[k];
    json item = {{"problem", std::get<0>(k)},
                 {"estimator", std::get<1>(k)},
                 {"point_source", std::get<2>(k)},
                 {"cells", costs.size()}};
    try {
      const auto fit = nkq::fit_loglog_slope(costs, errors);
      item["slope"] = fit.slope;
      item["intercept"] = fit.intercept;
      item["rate"] = fit.rate;
    } catch (const nkq::Error &e) {
      item["error"] = e.detail();
    }
    arr.push_back(std::move(item));
  }
  return arr.dump(2);
}

}  // namespace

extern "C" {

const char *nkq_version(void) { return "0.1.0"; }

const char *nkq_last_error(void) { return g_last_error.c_str(); }

const char *nkq_status_string(nkq_status status) {
  switch (status) {
  case NKQ_OK:
    return "ok";
  case NKQ_PARTIAL_FAILURE:
    return "partial failure";
  case NKQ_ERR_INTERNAL:
    return "internal error";
  default:
    if (status >= NKQ_ERR_INVALID_ARGUMENT && status <= NKQ_ERR_IO) {
      return nkq::to_string(static_cast<nkq::ErrorCode>(status));
    }
    return "unknown status";
  }
}

nkq_status nkq_problem_ids(const char **json_out) {
  return guarded([&] {
    check_out(json_out, "json_out");
    g_buffer = json(nkq::problem_ids()).dump();
    *json_out = g_buffer.c_str();
    return NKQ_OK;
  });
}

nkq_status nkq_problem_create(const char *id, const char *overrides_json, nkq_problem **out) {
  return guarded([&] {
    check_out(id, "id");
    check_out(out, "out");
    *out = nullptr;
    auto p = new nkq_problem{nkq::make_problem(id, overrides_json ? overrides_json : "{}")};
    *out = p;
    return NKQ_OK;
  });
}

void nkq_problem_destroy(nkq_problem *problem) { delete problem; }

nkq_status nkq_problem_describe(const nkq_problem *problem, const char **json_out) {
  return guarded([&] {
    check_out(problem, "problem");
    check_out(json_out, "json_out");
    const auto &p = problem->problem;
    json targets = json::array();
    for (const auto &t : p.targets) targets.push_back(t.name);
    json j = {{"id", p.id},
              {"dim_x", p.dim_x},
              {"dim_theta", p.dim_theta},
              {"outputs", p.outputs},
              {"targets", targets},
              {"true_value", p.true_value ? json(*p.true_value) : json(nullptr)},
              {"truth_provenance", p.truth_provenance},
              {"default_change_of_variable", p.default_change_of_variable}};
    g_buffer = j.dump(2);
    *json_out = g_buffer.c_str();
    return NKQ_OK;
  });
}

nkq_status nkq_problem_evaluations(const nkq_problem *problem, uint64_t *count) {
  return guarded([&] {
    check_out(problem, "problem");
    check_out(count, "count");
    *count = problem->problem.g_evaluations->load();
    return NKQ_OK;
  });
}

nkq_status nkq_estimate(const nkq_problem *problem, const char *config_json, nkq_record *out) {
  return guarded([&] {
    check_out(problem, "problem");
    check_out(out, "out");
    nkq::SweepSpec spec = parse_spec(config_json);
    if (spec.estimators.empty()) spec.estimators.push_back("nkq");
    nkq::require(spec.estimators.size() == 1, nkq::ErrorCode::Config,
                 "estimate takes exactly one estimator");
    nkq::require(spec.budgets.size() == 1, nkq::ErrorCode::Config,
                 "estimate takes exactly one budget (delta, cost, or N and T)");
    spec.validate();
    const auto kind = nkq::parse_estimator(spec.estimators.front());
    const auto plan =
        nkq::plan_cell(problem->problem, kind, spec.budgets.front(), spec.levels, spec.mlmc_n0);
    g_record = nkq::run_single(problem->problem, kind, plan, spec, 0, spec.seed);
    fill(g_record, out);
    return NKQ_OK;
  });
}

nkq_status nkq_sweep_run(const char *spec_json, nkq_sweep **out) {
  return guarded([&] {
    check_out(out, "out");
    *out = nullptr;
    const nkq::SweepSpec spec = parse_spec(spec_json);
    auto s = new nkq_sweep{nkq::run_sweep(spec), {}, {}};
    *out = s;
    if (!s->result.failures.empty()) {
      g_last_error = s->result.failures.front();
      return NKQ_PARTIAL_FAILURE;
    }
    return NKQ_OK;
  });
}

nkq_status nkq_sweep_read_csv(const char *path, nkq_sweep **out) {
  return guarded([&] {
    check_out(path, "path");
    check_out(out, "out");
    *out = nullptr;
    auto s = new nkq_sweep{};
    try {
      s->result.records = nkq::read_csv(std::string(path));
    } catch (...) {
      delete s;
      throw;
    }
    *out = s;
    return NKQ_OK;
  });
}

void nkq_sweep_destroy(nkq_sweep *sweep) { delete sweep; }

size_t nkq_sweep_record_count(const nkq_sweep *sweep) {
  return sweep ? sweep->result.records.size() : 0;
}

nkq_status nkq_sweep_record(const nkq_sweep *sweep, size_t index, nkq_record *out) {
  return guarded([&] {
    check_out(sweep, "sweep");
    check_out(out, "out");
    nkq::require(index < sweep->result.records.size(), nkq::ErrorCode::InvalidArgument,
                 "record index out of range");
    fill(sweep->result.records[index], out);
    return NKQ_OK;
  });
}

size_t nkq_sweep_failure_count(const nkq_sweep *sweep) {
  return sweep ? sweep->result.failures.size() : 0;
}

const char *nkq_sweep_failure(const nkq_sweep *sweep, size_t index) {
  if (!sweep || index >= sweep->result.failures.size()) return nullptr;
  return sweep->result.failures[index].c_str();
}

nkq_status nkq_sweep_write_csv(const nkq_sweep *sweep, const char *path) {
  return guarded([&] {
    check_out(sweep, "sweep");
    check_out(path, "path");
    nkq::write_csv(std::string(path), sweep->result.records);
    return NKQ_OK;
  });
}

nkq_status nkq_sweep_summary(const nkq_sweep *sweep, const char **json_out) {
  return guarded([&] {
    check_out(sweep, "sweep");
    check_out(json_out, "json_out");
    auto *s = const_cast<nkq_sweep *>(sweep);
    s->summary_json = summary_json(sweep->result.records);
    *json_out = s->summary_json.c_str();
    return NKQ_OK;
  });
}

nkq_status nkq_sweep_fit(const nkq_sweep *sweep, const char **json_out) {
  return guarded([&] {
    check_out(sweep, "sweep");
    check_out(json_out, "json_out");
    auto *s = const_cast<nkq_sweep *>(sweep);
    s->fit_json = fit_json(sweep->result.records);
    *json_out = s->fit_json.c_str();
    return NKQ_OK;
  });
}

nkq_status nkq_tune(const char *spec_json, const char **json_out) {
  return guarded([&] {
    check_out(json_out, "json_out");
    const nkq::SweepSpec spec = parse_spec(spec_json);
    const auto t = nkq::tune_lambda0(spec);
    json grid = json::array();
    std::size_t k = 0;
    for (double lx : t.grid_x) {
      for (double lt : t.grid_theta) {
        grid.push_back({{"lambda0_x", lx}, {"lambda0_theta", lt}, {"score", t.scores[k++]}});
      }
    }
    json j = {{"lambda0_x", t.lambda0_x},
              {"lambda0_theta", t.lambda0_theta},
              {"criterion", t.used_truth ? "mean_abs_error" : "leave_one_out_residual"},
              {"grid", grid}};
    if (!spec.output.empty()) nkq::write_csv(spec.output, t.records);
    g_buffer = j.dump(2);
    *json_out = g_buffer.c_str();
    return NKQ_OK;
  });
}

}  // extern "C"
