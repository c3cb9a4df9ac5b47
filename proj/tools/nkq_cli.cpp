// Command-line front end over the C interface.
#include "nkq/nkq.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

int exit_code(nkq_status s) {
  switch (s) {
  case NKQ_OK:
    return kExitOk;
  case NKQ_PARTIAL_FAILURE:
    return kExitPartial;
  case NKQ_ERR_CONFIG:
  case NKQ_ERR_INVALID_ARGUMENT:
  case NKQ_ERR_UNSUPPORTED:
  case NKQ_ERR_NO_CLOSED_FORM_KME:
    return kExitConfig;
  default:
    return kExitRuntime;
  }
}

int report(nkq_status s) {
  if (s != NKQ_OK) std::cerr << "nkq: " << nkq_last_error() << '\n';
  return exit_code(s);
}

// Flags shared by estimate, sweep and tune. Unset flags leave the config file
// value alone.
struct RunFlags {
  std::string config;
  std::optional<std::string> problem;
  std::optional<std::string> overrides;
  std::vector<std::string> estimators;
  std::vector<double> delta_grid;
  std::vector<double> cost_grid;
  std::optional<long long> replicates;
  std::optional<unsigned long long> seed;
  std::optional<std::string> out;
  bool qmc = false;
  std::optional<double> lambda0_x;
  std::optional<double> lambda0_theta;
  std::optional<long long> levels;
  std::optional<long long> workers;
  std::optional<long long> N;
  std::optional<long long> T;
  std::optional<bool> cov;

  void add_to(CLI::App *app, bool single) {
    app->add_option("--config", config, "JSON config file; flags override its values");
    app->add_option("--problem", problem, "problem id");
    app->add_option("--overrides", overrides, "problem parameter overrides as a JSON object");
    app->add_option("--estimator", estimators, "nmc, nkq, mlmc or mlkq")->delimiter(',');
    app->add_option("--delta-grid", delta_grid, "target accuracies")->delimiter(',');
    app->add_option("--cost-grid", cost_grid, "cost budgets in g evaluations")->delimiter(',');
    app->add_option("--seed", seed, "base seed");
    app->add_option("--out", out, "CSV output path");
    app->add_flag("--qmc", qmc, "scrambled Sobol points instead of i.i.d.");
    app->add_option("--lambda0-x", lambda0_x, "Stage I regularisation constant");
    app->add_option("--lambda0-theta", lambda0_theta, "Stage II regularisation constant");
    app->add_option("--levels", levels, "levels L for mlmc / mlkq");
    app->add_option("--change-of-variable", cov, "true or false; default per problem");
    app->add_option("--N", N, "inner sample size (explicit cell)");
    app->add_option("--T", T, "outer sample size (explicit cell)");
    if (!single) {
      app->add_option("--replicates", replicates, "replicates per cell");
      app->add_option("--workers", workers, "worker threads");
    }
  }

  json build() const {
    json j = json::object();
    if (!config.empty()) {
      std::ifstream f(config);
      if (!f) throw std::runtime_error("cannot open config file '" + config + "'");
      j = json::parse(f);
    }
    if (problem) j["problem"] = *problem;
    if (overrides) j["overrides"] = json::parse(*overrides);
    if (!estimators.empty()) {
      j.erase("estimator");
      j["estimators"] = estimators;
    }
    if (!delta_grid.empty() || !cost_grid.empty() || N || T) {
      for (const char *k : {"delta_grid", "cost_grid", "cells", "delta", "cost", "N", "T"}) {
        j.erase(k);
      }
    }
    if (!delta_grid.empty()) j["delta_grid"] = delta_grid;
    if (!cost_grid.empty()) j["cost_grid"] = cost_grid;
    if (N) j["N"] = *N;
    if (T) j["T"] = *T;
    if (replicates) j["replicates"] = *replicates;
    if (seed) j["seed"] = *seed;
    if (out) j["out"] = *out;
    if (qmc) j["point_source"] = "qmc";
    if (lambda0_x) j["lambda0_x"] = *lambda0_x;
    if (lambda0_theta) j["lambda0_theta"] = *lambda0_theta;
    if (levels) j["levels"] = *levels;
    if (workers) j["workers"] = *workers;
    if (cov) j["nkq"]["change_of_variable"] = *cov;
    return j;
  }
};

json record_json(const nkq_record &r) {
  return {{"problem", r.problem},
          {"estimator", r.estimator},
          {"point_source", r.point_source},
          {"cost", r.cost},
          {"N", r.N},
          {"T", r.T},
          {"L", r.L},
          {"seed", r.seed},
          {"estimate", r.estimate},
          {"abs_error", std::isnan(r.abs_error) ? json(nullptr) : json(r.abs_error)},
          {"wall_millis", r.wall_millis}};
}

int cmd_problems(const std::optional<std::string> &id) {
  if (!id) {
    const char *ids = nullptr;
    if (const auto s = nkq_problem_ids(&ids); s != NKQ_OK) return report(s);
    for (const auto &name : json::parse(ids)) std::cout << name.get<std::string>() << '\n';
    return kExitOk;
  }
  nkq_problem *p = nullptr;
  if (const auto s = nkq_problem_create(id->c_str(), "{}", &p); s != NKQ_OK) return report(s);
  const char *desc = nullptr;
  const auto s = nkq_problem_describe(p, &desc);
  if (s == NKQ_OK) std::cout << desc << '\n';
  nkq_problem_destroy(p);
  return report(s);
}

int cmd_estimate(const RunFlags &flags) {
  json cfg = flags.build();
  const std::string problem = cfg.value("problem", std::string("synthetic"));
  const std::string overrides = cfg.contains("overrides") ? cfg["overrides"].dump() : "{}";
  cfg.erase("problem");
  cfg.erase("overrides");
  cfg.erase("out");
  nkq_problem *p = nullptr;
  if (const auto s = nkq_problem_create(problem.c_str(), overrides.c_str(), &p); s != NKQ_OK) {
    return report(s);
  }
  nkq_record rec{};
  const std::string text = cfg.dump();
  const auto s = nkq_estimate(p, text.c_str(), &rec);
  if (s == NKQ_OK) std::cout << record_json(rec).dump(2) << '\n';
  nkq_problem_destroy(p);
  return report(s);
}

int cmd_sweep(const RunFlags &flags) {
  const std::string text = flags.build().dump();
  nkq_sweep *sweep = nullptr;
  const auto s = nkq_sweep_run(text.c_str(), &sweep);
  if (!sweep) return report(s);
  const char *summary = nullptr;
  if (nkq_sweep_summary(sweep, &summary) == NKQ_OK) std::cout << summary << '\n';
  for (std::size_t i = 0; i < nkq_sweep_failure_count(sweep); ++i) {
    std::cerr << "nkq: cell failed: " << nkq_sweep_failure(sweep, i) << '\n';
  }
  nkq_sweep_destroy(sweep);
  return exit_code(s);
}

int cmd_from_csv(const std::string &path, bool fit) {
  nkq_sweep *sweep = nullptr;
  if (const auto s = nkq_sweep_read_csv(path.c_str(), &sweep); s != NKQ_OK) return report(s);
  const char *out = nullptr;
  const auto s = fit ? nkq_sweep_fit(sweep, &out) : nkq_sweep_summary(sweep, &out);
  if (s == NKQ_OK) std::cout << out << '\n';
  nkq_sweep_destroy(sweep);
  return report(s);
}

int cmd_tune(const RunFlags &flags) {
  const std::string text = flags.build().dump();
  const char *out = nullptr;
  const auto s = nkq_tune(text.c_str(), &out);
  if (s == NKQ_OK) std::cout << out << '\n';
  return report(s);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Nested kernel quadrature estimators and convergence studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nkq_version()));

  std::optional<std::string> describe_id;
  auto *problems = app.add_subcommand("problems", "list built-in problems or describe one");
  problems->add_option("--problem", describe_id, "problem id to describe");

  RunFlags est_flags;
  auto *estimate = app.add_subcommand("estimate", "one estimate");
  est_flags.add_to(estimate, true);

  RunFlags sweep_flags;
  auto *sweep = app.add_subcommand("sweep", "replicated sweep over a budget grid");
  sweep_flags.add_to(sweep, false);

  RunFlags tune_flags;
  auto *tune = app.add_subcommand("tune", "lambda0 grid search at the first budget");
  tune_flags.add_to(tune, false);

  std::string fit_in;
  auto *fit = app.add_subcommand("fit", "log-log rate fit of a sweep CSV");
  fit->add_option("--in", fit_in, "sweep CSV")->required();

  std::string sum_in;
  auto *summarize = app.add_subcommand("summarize", "per-cell summary of a sweep CSV");
  summarize->add_option("--in", sum_in, "sweep CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*problems) return cmd_problems(describe_id);
    if (*estimate) return cmd_estimate(est_flags);
    if (*sweep) return cmd_sweep(sweep_flags);
    if (*tune) return cmd_tune(tune_flags);
    if (*fit) return cmd_from_csv(fit_in, true);
    if (*summarize) return cmd_from_csv(sum_in, false);
  } catch (const std::exception &e) {
    std::cerr << "nkq: config: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
