// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include "nkq/baselines.hpp"
#include "nkq/embeddings.hpp"
#include "nkq/error.hpp"
#include "nkq/harness.hpp"
#include "nkq/nested.hpp"
#include "nkq/problems.hpp"
#include "nkq/quadrature.hpp"
#include "nkq/sampling.hpp"
#include "nkq/transform.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace nkq;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool ok, const std::string &detail, Clock::time_point start) {
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%s AC%d %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

double mean_of(Index reps, const std::function<double(std::uint64_t)> &run) {
  double s = 0.0;
  for (Index r = 0; r < reps; ++r) s += run(static_cast<std::uint64_t>(r));
  return s / static_cast<double>(reps);
}

NkqConfig nkq_cfg(Index N, Index T, std::uint64_t seed) {
  NkqConfig c;
  c.N = N;
  c.T = T;
  c.seed = seed;
  return c;
}

std::string fmt(const char *f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double nkq_error(const NestedProblem &p, Index N, Index T, std::uint64_t seed) {
  return std::abs(nkq::nkq(p, nkq_cfg(N, T, seed)).estimate - *p.true_value);
}

double nmc_error(const NestedProblem &p, Index N, Index T, std::uint64_t seed) {
  return std::abs(nmc(p, N, T, PointSource::IID, seed) - *p.true_value);
}

void ac1() {
  const auto t0 = Clock::now();
  const auto p = synthetic(1);
  const double truth = 121.0 / 294.0;
  const double err = mean_of(200, [&](std::uint64_t r) {
    return std::abs(nkq::nkq(p, nkq_cfg(128, 128, 1000 + r)).estimate - truth);
  });
  report(1, err < 2e-3, fmt("synthetic NKQ N=T=128 mean error %.3g < 2e-3", err), t0);
}

void ac2() {
  const auto t0 = Clock::now();
  const auto p = synthetic(1);
  std::vector<double> costs, e_nkq, e_nmc, c_nmc;
  for (double cost : {1e2, 1e3, 1e4, 1e5}) {
    const auto k = plan_cell(p, EstimatorKind::NKQ, BudgetPoint::cost(cost), 0);
    const auto m = plan_cell(p, EstimatorKind::NMC, BudgetPoint::cost(cost), 0);
    costs.push_back(static_cast<double>(k.N * k.T));
    c_nmc.push_back(static_cast<double>(m.N * m.T));
    e_nkq.push_back(mean_of(200, [&](std::uint64_t r) { return nkq_error(p, k.N, k.T, 2000 + r); }));
    e_nmc.push_back(mean_of(200, [&](std::uint64_t r) { return nmc_error(p, m.N, m.T, 3000 + r); }));
  }
  const double s_nkq = fit_loglog_slope(costs, e_nkq).slope;
  const double s_nmc = fit_loglog_slope(c_nmc, e_nmc).slope;
  const bool ok = s_nkq >= -1.4 && s_nkq <= -0.6 && s_nmc >= -0.45 && s_nmc <= -0.22;
  report(2, ok, fmt("slopes NKQ %.3f in [-1.4,-0.6], NMC %.3f in [-0.45,-0.22]", s_nkq, s_nmc),
         t0);
}

void ac3() {
  const auto t0 = Clock::now();
  const auto p = finance();
  std::vector<double> costs, errs;
  for (Index n : {16, 51, 162, 512}) {
    costs.push_back(static_cast<double>(n * n));
    errs.push_back(mean_of(50, [&](std::uint64_t r) { return nkq_error(p, n, n, 4000 + r); }));
  }
  const auto m = plan_cell(p, EstimatorKind::NMC, BudgetPoint::cost(512.0 * 512.0), 0);
  const double e_nmc =
      mean_of(50, [&](std::uint64_t r) { return nmc_error(p, m.N, m.T, 5000 + r); });
  const double rate = fit_loglog_slope(costs, errs).rate;
  const bool ok = errs.back() < e_nmc && rate >= 1.5 && rate <= 2.5;
  report(3,
         ok,
         fmt("finance NKQ error %.3g < NMC %.3g; rate %.2f in [1.5,2.5]", errs.back(), e_nmc,
             rate),
         t0);
}

void ac4() {
  const auto t0 = Clock::now();
  const auto p = evppi();
  const double big = nmc(p, 2000, 2000, PointSource::IID, 6000);
  const double rel = std::abs(big - 538.0) / 538.0;
  const auto k = plan_cell(p, EstimatorKind::NKQ, BudgetPoint::cost(1e5), 0);
  const auto m = plan_cell(p, EstimatorKind::NMC, BudgetPoint::cost(1e5), 0);
  const double e_nkq =
      mean_of(20, [&](std::uint64_t r) { return std::abs(nkq::nkq(p, nkq_cfg(k.N, k.T, 7000 + r)).estimate - 538.0); });
  const double e_nmc =
      mean_of(20, [&](std::uint64_t r) { return std::abs(nmc(p, m.N, m.T, PointSource::IID, 8000 + r) - 538.0); });
  const bool ok = rel < 0.1 && e_nkq <= e_nmc;
  report(4, ok,
         fmt("EVPPI NMC(2000x2000) %.1f vs 538; NKQ error %.3g <= NMC %.3g", big, e_nkq, e_nmc),
         t0);
}

bool kme_suite(double &worst) {
  worst = 0.0;
  Vector m(1), s(1);
  m << 0.3;
  s << 1.2;
  const std::vector<std::pair<KernelSpec, MeasureSpec>> pairs = {
      {KernelSpec::make(KernelFamily::Matern12, 0.4), MeasureSpec::uniform01(1)},
      {KernelSpec::make(KernelFamily::Matern32, 0.4), MeasureSpec::uniform01(1)},
      {KernelSpec::make(KernelFamily::Gaussian, 0.4), MeasureSpec::uniform01(1)},
      {KernelSpec::make(KernelFamily::Gaussian, 0.9), MeasureSpec::gaussian_diag(m, s)},
      {KernelSpec::make(KernelFamily::Matern12, 0.9), MeasureSpec::gaussian_diag(m, s)},
  };
  for (const auto &[k, mu] : pairs) {
    for (double y : {0.05, 0.5, 0.93}) {
      const double exact = kme_at(k, mu, Point(&y, 1));
      const double quad = kme_oracle(k, mu, Point(&y, 1), 1000000);
      worst = std::max(worst, std::abs(exact - quad) / quad);
    }
  }
  return worst < 1e-6;
}

bool interpolation_suite(double &worst) {
  worst = 0.0;
  const auto k = KernelSpec::make(KernelFamily::Matern32, 0.2);
  const auto mu = MeasureSpec::uniform01(1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointMatrix x(12, 1);
  for (Index i = 0; i < 12; ++i) x(i, 0) = u(rng);
  Vector z(12);
  for (Index i = 0; i < 12; ++i) z[i] = kme_at(k, mu, row_of(x, i));
  const auto w = kq_weights(k, x, z, 0.0);
  Vector c(12);
  for (Index i = 0; i < 12; ++i) c[i] = u(rng) - 0.5;
  Vector h(12);
  for (Index i = 0; i < 12; ++i) {
    h[i] = 0.0;
    for (Index j = 0; j < 12; ++j) h[i] += c[j] * eval_kernel(k, row_of(x, i), row_of(x, j));
  }
  double truth = 0.0;
  for (Index j = 0; j < 12; ++j) truth += c[j] * z[j];
  worst = std::abs(kq_estimate(w.weights, h) - truth) / std::abs(truth);
  return worst < 1e-8;
}

void ac5() {
  const auto t0 = Clock::now();
  std::vector<std::string> bad;
  double kme_err = 0.0, interp_err = 0.0;
  if (!kme_suite(kme_err)) bad.push_back("kme");
  if (!interpolation_suite(interp_err)) bad.push_back("interpolation");

  for (const auto &id : problem_ids()) {
    const auto p = make_problem(id);
    for (auto src : {PointSource::IID, PointSource::QMC}) {
      NkqConfig c = nkq_cfg(8, 6, 21);
      c.point_source = src;
      c.uniform_weights = true;
      if (nkq::nkq(p, c).estimate != nmc(p, 8, 6, src, 21)) bad.push_back("uniform hook " + id);
    }
  }

  auto lin = synthetic(1);
  lin.targets[0].f = [](std::span<const double> j) { return j[0]; };
  MlConfig ml;
  ml.L = 3;
  ml.N_levels = {2, 4, 8, 16};
  ml.T_levels = {64, 16, 4, 2};
  ml.seed = 3;
  if (mlmc(lin, ml).estimate != nmc(lin, 2, 64, PointSource::IID, 3)) bad.push_back("cancellation");

  const auto fin = finance();
  MlConfig l0;
  l0.L = 0;
  l0.N_levels = {16};
  l0.T_levels = {40};
  l0.seed = 9;
  if (mlmc(fin, l0).estimate != nmc(fin, 16, 40, PointSource::IID, 9)) bad.push_back("mlmc L=0");
  NkqConfig base;
  if (mlkq(fin, l0, base).estimate != nkq::nkq(fin, nkq_cfg(16, 40, 9)).estimate) {
    bad.push_back("mlkq L=0");
  }

  const auto s = sobol(3, 1);
  if (s.points(0, 0) != 0.5 || s.points(1, 0) != 0.75 || s.points(2, 0) != 0.25) {
    bad.push_back("sobol");
  }
  const double q = norm_inv_cdf(0.975);
  if (std::abs(q - 1.959964) > 1e-5) bad.push_back("norm_inv_cdf");

  std::string detail = fmt("oracle suite: kme rel %.2g, interpolation rel %.2g", kme_err, interp_err);
  for (const auto &b : bad) detail += "; failed " + b;
  report(5, bad.empty(), detail, t0);
}

void ac6() {
  const auto t0 = Clock::now();
  const auto p = synthetic(1);
  PointMatrix q(100, 1);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < 100; ++i) q(i, 0) = u(rng);
  std::vector<double> rms;
  for (Index T : {8, 32, 128}) {
    rms.push_back(mean_of(50, [&](std::uint64_t r) {
      const Vector pred = ckq(p, nkq_cfg(128, T, 9000 + r), q);
      double ss = 0.0;
      for (Index i = 0; i < 100; ++i) {
        const double d = pred[i] - synthetic_inner(q(i, 0));
        ss += d * d;
      }
      return std::sqrt(ss / 100.0);
    }));
  }
  const bool ok = rms[1] < rms[0] && rms[2] < rms[1];
  report(6, ok, fmt("CKQ RMS at T=8,32,128: %.3g, %.3g, %.3g", rms[0], rms[1], rms[2]), t0);
}

void ac7() {
  const auto t0 = Clock::now();
  const auto p = synthetic(1);
  const BudgetPoint b = BudgetPoint::cost(1e4);
  // MLKQ with three levels; MLMC with its default five.
  const auto k = plan_cell(p, EstimatorKind::NKQ, b, 0);
  const auto mk = plan_cell(p, EstimatorKind::MLKQ, b, 3);
  const auto mm = plan_cell(p, EstimatorKind::MLMC, b, 5);
  const double truth = *p.true_value;
  const double e_nkq =
      mean_of(100, [&](std::uint64_t r) { return nkq_error(p, k.N, k.T, 10000 + r); });
  const double e_mlkq = mean_of(100, [&](std::uint64_t r) {
    MlConfig c = mk.levels;
    c.seed = 11000 + r;
    return std::abs(mlkq(p, c, NkqConfig{}).estimate - truth);
  });
  const double e_mlmc = mean_of(100, [&](std::uint64_t r) {
    MlConfig c = mm.levels;
    c.seed = 12000 + r;
    return std::abs(mlmc(p, c).estimate - truth);
  });
  const bool ok = e_nkq < e_mlkq && e_mlkq < 2.0 * e_mlmc;
  report(7, ok, fmt("cost 1e4 errors NKQ %.3g < MLKQ %.3g < 2 x MLMC %.3g", e_nkq, e_mlkq, e_mlmc),
         t0);
}

}  // namespace

int main() {
  const std::vector<void (*)()> checks = {ac1, ac2, ac3, ac4, ac5, ac6, ac7};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      checks[i]();
    } catch (const std::exception &e) {
      std::printf("FAIL AC%zu exception: %s\n", i + 1, e.what());
      ++failures;
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, checks.size());
  return failures == 0 ? 0 : 1;
}
