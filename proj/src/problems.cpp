#include "nkq/problems.hpp"

#include "nkq/error.hpp"
#include "nkq/quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nkq {

namespace {

std::size_t us(Index i) { return static_cast<std::size_t>(i); }

KernelSpec family_spec(KernelFamily family, Composition composition) {
  KernelSpec k;
  k.family = family;
  k.composition = composition;
  return k;
}

// Lower Cholesky factor of a covariance, with the jitter policy used for Gram
// matrices. Returns the jittered covariance through `jittered`.
Matrix jittered_cholesky(const Matrix &cov, double scale, Matrix &jittered) {
  const RegularizedSolver probe(cov, 0.0, scale);
  jittered = cov;
  jittered.diagonal().array() += probe.jitter();
  Eigen::LLT<Matrix> llt(jittered);
  return llt.matrixL();
}

}  // namespace

NestedProblem synthetic(Index d) {
  require(d >= 1, ErrorCode::InvalidArgument, "synthetic: d must be >= 1");
  NestedProblem p;
  p.id = d == 1 ? "synthetic" : "synthetic-" + std::to_string(d);
  p.dim_x = d;
  p.dim_theta = d;
  p.outer = StageModel::direct(MeasureSpec::uniform01(d));
  p.conditional = [d](Point) { return StageModel::direct(MeasureSpec::uniform01(d)); };
  p.g = [](Point x, Point theta, std::span<double> out) {
    double s = 0.0;
    for (double v : x) s += v * v * std::sqrt(v);
    for (double v : theta) s += v * v * std::sqrt(v);
    out[0] = s;
  };
  const Composition comp = d == 1 ? Composition::Isotropic : Composition::TensorProduct;
  p.kernel_x = family_spec(KernelFamily::Matern32, comp);
  p.targets.push_back({"I", [](std::span<const double> j) { return j[0] * j[0]; },
                       family_spec(KernelFamily::Matern32, comp)});
  p.smoothness_x = 2.0;
  p.smoothness_theta = 2.0;
  p.alloc_rate_x = static_cast<double>(d) / 2.0;
  p.alloc_rate_theta = static_cast<double>(d) / 2.0;
  const double dd = static_cast<double>(d);
  p.true_value = 16.0 / 49.0 * dd * dd + 25.0 / 294.0 * dd;
  p.truth_provenance = "exact: 16/49 d^2 + 25/294 d";
  return p;
}

double synthetic_inner(double theta) { return 2.0 / 7.0 + std::pow(theta, 2.5); }

double butterfly_payoff(const FinanceParams &p, double x) {
  const double mid = 0.5 * (p.k1 + p.k2);
  return std::max(x - p.k1, 0.0) + std::max(x - p.k2, 0.0) - 2.0 * std::max(x - mid, 0.0);
}

NestedProblem finance(const FinanceParams &params) {
  require(params.s0 > 0.0 && params.sigma > 0.0 && params.eta > 0.0 &&
              params.zeta > params.eta,
          ErrorCode::InvalidArgument, "finance: need S0, sigma, eta > 0 and zeta > eta");
  const FinanceParams pr = params;
  const double var_outer = pr.sigma * pr.sigma * pr.eta;
  const double var_inner = pr.sigma * pr.sigma * (pr.zeta - pr.eta);
  const Vector lm_outer = Vector::Constant(1, std::log(pr.s0) - 0.5 * var_outer);
  const Vector ls_outer = Vector::Constant(1, std::sqrt(var_outer));
  const Vector ls_inner = Vector::Constant(1, std::sqrt(var_inner));

  NestedProblem p;
  p.id = "finance";
  p.outer = StageModel::with_change_of_variable(
      MeasureSpec::lognormal(lm_outer, ls_outer), MeasureSpec::uniform01(1),
      TransformMap::lognormal_inv_cdf(lm_outer, ls_outer));
  p.conditional = [ls_inner, var_inner](Point theta) {
    const Vector lm = Vector::Constant(1, std::log(theta[0]) - 0.5 * var_inner);
    return StageModel::with_change_of_variable(MeasureSpec::lognormal(lm, ls_inner),
                                               MeasureSpec::uniform01(1),
                                               TransformMap::lognormal_inv_cdf(lm, ls_inner));
  };
  p.g = [pr](Point x, Point, std::span<double> out) {
    out[0] = butterfly_payoff(pr, x[0]) - butterfly_payoff(pr, (1.0 + pr.shock) * x[0]);
  };
  p.kernel_x = family_spec(KernelFamily::Matern12, Composition::Isotropic);
  p.targets.push_back({"I", [](std::span<const double> j) { return std::max(j[0], 0.0); },
                       family_spec(KernelFamily::Matern12, Composition::Isotropic)});
  p.smoothness_x = 1.0;
  p.smoothness_theta = 1.0;
  p.alloc_rate_x = 1.0;
  p.alloc_rate_theta = 1.0;
  p.default_change_of_variable = true;
  p.true_value = 3.077;
  p.truth_provenance = "published reference value";
  return p;
}

EvppiModel evppi_model(EvppiVariant variant) {
  // x1..x17, theta1, theta2
  const double means[19] = {1000, 0.1,  5.2, 400,  0.3, 3.0,  0.25, -0.1, 0.5, 1500,
                            0.08, 6.1,  0.3, 3.0,  0.2, -0.1, 0.5,  0.7,  0.8};
  const double stds[19] = {1.0,  0.02, 1.0, 200, 0.1,  0.5,  0.1, 0.02, 0.2, 1.0,
                           0.02, 1.0,  0.05, 1.0, 0.05, 0.02, 0.2, 0.1,  0.1};
  EvppiModel m;
  m.mean.resize(19);
  m.cov = Matrix::Zero(19, 19);
  for (int i = 0; i < 19; ++i) {
    m.mean[i] = means[i];
    m.cov(i, i) = stds[i] * stds[i];
  }
  const Index linked[4] = {5, 13, 17, 18};  // x6, x14, theta1, theta2
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const Index i = linked[a];
      const Index j = linked[b];
      m.cov(i, j) = m.cov(j, i) = 0.6 * stds[i] * stds[j];
    }
  }
  if (variant == EvppiVariant::Durations) {
    m.conditioned = {5, 13};
  } else {
    m.conditioned = {17, 18};
  }
  for (Index i = 0; i < 19; ++i) {
    if (std::find(m.conditioned.begin(), m.conditioned.end(), i) == m.conditioned.end()) {
      m.rest.push_back(i);
    }
  }
  Eigen::LLT<Matrix> llt(m.cov);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::InvalidArgument, "EVPPI covariance is not positive definite");
  }
  return m;
}

void evppi_outcomes(std::span<const double> v, double &g1, double &g2) {
  // v[0] = x1, ..., v[16] = x17, v[17] = theta1, v[18] = theta2
  g1 = 1e4 * (v[17] * v[4] * v[5] + v[6] * v[7] * v[8]) - (v[0] + v[1] * v[2] * v[3]);
  g2 = 1e4 * (v[18] * v[12] * v[13] + v[14] * v[15] * v[16]) - (v[9] + v[10] * v[11] * v[3]);
}

NestedProblem evppi(EvppiVariant variant) {
  const EvppiModel m = evppi_model(variant);
  const auto nc = static_cast<Index>(m.conditioned.size());
  const auto nr = static_cast<Index>(m.rest.size());
  Vector mu_c(nc), mu_r(nr);
  Matrix s_cc(nc, nc), s_rc(nr, nc), s_rr(nr, nr);
  for (Index i = 0; i < nc; ++i) {
    mu_c[i] = m.mean[m.conditioned[us(i)]];
    for (Index j = 0; j < nc; ++j) s_cc(i, j) = m.cov(m.conditioned[us(i)], m.conditioned[us(j)]);
  }
  for (Index i = 0; i < nr; ++i) {
    mu_r[i] = m.mean[m.rest[us(i)]];
    for (Index j = 0; j < nc; ++j) s_rc(i, j) = m.cov(m.rest[us(i)], m.conditioned[us(j)]);
    for (Index j = 0; j < nr; ++j) s_rr(i, j) = m.cov(m.rest[us(i)], m.rest[us(j)]);
  }
  // Gaussian conditioning: x | theta ~ N(mu_r + K (theta - mu_c), S_rr - K S_cr).
  const Eigen::LLT<Matrix> llt_cc(s_cc);
  const Matrix gain = llt_cc.solve(s_rc.transpose()).transpose();
  Matrix cond_cov = s_rr - gain * s_rc.transpose();
  cond_cov = 0.5 * (cond_cov + cond_cov.transpose());
  const Eigen::LLT<Matrix> llt_r(cond_cov);
  if (llt_r.info() != Eigen::Success) {
    fail(ErrorCode::InvalidArgument, "EVPPI conditional covariance is not positive definite");
  }
  const Matrix chol_r = llt_r.matrixL();
  const Matrix chol_c = llt_cc.matrixL();

  NestedProblem p;
  p.id = variant == EvppiVariant::Durations ? "evppi" : "evppi-response";
  p.dim_x = nr;
  p.dim_theta = nc;
  p.outputs = 2;
  // Uniform base for theta: the Matern12 rule on the max target is much less
  // biased on a bounded domain than under a Gaussian base.
  p.outer = StageModel::with_change_of_variable(
      MeasureSpec::gaussian_full(mu_c, s_cc), MeasureSpec::uniform01(nc),
      TransformMap::composite(
          {TransformMap::normal_inv_cdf(), TransformMap::affine_gaussian(mu_c, chol_c)}));
  p.conditional = [=](Point theta) {
    Vector t(nc);
    for (Index j = 0; j < nc; ++j) t[j] = theta[us(j)];
    const Vector mean = mu_r + gain * (t - mu_c);
    MeasureSpec native = MeasureSpec::standard_normal(nr);
    native.kind = MeasureKind::GaussianFull;
    native.mean = mean;
    native.std_dev.resize(0);
    native.cov = cond_cov;
    native.chol = chol_r;
    return StageModel::with_change_of_variable(std::move(native),
                                               MeasureSpec::standard_normal(nr),
                                               TransformMap::affine_gaussian(mean, chol_r));
  };
  const auto conditioned = m.conditioned;
  const auto rest = m.rest;
  p.g = [conditioned, rest](Point x, Point theta, std::span<double> out) {
    double v[19];
    for (std::size_t i = 0; i < rest.size(); ++i) v[rest[i]] = x[i];
    for (std::size_t i = 0; i < conditioned.size(); ++i) v[conditioned[i]] = theta[i];
    evppi_outcomes(v, out[0], out[1]);
  };
  p.kernel_x = family_spec(KernelFamily::Gaussian, Composition::Isotropic);
  p.targets.push_back({"I1",
                       [](std::span<const double> j) { return std::max(j[0], j[1]); },
                       family_spec(KernelFamily::Matern12, Composition::TensorProduct)});
  p.targets.push_back({"I2_1", [](std::span<const double> j) { return j[0]; },
                       family_spec(KernelFamily::Gaussian, Composition::Isotropic)});
  p.targets.push_back({"I2_2", [](std::span<const double> j) { return j[1]; },
                       family_spec(KernelFamily::Gaussian, Composition::Isotropic)});
  p.combine = [](std::span<const double> t) { return t[0] - std::max(t[1], t[2]); };
  p.alloc_rate_x = 1.0;
  p.alloc_rate_theta = 1.0;
  p.default_change_of_variable = true;
  if (variant == EvppiVariant::Durations) {
    p.true_value = 538.0;
    p.truth_provenance = "published reference value";
  } else {
    p.true_value = 248.0;
    p.truth_provenance = "computed: outer Monte Carlo over closed-form inner expectations";
  }
  return p;
}

NestedProblem gp_lookahead(const GpLookaheadParams &params) {
  require(params.lengthscale > 0.0 && params.amplitude > 0.0, ErrorCode::InvalidArgument,
          "gp_lookahead: lengthscale and amplitude must be positive");
  const double ell = params.lengthscale;
  const double amp = params.amplitude;
  auto k = [ell, amp](double a, double b) { return amp * std::exp(-std::abs(a - b) / ell); };
  auto kmat = [&](const std::vector<double> &a, const std::vector<double> &b) {
    Matrix m(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = k(a[i], b[j]);
    return m;
  };

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::vector<double> zd = {unif(rng), unif(rng)};
  Vector yd(2);
  for (Index i = 0; i < 2; ++i) yd[i] = params.zero_observations ? 0.0 : std::sin(3.0 * zd[us(i)]);
  const double r = params.reward_threshold.value_or(yd.maxCoeff());

  const std::vector<double> z = {params.z1, params.z2};
  const std::vector<double> zp = {params.zp1, params.zp2};

  // theta = f(z) | D
  Matrix kdd_j;
  jittered_cholesky(kmat(zd, zd), amp, kdd_j);
  const Eigen::LLT<Matrix> llt_d(kdd_j);
  const Matrix kzd = kmat(z, zd);
  const Vector m_z = kzd * llt_d.solve(yd);
  Matrix c_z = kmat(z, z) - kzd * llt_d.solve(kzd.transpose());
  c_z = 0.5 * (c_z + c_z.transpose());
  Matrix c_z_j;
  const Matrix l_z = jittered_cholesky(c_z, amp, c_z_j);

  // x = f(z') | D, (z, theta): mean a + B theta
  std::vector<double> dp = zd;
  dp.insert(dp.end(), z.begin(), z.end());
  Matrix kpp_j;
  jittered_cholesky(kmat(dp, dp), amp, kpp_j);
  const Eigen::LLT<Matrix> llt_p(kpp_j);
  const Matrix kzp = kmat(zp, dp);
  const Matrix w = llt_p.solve(kzp.transpose()).transpose();  // 2 x 4
  const Vector a = w.leftCols(2) * yd;
  const Matrix b = w.rightCols(2);
  Matrix c_x = kmat(zp, zp) - w * kzp.transpose();
  c_x = 0.5 * (c_x + c_x.transpose());
  Matrix c_x_j;
  const Matrix l_x = jittered_cholesky(c_x, amp, c_x_j);

  NestedProblem p;
  p.id = "gp_lookahead";
  p.dim_x = 2;
  p.dim_theta = 2;
  p.outer = StageModel::with_change_of_variable(
      MeasureSpec::gaussian_full(m_z, c_z_j), MeasureSpec::uniform01(2),
      TransformMap::composite(
          {TransformMap::normal_inv_cdf(), TransformMap::affine_gaussian(m_z, l_z)}));
  p.conditional = [a, b, c_x_j, l_x](Point theta) {
    const Vector mean = a + b * Vector{{theta[0], theta[1]}};
    MeasureSpec native = MeasureSpec::standard_normal(2);
    native.kind = MeasureKind::GaussianFull;
    native.mean = mean;
    native.std_dev.resize(0);
    native.cov = c_x_j;
    native.chol = l_x;
    return StageModel::with_change_of_variable(
        std::move(native), MeasureSpec::uniform01(2),
        TransformMap::composite(
            {TransformMap::normal_inv_cdf(), TransformMap::affine_gaussian(mean, l_x)}));
  };
  p.g = [r](Point x, Point theta, std::span<double> out) {
    const double gx = std::max(std::max(x[0], x[1]) - r, 0.0);
    const double gt = std::max(std::max(theta[0], theta[1]) - r, 0.0);
    out[0] = (std::isfinite(gx) ? gx : 0.0) + (std::isfinite(gt) ? gt : 0.0);
  };
  p.kernel_x = family_spec(KernelFamily::Matern12, Composition::TensorProduct);
  p.targets.push_back({"I", [](std::span<const double> j) { return j[0]; },
                       family_spec(KernelFamily::Matern12, Composition::TensorProduct)});
  p.alloc_rate_x = 1.0;
  p.alloc_rate_theta = 1.0;
  p.default_change_of_variable = true;
  return p;
}

std::vector<std::string> problem_ids() {
  return {"synthetic", "finance", "evppi", "gp_lookahead"};
}

namespace {

using nlohmann::json;

void reject_unknown(const json &j, std::initializer_list<const char *> allowed,
                    std::string_view id) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char *a) { return it.key() == a; })) {
      fail(ErrorCode::Config,
           "unknown override '" + it.key() + "' for problem '" + std::string(id) + "'");
    }
  }
}

}  // namespace

NestedProblem make_problem(std::string_view id, std::string_view overrides_json) {
  json j;
  try {
    j = overrides_json.empty() ? json::object() : json::parse(overrides_json);
  } catch (const json::exception &e) {
    fail(ErrorCode::Config, std::string("problem overrides: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::Config, "problem overrides must be a JSON object");
  try {
    if (id == "synthetic") {
      reject_unknown(j, {"d"}, id);
      return synthetic(j.value("d", Index{1}));
    }
    if (id == "finance") {
      reject_unknown(j, {"S0", "sigma", "K1", "K2", "zeta", "eta", "shock"}, id);
      FinanceParams f;
      f.s0 = j.value("S0", f.s0);
      f.sigma = j.value("sigma", f.sigma);
      f.k1 = j.value("K1", f.k1);
      f.k2 = j.value("K2", f.k2);
      f.zeta = j.value("zeta", f.zeta);
      f.eta = j.value("eta", f.eta);
      f.shock = j.value("shock", f.shock);
      return finance(f);
    }
    if (id == "evppi") {
      reject_unknown(j, {"variant"}, id);
      const std::string v = j.value("variant", std::string("durations"));
      if (v == "durations") return evppi(EvppiVariant::Durations);
      if (v == "response_probabilities") return evppi(EvppiVariant::ResponseProbabilities);
      fail(ErrorCode::Config, "unknown evppi variant '" + v + "'");
    }
    if (id == "gp_lookahead") {
      reject_unknown(j, {"lengthscale", "amplitude", "seed", "zero_observations", "r_max"},
                     id);
      GpLookaheadParams g;
      g.lengthscale = j.value("lengthscale", g.lengthscale);
      g.amplitude = j.value("amplitude", g.amplitude);
      g.seed = j.value("seed", g.seed);
      g.zero_observations = j.value("zero_observations", g.zero_observations);
      if (j.contains("r_max")) {
        g.reward_threshold = j["r_max"].is_string() && j["r_max"] == "inf"
                                 ? std::numeric_limits<double>::infinity()
                                 : j["r_max"].get<double>();
      }
      return gp_lookahead(g);
    }
  } catch (const json::exception &e) {
    fail(ErrorCode::Config, std::string("problem overrides: ") + e.what());
  }
  fail(ErrorCode::Config, "unknown problem '" + std::string(id) + "'");
}

}  // namespace nkq
