#include "nkq/embeddings.hpp"

#include "nkq/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace nkq {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrt3 = 1.7320508075688772935;

// Integral of the unit-amplitude 1-D profile over [0, a], a >= 0.
double primitive(KernelFamily family, double ell, double a) {
  switch (family) {
  case KernelFamily::Matern12:
    return -ell * std::expm1(-a / ell);
  case KernelFamily::Matern32: {
    const double c = kSqrt3 / ell;
    return (2.0 - std::exp(-c * a) * (2.0 + c * a)) / c;
  }
  case KernelFamily::Gaussian:
    return ell * std::sqrt(0.5 * std::numbers::pi) * std::erf(a / (kSqrt2 * ell));
  }
  return 0.0;
}

double signed_primitive(KernelFamily family, double ell, double a) {
  return a < 0.0 ? -primitive(family, ell, -a) : primitive(family, ell, a);
}

double uniform_factor(KernelFamily family, double ell, double y) {
  return signed_primitive(family, ell, 1.0 - y) + signed_primitive(family, ell, y);
}

double log_norm_cdf(double t) {
  if (t > -35.0) {
    return std::log(0.5 * std::erfc(-t / kSqrt2));
  }
  // Asymptotic series of the Mills ratio.
  const double t2 = t * t;
  return -0.5 * t2 - std::log(-t) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / t2 + 3.0 / (t2 * t2));
}

double gaussian_factor(KernelFamily family, double ell, double m, double sigma,
                       double y) {
  if (family == KernelFamily::Gaussian) {
    const double v = ell * ell + sigma * sigma;
    const double d = y - m;
    return ell / std::sqrt(v) * std::exp(-0.5 * d * d / v);
  }
  // Matern12: E exp(-a|Z|) with Z ~ N(m - y, sigma^2).
  const double mu = m - y;
  if (sigma == 0.0) {
    return std::exp(-std::abs(mu) / ell);
  }
  const double a = 1.0 / ell;
  const double base = 0.5 * a * a * sigma * sigma;
  const double t1 = base - a * mu + log_norm_cdf(mu / sigma - a * sigma);
  const double t2 = base + a * mu + log_norm_cdf(-mu / sigma - a * sigma);
  return std::exp(t1) + std::exp(t2);
}

bool factorises(const KernelSpec &kernel, Index dim) {
  return dim == 1 || kernel.family == KernelFamily::Gaussian ||
         kernel.composition == Composition::TensorProduct;
}

[[noreturn]] void no_closed_form(const KernelSpec &kernel, const MeasureSpec &measure) {
  fail(ErrorCode::NoClosedFormKme,
       std::string(to_string(kernel.family)) + " (" +
           std::string(to_string(kernel.composition)) + ") kernel under a " +
           std::string(to_string(measure.kind)) + " measure in " +
           std::to_string(measure.dim) +
           " dimensions; use the change-of-variable path (uniform or standard "
           "normal base measure)");
}

double kme_point(const KernelSpec &kernel, const MeasureSpec &measure,
                 const double *y, const Eigen::LLT<Matrix> *full_llt,
                 double full_log_ratio) {
  const Index d = measure.dim;
  switch (measure.kind) {
  case MeasureKind::Uniform01: {
    double prod = 1.0;
    for (Index j = 0; j < d; ++j) {
      prod *= uniform_factor(kernel.family, kernel.lengthscale_at(j), y[j]);
    }
    return kernel.amplitude * prod;
  }
  case MeasureKind::GaussianDiag: {
    double prod = 1.0;
    for (Index j = 0; j < d; ++j) {
      prod *= gaussian_factor(kernel.family, kernel.lengthscale_at(j), measure.mean[j],
                              measure.std_dev[j], y[j]);
    }
    return kernel.amplitude * prod;
  }
  case MeasureKind::GaussianFull: {
    Vector delta(d);
    for (Index j = 0; j < d; ++j) delta[j] = y[j] - measure.mean[j];
    const double q = delta.dot(full_llt->solve(delta));
    return kernel.amplitude * std::exp(0.5 * full_log_ratio - 0.5 * q);
  }
  default:
    break;
  }
  return 0.0;
}

}  // namespace

bool has_closed_form_kme(const KernelSpec &kernel, const MeasureSpec &measure) {
  switch (measure.kind) {
  case MeasureKind::Uniform01:
    return factorises(kernel, measure.dim);
  case MeasureKind::GaussianDiag:
    return kernel.family == KernelFamily::Gaussian ||
           (kernel.family == KernelFamily::Matern12 && factorises(kernel, measure.dim));
  case MeasureKind::GaussianFull:
    return kernel.family == KernelFamily::Gaussian;
  default:
    return false;
  }
}

Vector kme(const KernelSpec &kernel, const MeasureSpec &measure,
           const PointMatrix &points) {
  if (points.cols() != measure.dim) {
    fail(ErrorCode::DimensionMismatch, "kme: points do not match the measure dimension");
  }
  kernel.validate(measure.dim);
  if (!points.allFinite()) {
    fail(ErrorCode::NonFinite, "kme: non-finite point");
  }
  if (!has_closed_form_kme(kernel, measure)) {
    no_closed_form(kernel, measure);
  }

  Eigen::LLT<Matrix> llt;
  double log_ratio = 0.0;
  if (measure.kind == MeasureKind::GaussianFull) {
    Vector lam(measure.dim);
    for (Index j = 0; j < measure.dim; ++j) {
      lam[j] = kernel.lengthscale_at(j) * kernel.lengthscale_at(j);
    }
    Matrix s = measure.cov;
    s.diagonal() += lam;
    llt.compute(s);
    if (llt.info() != Eigen::Success) {
      fail(ErrorCode::SingularGram, "kme: Lambda + Sigma is not positive definite");
    }
    const Matrix l = llt.matrixL();
    log_ratio = lam.array().log().sum() - 2.0 * l.diagonal().array().log().sum();
  }

  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    out[i] = kme_point(kernel, measure, points.row(i).data(), &llt, log_ratio);
  }
  return out;
}

double kme_at(const KernelSpec &kernel, const MeasureSpec &measure, Point y) {
  PointMatrix p(1, static_cast<Index>(y.size()));
  for (std::size_t j = 0; j < y.size(); ++j) p(0, static_cast<Index>(j)) = y[j];
  return kme(kernel, measure, p)[0];
}

namespace {

struct Axis {
  std::vector<double> x;  // abscissae in native coordinates
  std::vector<double> w;  // trapezoid weight times the marginal density
};

// Trapezoid nodes on [lo, hi], split at `kink` when it is interior.
void trapezoid(double lo, double hi, double kink, Index count, std::vector<double> &x,
               std::vector<double> &w) {
  std::vector<std::pair<double, double>> segs;
  if (kink > lo && kink < hi) {
    segs = {{lo, kink}, {kink, hi}};
  } else {
    segs = {{lo, hi}};
  }
  const double total = hi - lo;
  for (auto [a, b] : segs) {
    Index k = std::max<Index>(
        2, static_cast<Index>(std::llround(static_cast<double>(count) * (b - a) / total)));
    const double h = (b - a) / static_cast<double>(k - 1);
    for (Index i = 0; i < k; ++i) {
      x.push_back(i == k - 1 ? b : a + h * static_cast<double>(i));
      w.push_back(i == 0 || i == k - 1 ? 0.5 * h : h);
    }
  }
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double kme_oracle(const KernelSpec &kernel, const MeasureSpec &measure, Point y,
                  Index nodes) {
  const Index d = measure.dim;
  if (d > 2) {
    fail(ErrorCode::OracleUnsupported,
         "kme_oracle handles at most 2 dimensions, got " + std::to_string(d));
  }
  if (static_cast<Index>(y.size()) != d) {
    fail(ErrorCode::DimensionMismatch, "kme_oracle: point does not match measure");
  }
  if (nodes < 1000) {
    fail(ErrorCode::InvalidArgument, "kme_oracle needs at least 1000 nodes");
  }
  kernel.validate(d);
  const Index per_axis = std::max<Index>(
      2, static_cast<Index>(std::llround(std::pow(static_cast<double>(nodes),
                                                  1.0 / static_cast<double>(d)))));

  std::vector<Axis> axes(static_cast<std::size_t>(d));
  bool joint_density = false;
  for (Index j = 0; j < d; ++j) {
    Axis &ax = axes[static_cast<std::size_t>(j)];
    switch (measure.kind) {
    case MeasureKind::Uniform01:
      trapezoid(0.0, 1.0, y[j], per_axis, ax.x, ax.w);
      break;
    case MeasureKind::GaussianDiag: {
      const double m = measure.mean[j];
      const double s = measure.std_dev[j];
      if (s == 0.0) {
        ax.x = {m};
        ax.w = {1.0};
        break;
      }
      trapezoid(m - 10.0 * s, m + 10.0 * s, y[j], per_axis, ax.x, ax.w);
      for (std::size_t i = 0; i < ax.x.size(); ++i) {
        ax.w[i] *= normal_pdf((ax.x[i] - m) / s) / s;
      }
      break;
    }
    case MeasureKind::GaussianFull: {
      const double m = measure.mean[j];
      const double s = std::sqrt(measure.cov(j, j));
      trapezoid(m - 10.0 * s, m + 10.0 * s, y[j], per_axis, ax.x, ax.w);
      joint_density = true;
      break;
    }
    case MeasureKind::Lognormal: {
      // Integrate in z = (log x - log_mean) / log_std.
      const double lm = measure.mean[j];
      const double ls = measure.std_dev[j];
      const double kink = y[j] > 0.0 ? (std::log(y[j]) - lm) / ls : -20.0;
      trapezoid(-10.0, 10.0, kink, per_axis, ax.x, ax.w);
      for (std::size_t i = 0; i < ax.x.size(); ++i) {
        ax.w[i] *= normal_pdf(ax.x[i]);
        ax.x[i] = std::exp(lm + ls * ax.x[i]);
      }
      break;
    }
    case MeasureKind::Pushforward:
      fail(ErrorCode::OracleUnsupported, "kme_oracle: pushforward measures unsupported");
    }
  }

  PointMatrix ypt(1, d);
  for (Index j = 0; j < d; ++j) ypt(0, j) = y[j];

  if (d == 1) {
    const Axis &ax = axes[0];
    PointMatrix xs(static_cast<Index>(ax.x.size()), 1);
    for (std::size_t i = 0; i < ax.x.size(); ++i) xs(static_cast<Index>(i), 0) = ax.x[i];
    const Matrix k = cross_gram(kernel, xs, ypt);
    double sum = 0.0;
    for (std::size_t i = 0; i < ax.x.size(); ++i) sum += ax.w[i] * k(static_cast<Index>(i), 0);
    return sum;
  }

  Eigen::LLT<Matrix> llt;
  double log_norm = 0.0;
  if (joint_density) {
    llt.compute(measure.cov);
    const Matrix l = llt.matrixL();
    log_norm = -std::log(2.0 * std::numbers::pi) - l.diagonal().array().log().sum();
  }
  const Axis &a0 = axes[0];
  const Axis &a1 = axes[1];
  const auto n1 = static_cast<Index>(a1.x.size());
  PointMatrix row(n1, 2);
  for (Index j = 0; j < n1; ++j) row(j, 1) = a1.x[static_cast<std::size_t>(j)];
  double sum = 0.0;
  Vector delta(2);
  for (std::size_t i = 0; i < a0.x.size(); ++i) {
    row.col(0).setConstant(a0.x[i]);
    const Matrix k = cross_gram(kernel, row, ypt);
    double inner = 0.0;
    for (Index j = 0; j < n1; ++j) {
      double wj = a1.w[static_cast<std::size_t>(j)];
      if (joint_density) {
        delta << a0.x[i] - measure.mean[0], a1.x[static_cast<std::size_t>(j)] - measure.mean[1];
        wj *= std::exp(log_norm - 0.5 * delta.dot(llt.solve(delta)));
      }
      inner += wj * k(j, 0);
    }
    sum += a0.w[i] * inner;
  }
  return sum;
}

}  // namespace nkq
