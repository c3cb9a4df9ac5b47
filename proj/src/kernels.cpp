#include "nkq/kernels.hpp"

#include "nkq/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace nkq {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

// Unit-lengthscale profiles of the scaled distance r >= 0.
inline double profile(KernelFamily family, double r) {
  switch (family) {
  case KernelFamily::Matern12:
    return std::exp(-r);
  case KernelFamily::Matern32:
    return (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
  case KernelFamily::Gaussian:
    return std::exp(-0.5 * r * r);
  }
  return 0.0;
}

// Per-dimension inverse lengthscales, expanded to `dim` entries.
std::vector<double> inverse_lengthscales(const KernelSpec &spec, Index dim) {
  std::vector<double> inv(static_cast<std::size_t>(dim));
  for (Index j = 0; j < dim; ++j) {
    inv[static_cast<std::size_t>(j)] = 1.0 / spec.lengthscale_at(j);
  }
  return inv;
}

// Correlation (kernel / amplitude) between two points, no validation.
inline double correlation(const KernelSpec &spec, const double *x,
                          const double *y, Index dim, const double *inv_ls) {
  if (dim == 1) {
    return profile(spec.family, std::abs(x[0] - y[0]) * inv_ls[0]);
  }
  // The Gaussian factorises exactly, so both compositions share one path.
  if (spec.family == KernelFamily::Gaussian ||
      spec.composition == Composition::Isotropic) {
    double sq = 0.0;
    for (Index j = 0; j < dim; ++j) {
      const double s = (x[j] - y[j]) * inv_ls[j];
      sq += s * s;
    }
    if (spec.family == KernelFamily::Gaussian) {
      return std::exp(-0.5 * sq);
    }
    return profile(spec.family, std::sqrt(sq));
  }
  double prod = 1.0;
  for (Index j = 0; j < dim; ++j) {
    prod *= profile(spec.family, std::abs(x[j] - y[j]) * inv_ls[j]);
  }
  return prod;
}

void require_finite(const PointMatrix &points, const char *what) {
  if (!points.allFinite()) {
    fail(ErrorCode::NonFinite, std::string(what) + " contains non-finite values");
  }
}

}  // namespace

KernelSpec KernelSpec::make(KernelFamily family, double lengthscale,
                            double amplitude, Composition composition) {
  KernelSpec spec;
  spec.family = family;
  spec.lengthscale = Vector::Constant(1, lengthscale);
  spec.amplitude = amplitude;
  spec.composition = composition;
  spec.validate();
  return spec;
}

void KernelSpec::validate(Index dim) const {
  if (lengthscale.size() == 0) {
    fail(ErrorCode::InvalidArgument, "kernel lengthscale is empty");
  }
  for (Index j = 0; j < lengthscale.size(); ++j) {
    if (!(std::isfinite(lengthscale[j]) && lengthscale[j] > 0.0)) {
      fail(ErrorCode::InvalidArgument,
           "kernel lengthscales must be positive and finite");
    }
  }
  if (!(std::isfinite(amplitude) && amplitude > 0.0)) {
    fail(ErrorCode::InvalidArgument,
         "kernel amplitude must be positive and finite");
  }
  if (dim > 0 && lengthscale.size() != 1 && lengthscale.size() != dim) {
    fail(ErrorCode::DimensionMismatch,
         "kernel has " + std::to_string(lengthscale.size()) +
             " lengthscales for " + std::to_string(dim) + "-dimensional points");
  }
}

std::string_view to_string(KernelFamily family) noexcept {
  switch (family) {
  case KernelFamily::Matern12:
    return "matern12";
  case KernelFamily::Matern32:
    return "matern32";
  case KernelFamily::Gaussian:
    return "gaussian";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "matern12" || name == "matern-1/2") return KernelFamily::Matern12;
  if (name == "matern32" || name == "matern-3/2") return KernelFamily::Matern32;
  if (name == "gaussian" || name == "rbf") return KernelFamily::Gaussian;
  fail(ErrorCode::Config, "unknown kernel family '" + std::string(name) + "'");
}

std::string_view to_string(Composition composition) noexcept {
  return composition == Composition::Isotropic ? "isotropic" : "tensor";
}

Composition parse_composition(std::string_view name) {
  if (name == "isotropic") return Composition::Isotropic;
  if (name == "tensor" || name == "tensor-product") {
    return Composition::TensorProduct;
  }
  fail(ErrorCode::Config, "unknown kernel composition '" + std::string(name) + "'");
}

double sobolev_order(KernelFamily family, Index dim) noexcept {
  const double half_d = 0.5 * static_cast<double>(dim);
  switch (family) {
  case KernelFamily::Matern12:
    return 0.5 + half_d;
  case KernelFamily::Matern32:
    return 1.5 + half_d;
  case KernelFamily::Gaussian:
    return 3.5 + half_d;
  }
  return half_d;
}

double eval_kernel(const KernelSpec &spec, Point x, Point y) {
  if (x.size() != y.size() || x.empty()) {
    fail(ErrorCode::DimensionMismatch, "kernel arguments differ in dimension");
  }
  const auto dim = static_cast<Index>(x.size());
  spec.validate(dim);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j]) || !std::isfinite(y[j])) {
      fail(ErrorCode::NonFinite, "kernel argument is not finite");
    }
  }
  const auto inv = inverse_lengthscales(spec, dim);
  return spec.amplitude * correlation(spec, x.data(), y.data(), dim, inv.data());
}

Matrix gram(const KernelSpec &spec, const PointMatrix &points) {
  const Index n = points.rows();
  const Index dim = points.cols();
  if (n == 0) {
    fail(ErrorCode::InvalidArgument, "Gram matrix of an empty point set");
  }
  spec.validate(dim);
  require_finite(points, "Gram points");
  const auto inv = inverse_lengthscales(spec, dim);
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    k(j, j) = spec.amplitude;
    const double *pj = points.row(j).data();
    for (Index i = j + 1; i < n; ++i) {
      const double v =
          spec.amplitude *
          correlation(spec, points.row(i).data(), pj, dim, inv.data());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix cross_gram(const KernelSpec &spec, const PointMatrix &a,
                  const PointMatrix &b) {
  if (a.cols() != b.cols()) {
    fail(ErrorCode::DimensionMismatch, "cross Gram point sets differ in dimension");
  }
  const Index dim = a.cols();
  spec.validate(dim);
  require_finite(a, "cross Gram points");
  require_finite(b, "cross Gram points");
  const auto inv = inverse_lengthscales(spec, dim);
  Matrix k(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      k(i, j) = spec.amplitude * correlation(spec, a.row(i).data(),
                                             b.row(j).data(), dim, inv.data());
    }
  }
  return k;
}

double median_heuristic(const PointMatrix &points) {
  const Index n = points.rows();
  if (n < 2) {
    fail(ErrorCode::InvalidArgument, "median heuristic needs at least two points");
  }
  require_finite(points, "median heuristic points");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      dist.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  const std::size_t m = dist.size();
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double median = *mid;
  if (m % 2 == 0) {
    median = 0.5 * (median + *std::max_element(dist.begin(), mid));
  }
  if (!(median > 0.0)) {
    fail(ErrorCode::DegenerateLengthscale,
         "median pairwise distance is zero (repeated points)");
  }
  return median;
}

Standardization standardize(const Vector &values) {
  const Index n = values.size();
  if (n == 0) {
    fail(ErrorCode::InvalidArgument, "cannot standardise an empty vector");
  }
  if (!values.allFinite()) {
    fail(ErrorCode::NonFinite, "standardise: non-finite value");
  }
  Standardization out;
  out.mean = values.mean();
  const double var = (values.array() - out.mean).square().sum() /
                     static_cast<double>(n);
  const double sd = std::sqrt(var);
  const double scale = values.cwiseAbs().maxCoeff();
  if (!(sd > 0.0) || sd <= 1e-14 * scale) {
    out.values = values;
    out.mean = 0.0;
    out.std = 1.0;
    out.degenerate = true;
    return out;
  }
  out.std = sd;
  out.values = (values.array() - out.mean) / sd;
  return out;
}

}  // namespace nkq
