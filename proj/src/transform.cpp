#include "nkq/transform.hpp"

#include "nkq/error.hpp"

#include <cmath>
#include <string>

namespace nkq {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrt2Pi = 2.5066282746310005024;

// Acklam's rational approximation on the lower half, p in (0, 0.5].
double inv_cdf_lower_initial(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549671010283250e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double inv_cdf_lower(double p) {
  double x = inv_cdf_lower_initial(p);
  // Halley refinement; Phi(x) for x <= 0 is taken from erfc, which keeps
  // relative accuracy in the tail.
  const double e = 0.5 * std::erfc(-x / kSqrt2) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double clamp_unit(double u, bool &clamped) {
  if (u < kClampEps) {
    clamped = true;
    return kClampEps;
  }
  if (u > 1.0 - kClampEps) {
    clamped = true;
    return 1.0 - kClampEps;
  }
  return u;
}

void require_dim(Index expected, Index got, const char *what) {
  if (expected != got) {
    fail(ErrorCode::DimensionMismatch,
         std::string(what) + ": expected dimension " + std::to_string(expected) +
             ", got " + std::to_string(got));
  }
}

void apply_in_place(const TransformMap &map, PointMatrix &pts, bool &clamped) {
  switch (map.kind) {
  case TransformKind::Identity:
    return;
  case TransformKind::NormalInvCdf:
    for (Index i = 0; i < pts.rows(); ++i) {
      for (Index j = 0; j < pts.cols(); ++j) {
        pts(i, j) = norm_inv_cdf(clamp_unit(pts(i, j), clamped));
      }
    }
    return;
  case TransformKind::LognormalInvCdf:
    require_dim(map.shift.size(), pts.cols(), "lognormal inverse CDF");
    for (Index i = 0; i < pts.rows(); ++i) {
      for (Index j = 0; j < pts.cols(); ++j) {
        const double z = norm_inv_cdf(clamp_unit(pts(i, j), clamped));
        pts(i, j) = std::exp(map.shift[j] + map.scale[j] * z);
      }
    }
    return;
  case TransformKind::AffineGaussian: {
    require_dim(map.factor.cols(), pts.cols(), "affine Gaussian map");
    const auto lower = map.factor.triangularView<Eigen::Lower>();
    PointMatrix out(pts.rows(), map.factor.rows());
    for (Index i = 0; i < pts.rows(); ++i) {
      const Vector z = pts.row(i).transpose();
      out.row(i) = (map.shift + lower * z).transpose();
    }
    pts = std::move(out);
    return;
  }
  case TransformKind::Composite:
    for (const auto &stage : map.stages) {
      apply_in_place(stage, pts, clamped);
    }
    return;
  }
}

void invert_in_place(const TransformMap &map, PointMatrix &pts) {
  switch (map.kind) {
  case TransformKind::Identity:
    return;
  case TransformKind::NormalInvCdf:
    pts = pts.unaryExpr([](double z) { return norm_cdf(z); });
    return;
  case TransformKind::LognormalInvCdf:
    require_dim(map.shift.size(), pts.cols(), "lognormal inverse CDF");
    for (Index i = 0; i < pts.rows(); ++i) {
      for (Index j = 0; j < pts.cols(); ++j) {
        if (!(pts(i, j) > 0.0)) {
          fail(ErrorCode::InvalidArgument,
               "lognormal inverse map needs positive points");
        }
        pts(i, j) = norm_cdf((std::log(pts(i, j)) - map.shift[j]) / map.scale[j]);
      }
    }
    return;
  case TransformKind::AffineGaussian: {
    require_dim(map.factor.rows(), pts.cols(), "affine Gaussian inverse");
    const auto lower = map.factor.triangularView<Eigen::Lower>();
    for (Index i = 0; i < pts.rows(); ++i) {
      Vector v = pts.row(i).transpose() - map.shift;
      lower.solveInPlace(v);
      pts.row(i) = v.transpose();
    }
    return;
  }
  case TransformKind::Composite:
    for (auto it = map.stages.rbegin(); it != map.stages.rend(); ++it) {
      invert_in_place(*it, pts);
    }
    return;
  }
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_inv_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    fail(ErrorCode::InvalidArgument, "norm_inv_cdf requires 0 < u < 1");
  }
  if (u > 0.5) {
    return -inv_cdf_lower(1.0 - u);
  }
  return inv_cdf_lower(u);
}

TransformMap TransformMap::identity() { return {}; }

TransformMap TransformMap::normal_inv_cdf() {
  TransformMap m;
  m.kind = TransformKind::NormalInvCdf;
  return m;
}

TransformMap TransformMap::affine_gaussian(Vector mean, Matrix lower_factor) {
  if (lower_factor.rows() != lower_factor.cols() ||
      lower_factor.rows() != mean.size()) {
    fail(ErrorCode::DimensionMismatch, "affine Gaussian factor/mean sizes differ");
  }
  for (Index i = 0; i < lower_factor.rows(); ++i) {
    if (!(lower_factor(i, i) > 0.0)) {
      fail(ErrorCode::InvalidArgument,
           "affine Gaussian factor needs a positive diagonal");
    }
    for (Index j = i + 1; j < lower_factor.cols(); ++j) {
      if (lower_factor(i, j) != 0.0) {
        fail(ErrorCode::InvalidArgument,
             "affine Gaussian factor must be lower triangular");
      }
    }
  }
  TransformMap m;
  m.kind = TransformKind::AffineGaussian;
  m.shift = std::move(mean);
  m.factor = std::move(lower_factor);
  return m;
}

TransformMap TransformMap::affine_diagonal(Vector mean, const Vector &std_devs) {
  return affine_gaussian(std::move(mean), std_devs.asDiagonal().toDenseMatrix());
}

TransformMap TransformMap::lognormal_inv_cdf(Vector log_mean, Vector log_std) {
  if (log_mean.size() != log_std.size()) {
    fail(ErrorCode::DimensionMismatch, "lognormal log-mean/log-std sizes differ");
  }
  for (Index j = 0; j < log_std.size(); ++j) {
    if (!(log_std[j] > 0.0)) {
      fail(ErrorCode::InvalidArgument, "lognormal log-std must be positive");
    }
  }
  TransformMap m;
  m.kind = TransformKind::LognormalInvCdf;
  m.shift = std::move(log_mean);
  m.scale = std::move(log_std);
  return m;
}

TransformMap TransformMap::composite(std::vector<TransformMap> stages) {
  TransformMap m;
  m.kind = TransformKind::Composite;
  m.stages = std::move(stages);
  return m;
}

Index TransformMap::output_dim(Index input_dim) const {
  switch (kind) {
  case TransformKind::Identity:
  case TransformKind::NormalInvCdf:
    return input_dim;
  case TransformKind::LognormalInvCdf:
    require_dim(shift.size(), input_dim, "lognormal inverse CDF");
    return input_dim;
  case TransformKind::AffineGaussian:
    require_dim(factor.cols(), input_dim, "affine Gaussian map");
    return factor.rows();
  case TransformKind::Composite: {
    Index d = input_dim;
    for (const auto &s : stages) {
      d = s.output_dim(d);
    }
    return d;
  }
  }
  return input_dim;
}

TransformResult apply_transform(const TransformMap &map,
                                const PointMatrix &points) {
  map.output_dim(points.cols());
  TransformResult result{points, false};
  apply_in_place(map, result.points, result.clamped);
  return result;
}

PointMatrix apply_inverse_transform(const TransformMap &map,
                                    const PointMatrix &points) {
  PointMatrix out = points;
  invert_in_place(map, out);
  return out;
}

}  // namespace nkq
