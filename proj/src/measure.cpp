#include "nkq/measure.hpp"

#include "nkq/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace nkq {

MeasureSpec MeasureSpec::uniform01(Index dim) {
  require(dim >= 1, ErrorCode::InvalidArgument, "measure dimension must be >= 1");
  MeasureSpec m;
  m.kind = MeasureKind::Uniform01;
  m.dim = dim;
  return m;
}

MeasureSpec MeasureSpec::gaussian_diag(Vector mean, Vector std_dev) {
  require(mean.size() >= 1, ErrorCode::InvalidArgument, "empty Gaussian mean");
  require(mean.size() == std_dev.size(), ErrorCode::DimensionMismatch,
          "Gaussian mean/std sizes differ");
  require(mean.allFinite() && std_dev.allFinite(), ErrorCode::NonFinite,
          "Gaussian parameters must be finite");
  require((std_dev.array() >= 0.0).all(), ErrorCode::InvalidArgument,
          "Gaussian std must be nonnegative");
  MeasureSpec m;
  m.kind = MeasureKind::GaussianDiag;
  m.dim = mean.size();
  m.mean = std::move(mean);
  m.std_dev = std::move(std_dev);
  return m;
}

MeasureSpec MeasureSpec::gaussian_full(Vector mean, Matrix cov) {
  require(mean.size() >= 1, ErrorCode::InvalidArgument, "empty Gaussian mean");
  require(cov.rows() == mean.size() && cov.cols() == mean.size(),
          ErrorCode::DimensionMismatch, "covariance does not match mean");
  require(mean.allFinite() && cov.allFinite(), ErrorCode::NonFinite,
          "Gaussian parameters must be finite");
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12 * cov.cwiseAbs().maxCoeff(), ErrorCode::InvalidArgument,
          "covariance is not symmetric");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::InvalidArgument, "covariance is not positive definite");
  }
  MeasureSpec m;
  m.kind = MeasureKind::GaussianFull;
  m.dim = mean.size();
  m.mean = std::move(mean);
  m.chol = llt.matrixL();
  m.cov = std::move(cov);
  return m;
}

MeasureSpec MeasureSpec::standard_normal(Index dim) {
  return gaussian_diag(Vector::Zero(dim), Vector::Ones(dim));
}

MeasureSpec MeasureSpec::lognormal(Vector log_mean, Vector log_std) {
  require(log_mean.size() >= 1, ErrorCode::InvalidArgument, "empty lognormal");
  require(log_mean.size() == log_std.size(), ErrorCode::DimensionMismatch,
          "lognormal log-mean/log-std sizes differ");
  require(log_mean.allFinite() && log_std.allFinite(), ErrorCode::NonFinite,
          "lognormal parameters must be finite");
  require((log_std.array() > 0.0).all(), ErrorCode::InvalidArgument,
          "lognormal log-std must be positive");
  MeasureSpec m;
  m.kind = MeasureKind::Lognormal;
  m.dim = log_mean.size();
  m.mean = std::move(log_mean);
  m.std_dev = std::move(log_std);
  return m;
}

MeasureSpec MeasureSpec::pushforward(MeasureSpec base, TransformMap map) {
  MeasureSpec m;
  m.kind = MeasureKind::Pushforward;
  m.dim = map.output_dim(base.dim);
  m.base = std::make_shared<const MeasureSpec>(std::move(base));
  m.map = std::move(map);
  return m;
}

std::string_view to_string(MeasureKind kind) noexcept {
  switch (kind) {
  case MeasureKind::Uniform01:
    return "uniform01";
  case MeasureKind::GaussianDiag:
    return "gaussian_diag";
  case MeasureKind::GaussianFull:
    return "gaussian_full";
  case MeasureKind::Lognormal:
    return "lognormal";
  case MeasureKind::Pushforward:
    return "pushforward";
  }
  return "unknown";
}

TransformMap cube_map(const MeasureSpec &measure) {
  switch (measure.kind) {
  case MeasureKind::Uniform01:
    return TransformMap::identity();
  case MeasureKind::GaussianDiag: {
    // Built by hand: a zero std is legal here but not in affine_gaussian().
    TransformMap affine;
    affine.kind = TransformKind::AffineGaussian;
    affine.shift = measure.mean;
    affine.factor = measure.std_dev.asDiagonal().toDenseMatrix();
    return TransformMap::composite({TransformMap::normal_inv_cdf(), affine});
  }
  case MeasureKind::GaussianFull:
    return TransformMap::composite(
        {TransformMap::normal_inv_cdf(),
         TransformMap::affine_gaussian(measure.mean, measure.chol)});
  case MeasureKind::Lognormal:
    return TransformMap::lognormal_inv_cdf(measure.mean, measure.std_dev);
  case MeasureKind::Pushforward:
    return TransformMap::composite({cube_map(*measure.base), measure.map});
  }
  fail(ErrorCode::Unsupported, "cube_map: unknown measure kind");
}

}  // namespace nkq
