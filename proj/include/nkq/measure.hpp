#pragma once

#include "nkq/transform.hpp"
#include "nkq/types.hpp"

#include <memory>
#include <string_view>

namespace nkq {

enum class MeasureKind {
  Uniform01,     // unit cube
  GaussianDiag,  // independent normals; a zero std is a point mass
  GaussianFull,  // mean + SPD covariance
  Lognormal,     // componentwise exp(N(log_mean, log_std^2))
  Pushforward,   // law of to_native(X) with X ~ base
};

struct MeasureSpec {
  MeasureKind kind = MeasureKind::Uniform01;
  Index dim = 1;
  Vector mean;      // Gaussian mean, Lognormal log-mean
  Vector std_dev;   // GaussianDiag std, Lognormal log-std
  Matrix cov;       // GaussianFull covariance
  Matrix chol;      // lower Cholesky factor of cov
  std::shared_ptr<const MeasureSpec> base;
  TransformMap map;  // Pushforward map, applied to base samples

  static MeasureSpec uniform01(Index dim);
  static MeasureSpec gaussian_diag(Vector mean, Vector std_dev);
  static MeasureSpec gaussian_full(Vector mean, Matrix cov);
  static MeasureSpec standard_normal(Index dim);
  static MeasureSpec lognormal(Vector log_mean, Vector log_std);
  static MeasureSpec pushforward(MeasureSpec base, TransformMap map);
};

std::string_view to_string(MeasureKind kind) noexcept;

// Map from [0,1)^d onto the measure (inverse CDFs, then affine/pushforward
// stages). Used to turn QMC points into samples.
TransformMap cube_map(const MeasureSpec &measure);

}  // namespace nkq
