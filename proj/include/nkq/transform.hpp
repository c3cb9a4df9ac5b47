#pragma once

#include "nkq/types.hpp"

#include <vector>

namespace nkq {

// Standard normal CDF and its inverse.
double norm_cdf(double x);

// Rational initial guess refined by one Halley step against the erfc-based
// CDF. Antisymmetric by construction: norm_inv_cdf(1 - u) == -norm_inv_cdf(u)
// whenever 1 - (1 - u) == u in floating point. Throws unless 0 < u < 1.
double norm_inv_cdf(double u);

// Inverse-CDF kinds clamp their inputs to [kClampEps, 1 - kClampEps].
inline constexpr double kClampEps = 1e-12;

enum class TransformKind {
  Identity,
  NormalInvCdf,     // componentwise Phi^{-1}
  AffineGaussian,   // mean + L z with lower-triangular L
  LognormalInvCdf,  // exp(log_mean + log_std * Phi^{-1}(u)), componentwise
  Composite,        // stages applied left to right
};

struct TransformMap {
  TransformKind kind = TransformKind::Identity;
  Vector shift;   // AffineGaussian mean or LognormalInvCdf log-mean
  Vector scale;   // LognormalInvCdf log-std
  Matrix factor;  // AffineGaussian lower-triangular factor
  std::vector<TransformMap> stages;

  static TransformMap identity();
  static TransformMap normal_inv_cdf();
  static TransformMap affine_gaussian(Vector mean, Matrix lower_factor);
  static TransformMap affine_diagonal(Vector mean, const Vector &std_devs);
  static TransformMap lognormal_inv_cdf(Vector log_mean, Vector log_std);
  static TransformMap composite(std::vector<TransformMap> stages);

  // Output dimension for a given input dimension; throws on incompatibility.
  Index output_dim(Index input_dim) const;
};

struct TransformResult {
  PointMatrix points;
  // Set when an inverse-CDF stage had to clamp an input at 0 or 1.
  bool clamped = false;
};

TransformResult apply_transform(const TransformMap &map,
                                const PointMatrix &points);

// Inverse map (native coordinates back to the map's domain). Used to place
// query points in kernel coordinates.
PointMatrix apply_inverse_transform(const TransformMap &map,
                                    const PointMatrix &points);

}  // namespace nkq
