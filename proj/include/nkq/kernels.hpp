#pragma once

#include "nkq/types.hpp"

#include <string_view>

namespace nkq {

enum class KernelFamily { Matern12, Matern32, Gaussian };

// Isotropic kernels act on the (lengthscale-scaled) Euclidean distance;
// tensor-product kernels multiply one 1-D kernel per coordinate.
enum class Composition { Isotropic, TensorProduct };

struct KernelSpec {
  KernelFamily family = KernelFamily::Matern32;
  // Either one entry (broadcast to every dimension) or one per dimension.
  Vector lengthscale = Vector::Ones(1);
  double amplitude = 1.0;
  Composition composition = Composition::Isotropic;

  static KernelSpec make(KernelFamily family, double lengthscale,
                         double amplitude = 1.0,
                         Composition composition = Composition::Isotropic);

  double lengthscale_at(Index dim) const {
    return lengthscale.size() == 1 ? lengthscale[0] : lengthscale[dim];
  }

  // Throws unless lengthscales and amplitude are positive and finite and the
  // lengthscale vector is compatible with `dim` (pass 0 to skip that check).
  void validate(Index dim = 0) const;
};

std::string_view to_string(KernelFamily family) noexcept;
KernelFamily parse_kernel_family(std::string_view name);
std::string_view to_string(Composition composition) noexcept;
Composition parse_composition(std::string_view name);

// Sobolev order s = nu + d/2 of the RKHS. Gaussian kernels are infinitely
// smooth; they report the finite surrogate d/2 + 3.5 used for regularisation
// schedules.
double sobolev_order(KernelFamily family, Index dim) noexcept;

double eval_kernel(const KernelSpec &spec, Point x, Point y);

// n x n Gram matrix k(points_i, points_j). Diagonal entries equal the
// amplitude exactly.
Matrix gram(const KernelSpec &spec, const PointMatrix &points);

// rows(a) x rows(b) cross-covariance k(a_i, b_j).
Matrix cross_gram(const KernelSpec &spec, const PointMatrix &a,
                  const PointMatrix &b);

// Median of the n(n-1)/2 pairwise Euclidean distances.
double median_heuristic(const PointMatrix &points);

// values = (original - mean) / std, so original = std * values + mean.
struct Standardization {
  Vector values;
  double mean = 0.0;
  double std = 1.0;
  // Zero spread: values are returned unchanged, with mean 0 and std 1 so the
  // affine map above is still the identity.
  bool degenerate = false;
};

// Population convention (divide by n).
Standardization standardize(const Vector &values);

}  // namespace nkq
