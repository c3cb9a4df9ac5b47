#pragma once

#include "nkq/kernels.hpp"
#include "nkq/types.hpp"

namespace nkq {

// Cholesky factorisation of K + n*lambda*I. When the factorisation fails the
// diagonal gets jitter 1e-10*A, growing x10 up to 1e-6*A, before giving up
// with SingularGram.
class RegularizedSolver {
public:
  RegularizedSolver(const Matrix &gram, double lambda, double amplitude);

  Vector solve(const Vector &rhs) const;
  Matrix solve(const Matrix &rhs) const;

  double lambda() const noexcept { return lambda_; }
  double jitter() const noexcept { return jitter_; }
  // Reciprocal condition estimate of the factorised matrix.
  double rcond() const noexcept { return rcond_; }
  Index size() const noexcept { return size_; }

private:
  Eigen::LLT<Matrix> llt_;
  double lambda_ = 0.0;
  double jitter_ = 0.0;
  double rcond_ = 0.0;
  Index size_ = 0;
};

struct KqWeights {
  Vector weights;
  double lambda = 0.0;
  double jitter = 0.0;
  double rcond = 0.0;
};

// w = (K + n*lambda*I)^{-1} mu.
KqWeights kq_weights(const KernelSpec &kernel, const PointMatrix &points,
                     const Vector &kme_values, double lambda);

double kq_estimate(const Vector &weights, const Vector &fvals);

// lambda0 * n^(-2s/d) * max(ln n, 1)^((2s+2)/d)
double reg_schedule(double lambda0, Index n, double s, Index d);

struct QuadratureRule {
  PointMatrix points;
  Vector weights;
  double lambda = 0.0;
  KernelSpec kernel;
};

}  // namespace nkq
