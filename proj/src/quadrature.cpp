#include "nkq/quadrature.hpp"

#include "nkq/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nkq {

RegularizedSolver::RegularizedSolver(const Matrix &gram, double lambda,
                                     double amplitude)
    : lambda_(lambda), size_(gram.rows()) {
  require(gram.rows() == gram.cols(), ErrorCode::DimensionMismatch,
          "Gram matrix is not square");
  require(size_ >= 1, ErrorCode::InvalidArgument, "empty Gram matrix");
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::InvalidArgument,
          "regularisation lambda must be finite and nonnegative");
  Matrix a = gram;
  a.diagonal().array() += static_cast<double>(size_) * lambda;
  llt_.compute(a);
  if (llt_.info() == Eigen::Success) {
    rcond_ = llt_.rcond();
    if (rcond_ > 0.0) return;
  }
  for (double j = 1e-10 * amplitude; j <= 1e-6 * amplitude * (1.0 + 1e-9); j *= 10.0) {
    Matrix b = a;
    b.diagonal().array() += j;
    llt_.compute(b);
    if (llt_.info() == Eigen::Success) {
      rcond_ = llt_.rcond();
      if (rcond_ > 0.0) {
        jitter_ = j;
        return;
      }
    }
  }
  // Condition estimate for the report, from the symmetric eigenvalues.
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  const double hi = ev.cwiseAbs().maxCoeff();
  const double lo = ev.minCoeff();
  std::ostringstream msg;
  msg << "factorisation failed after jitter up to " << 1e-6 * amplitude
      << " (n = " << size_ << ", lambda = " << lambda
      << ", rcond estimate = " << (hi > 0.0 ? lo / hi : 0.0) << ")";
  fail(ErrorCode::SingularGram, msg.str());
}

Vector RegularizedSolver::solve(const Vector &rhs) const {
  require(rhs.size() == size_, ErrorCode::DimensionMismatch,
          "right-hand side does not match the Gram matrix");
  return llt_.solve(rhs);
}

Matrix RegularizedSolver::solve(const Matrix &rhs) const {
  require(rhs.rows() == size_, ErrorCode::DimensionMismatch,
          "right-hand side does not match the Gram matrix");
  return llt_.solve(rhs);
}

KqWeights kq_weights(const KernelSpec &kernel, const PointMatrix &points,
                     const Vector &kme_values, double lambda) {
  require(points.rows() == kme_values.size(), ErrorCode::DimensionMismatch,
          "kq_weights: one KME value per point required");
  require(kme_values.allFinite(), ErrorCode::NonFinite,
          "kq_weights: non-finite KME value");
  const RegularizedSolver solver(gram(kernel, points), lambda, kernel.amplitude);
  return {solver.solve(kme_values), lambda, solver.jitter(), solver.rcond()};
}

double kq_estimate(const Vector &weights, const Vector &fvals) {
  require(weights.size() == fvals.size(), ErrorCode::DimensionMismatch,
          "kq_estimate: weights and values differ in length");
  return weights.dot(fvals);
}

double reg_schedule(double lambda0, Index n, double s, Index d) {
  require(std::isfinite(lambda0) && lambda0 >= 0.0, ErrorCode::InvalidArgument,
          "lambda0 must be finite and nonnegative");
  require(n >= 1, ErrorCode::InvalidArgument, "reg_schedule: n must be >= 1");
  require(std::isfinite(s) && s > 0.0, ErrorCode::InvalidArgument,
          "reg_schedule: smoothness must be positive");
  require(d >= 1, ErrorCode::InvalidArgument, "reg_schedule: d must be >= 1");
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double log_term = std::max(std::log(nd), 1.0);
  return lambda0 * std::pow(nd, -2.0 * s / dd) * std::pow(log_term, (2.0 * s + 2.0) / dd);
}

}  // namespace nkq
