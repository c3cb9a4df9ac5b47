#pragma once

// Pieces shared by the nested estimators (NKQ, CKQ, MLKQ, NMC, MLMC).

#include "nkq/embeddings.hpp"
#include "nkq/error.hpp"
#include "nkq/nested.hpp"
#include "nkq/quadrature.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nkq::detail {

struct ResolvedSetup {
  KernelSpec kernel_x;
  double s_x = 1.0;
  std::vector<KernelSpec> kernel_theta;  // per target
  std::vector<double> s_theta;
  bool change_of_variable = false;
};

ResolvedSetup resolve(const NestedProblem &problem, const NkqConfig &config);

// Median heuristic, or the fixed value. Fewer than two points fall back to 1.
double choose_lengthscale(const PointMatrix &points, std::optional<double> fixed);

// Median of all within-set pairwise distances over the first few sets.
double pooled_median(const std::vector<PointMatrix> &sets);

struct StageKq {
  Vector weights;
  Vector values;  // one per column of the value matrix
  double lengthscale = 1.0;
  double jitter = 0.0;
  double rcond = 1.0;
  Index degenerate = 0;
};

// KQ weights for `points` under `measure`, then applied to every column of
// `values` with standardisation folded back. With exact_mean the weights are
// shifted by (1 - sum w) / n so the mean of the values is integrated exactly.
StageKq stage_kq(KernelSpec kernel, double lengthscale, const MeasureSpec &measure,
                 const PointMatrix &points, const Matrix &values, double lambda,
                 bool exact_mean);

// sum_i w_i y_i computed as std * (w . z) + mean * sum(w) with z the
// standardised y.
double fold_back(const Vector &weights, const Vector &y, bool *degenerate = nullptr);

Vector uniform_weights(Index n);

// Re-throws with a stage tag in front of the message.
template <class Fn>
auto tagged(const char *tag, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error &e) {
    throw Error(e.code(), std::string(tag) + ": " + e.detail());
  }
}

inline std::vector<double> row_vector(const Matrix &m, Index r) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return v;
}

}  // namespace nkq::detail
