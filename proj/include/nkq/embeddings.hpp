#pragma once

#include "nkq/kernels.hpp"
#include "nkq/measure.hpp"

namespace nkq {

// True when kme() has a closed form for this kernel/measure pair:
//   Uniform01:    Gaussian (any composition); Matern12/32 if tensor or d = 1
//   GaussianDiag: Gaussian; Matern12 if tensor or d = 1
//   GaussianFull: Gaussian
bool has_closed_form_kme(const KernelSpec &kernel, const MeasureSpec &measure);

// mu(y) = E_{X ~ measure}[k(X, y)] for each row y of points. Throws
// NoClosedFormKme for other pairs; those go through a change of variable.
Vector kme(const KernelSpec &kernel, const MeasureSpec &measure,
           const PointMatrix &points);

double kme_at(const KernelSpec &kernel, const MeasureSpec &measure, Point y);

// Tensor trapezoid rule for E[k(X, y)] with about `nodes` nodes in total.
// Every axis is split at y_j so the kink of Matern kernels sits on a node.
// Gaussian axes are truncated at +-10 std. Dimensions above 2 are refused.
double kme_oracle(const KernelSpec &kernel, const MeasureSpec &measure, Point y,
                  Index nodes);

}  // namespace nkq
