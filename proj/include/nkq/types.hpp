#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>

namespace nkq {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Point sets are stored one point per row so each point is a contiguous span.
using PointMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Point = std::span<const double>;

inline Point row_of(const PointMatrix &points, Index i) {
  return {points.row(i).data(), static_cast<std::size_t>(points.cols())};
}

inline std::span<double> mutable_row_of(PointMatrix &points, Index i) {
  return {points.row(i).data(), static_cast<std::size_t>(points.cols())};
}

enum class PointSource { IID, QMC };

}  // namespace nkq
