#pragma once

// Internal adapters between DenseTensor storage and Eigen matrices.

#include <Eigen/Core>
#include <cstddef>
#include <span>

#include "tenkit/tensor.hpp"

namespace tenkit::detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMatD = RowMat<double>;
using RowMatC = RowMat<Complex>;

template <class T>
Eigen::Map<const RowMat<T>> matrix_map(std::span<const T> data, std::size_t rows,
                                       std::size_t cols) {
  return Eigen::Map<const RowMat<T>>(data.data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols));
}

// Matrix view of a tensor: axes reordered to row_axes ++ col_axes, elements
// flattened row-major so rows/cols index the fused groups.
struct Unfolding {
  DenseTensor data;  // permuted tensor (row axes first, then column axes)
  std::size_t rows = 1;
  std::size_t cols = 1;
  Shape row_dims;
  Shape col_dims;
};

Unfolding unfold(const DenseTensor& t, const Bipartition& p);

DenseTensor from_matrix(const RowMatD& m);
DenseTensor from_matrix(const RowMatC& m);

// Order-2 tensor to an owning Eigen matrix. to_complex_matrix promotes real
// input; to_real_matrix requires real input.
RowMatD to_real_matrix(const DenseTensor& t);
RowMatC to_complex_matrix(const DenseTensor& t);

}  // namespace tenkit::detail
