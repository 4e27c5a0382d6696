#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

#include "tenkit/tensor.hpp"

namespace tenkit {

// Largest representable contraction cost; anything beyond raises OverflowError.
inline constexpr std::uint64_t kMaxContractionCost =
    static_cast<std::uint64_t>(INT64_MAX);

// Contracts a_axes of a against b_axes of b (positionwise pairs with equal
// dimensions). Result indices are a's free axes in their original order
// followed by b's free axes. Evaluated as one matrix product after axis
// regrouping; the all-dimensions-1 case degenerates to a scalar multiply.
DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b,
                          std::span<const std::size_t> a_axes,
                          std::span<const std::size_t> b_axes);

inline DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b,
                                 std::initializer_list<std::size_t> a_axes,
                                 std::initializer_list<std::size_t> b_axes) {
  return contract_pair(a, b, std::span<const std::size_t>(a_axes.begin(), a_axes.size()),
                       std::span<const std::size_t>(b_axes.begin(), b_axes.size()));
}

// Exact multiplication count of that matrix product:
//   |dim(a)| * |dim(b)| / prod(contracted dims).
// Computed in extended integer precision; throws OverflowError if the result
// would not fit in a signed 64-bit count.
std::uint64_t pair_cost(const Shape& a, const Shape& b,
                        std::span<const std::size_t> a_axes,
                        std::span<const std::size_t> b_axes);

inline std::uint64_t pair_cost(const Shape& a, const Shape& b,
                               std::initializer_list<std::size_t> a_axes,
                               std::initializer_list<std::size_t> b_axes) {
  return pair_cost(a, b, std::span<const std::size_t>(a_axes.begin(), a_axes.size()),
                   std::span<const std::size_t>(b_axes.begin(), b_axes.size()));
}

}  // namespace tenkit
