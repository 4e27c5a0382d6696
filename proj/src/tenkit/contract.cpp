#include "tenkit/contract.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

#include "tenkit/matrix_view.hpp"

namespace tenkit {

namespace {

using u128 = unsigned __int128;

void validate_axes(const Shape& a, const Shape& b,
                   std::span<const std::size_t> a_axes,
                   std::span<const std::size_t> b_axes) {
  if (a_axes.size() != b_axes.size()) {
    throw ValidationError("contraction axis lists must have equal length");
  }
  std::vector<bool> seen_a(a.size(), false), seen_b(b.size(), false);
  for (std::size_t k = 0; k < a_axes.size(); ++k) {
    const std::size_t ia = a_axes[k], ib = b_axes[k];
    if (ia >= a.size() || ib >= b.size()) {
      throw ValidationError("contraction axis out of range");
    }
    if (seen_a[ia] || seen_b[ib]) {
      throw ValidationError("contraction axis listed twice");
    }
    seen_a[ia] = true;
    seen_b[ib] = true;
    if (a[ia] != b[ib]) {
      std::ostringstream os;
      os << "contracted dimensions differ: axis " << ia << " of first operand has dim "
         << a[ia] << ", axis " << ib << " of second has dim " << b[ib];
      throw ValidationError(os.str());
    }
  }
}

std::vector<std::size_t> free_axes(std::size_t order,
                                   std::span<const std::size_t> bound) {
  std::vector<bool> is_bound(order, false);
  for (std::size_t a : bound) is_bound[a] = true;
  std::vector<std::size_t> free;
  free.reserve(order - bound.size());
  for (std::size_t i = 0; i < order; ++i) {
    if (!is_bound[i]) free.push_back(i);
  }
  return free;
}

template <class T>
DenseTensor matmul(const DenseTensor& pa, std::size_t fa, std::size_t s,
                   const DenseTensor& pb, std::size_t fb) {
  std::span<const T> da, db;
  if constexpr (std::is_same_v<T, double>) {
    da = pa.real_data();
    db = pb.real_data();
  } else {
    da = pa.complex_data();
    db = pb.complex_data();
  }
  const auto A = detail::matrix_map<T>(da, fa, s);
  const auto B = detail::matrix_map<T>(db, s, fb);
  detail::RowMat<T> C = A * B;
  std::vector<T> out(C.data(), C.data() + C.size());
  if constexpr (std::is_same_v<T, double>) {
    return DenseTensor::from_real({fa, fb}, std::move(out));
  } else {
    return DenseTensor::from_complex({fa, fb}, std::move(out));
  }
}

}  // namespace

DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b,
                          std::span<const std::size_t> a_axes,
                          std::span<const std::size_t> b_axes) {
  validate_axes(a.shape(), b.shape(), a_axes, b_axes);

  const auto fa_axes = free_axes(a.order(), a_axes);
  const auto fb_axes = free_axes(b.order(), b_axes);

  // A total dimension of 1 turns the product into a plain rescale. Every
  // contracted axis then carries dim 1 on both sides, so the survivor
  // reshapes to the output without moving data.
  if (a.size() == 1 || b.size() == 1) {
    Shape out_shape;
    for (std::size_t ax : fa_axes) out_shape.push_back(a.dim(ax));
    for (std::size_t ax : fb_axes) out_shape.push_back(b.dim(ax));
    const bool a_is_scalar = a.size() == 1;
    const DenseTensor& big = a_is_scalar ? b : a;
    const Complex factor = (a_is_scalar ? a : b).at_flat(0);
    DenseTensor result =
        (a.is_real() && b.is_real())
            ? scaled(big, factor.real())
            : scaled(big.is_real() ? big.to_complex() : big, factor);
    return result.reshaped(std::move(out_shape));
  }

  std::vector<std::size_t> perm_a(fa_axes);
  perm_a.insert(perm_a.end(), a_axes.begin(), a_axes.end());
  std::vector<std::size_t> perm_b(b_axes.begin(), b_axes.end());
  perm_b.insert(perm_b.end(), fb_axes.begin(), fb_axes.end());

  DenseTensor pa = permute(a, perm_a);
  DenseTensor pb = permute(b, perm_b);

  std::size_t fa = 1, s = 1, fb = 1;
  Shape out_shape;
  for (std::size_t ax : fa_axes) {
    fa *= a.dim(ax);
    out_shape.push_back(a.dim(ax));
  }
  for (std::size_t ax : a_axes) s *= a.dim(ax);
  for (std::size_t ax : fb_axes) {
    fb *= b.dim(ax);
    out_shape.push_back(b.dim(ax));
  }

  DenseTensor flat;
  if (pa.is_real() && pb.is_real()) {
    flat = matmul<double>(pa, fa, s, pb, fb);
  } else {
    if (pa.is_real()) pa = pa.to_complex();
    if (pb.is_real()) pb = pb.to_complex();
    flat = matmul<Complex>(pa, fa, s, pb, fb);
  }
  return flat.reshaped(std::move(out_shape));
}

std::uint64_t pair_cost(const Shape& a, const Shape& b,
                        std::span<const std::size_t> a_axes,
                        std::span<const std::size_t> b_axes) {
  validate_axes(a, b, a_axes, b_axes);

  const auto overflow = [] {
    return OverflowError("contraction cost exceeds the signed 64-bit range");
  };
  const auto product = [&](const Shape& dims) {
    u128 p = 1;
    for (std::size_t d : dims) {
      if (__builtin_mul_overflow(p, static_cast<u128>(d), &p)) throw overflow();
    }
    return p;
  };

  const u128 total_a = product(a);
  const u128 total_b = product(b);
  u128 shared = 1;
  for (std::size_t ax : a_axes) shared *= static_cast<u128>(a[ax]);

  // shared divides total_a exactly (it is a sub-product of a's dimensions).
  u128 cost = total_a / shared;
  if (__builtin_mul_overflow(cost, total_b, &cost)) throw overflow();
  if (cost > static_cast<u128>(kMaxContractionCost)) throw overflow();
  return static_cast<std::uint64_t>(cost);
}

}  // namespace tenkit
