#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tenkit/errors.hpp"

namespace tenkit {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

enum class ScalarKind { Real, Complex };

// Dense tensor with row-major storage (last index varies fastest).
// Every dimension is >= 1; order 0 (a scalar holding one element) is legal.
// Real and complex tensors share one type; mixed binary operations promote
// the real operand to complex.
class DenseTensor {
public:
  DenseTensor();  // real scalar, value 0

  static DenseTensor zeros(ScalarKind kind, Shape shape);
  static DenseTensor from_real(Shape shape, std::vector<double> data);
  static DenseTensor from_complex(Shape shape, std::vector<Complex> data);
  static DenseTensor scalar(double value);
  static DenseTensor scalar(Complex value);
  static DenseTensor identity(std::size_t dim, ScalarKind kind = ScalarKind::Real);

  ScalarKind kind() const { return is_real() ? ScalarKind::Real : ScalarKind::Complex; }
  bool is_real() const { return data_.index() == 0; }
  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;  // product of all dimensions (1 for order 0)

  std::span<const double> real_data() const;
  std::span<double> real_data();
  std::span<const Complex> complex_data() const;
  std::span<Complex> complex_data();

  Complex at_flat(std::size_t i) const;
  Complex at(std::span<const std::size_t> index) const;
  Complex at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  DenseTensor to_complex() const;

  // Row-major reinterpretation under a new shape of identical total size.
  DenseTensor reshaped(Shape shape) const;

  // Raw storage, for kernels that dispatch on the scalar kind once.
  const std::variant<std::vector<double>, std::vector<Complex>>& storage() const {
    return data_;
  }

private:
  Shape shape_;
  std::variant<std::vector<double>, std::vector<Complex>> data_;
};

std::size_t shape_size(const Shape& shape);
std::vector<std::size_t> row_major_strides(const Shape& shape);

// Index permutation: result axis i is input axis perm[i].
DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);

inline DenseTensor permute(const DenseTensor& t, std::initializer_list<std::size_t> perm) {
  return permute(t, std::span<const std::size_t>(perm.begin(), perm.size()));
}

// Fuses consecutive index runs. groups must partition 0..order-1 in order;
// grouping non-adjacent indices is rejected (permute first).
DenseTensor reshape_group(const DenseTensor& t,
                          std::span<const std::vector<std::size_t>> groups);

DenseTensor conjugate(const DenseTensor& t);

DenseTensor scaled(const DenseTensor& t, double factor);
DenseTensor scaled(const DenseTensor& t, Complex factor);

// Full elementwise product-sum between same-shape tensors: sum_i a_i * b_i.
// No conjugation is applied; pass conjugate(a) for an inner product.
Complex ttr(const DenseTensor& a, const DenseTensor& b);

double frobenius_norm(const DenseTensor& t);

// ||a - b||, evaluated elementwise on same-shape tensors.
double difference_norm(const DenseTensor& a, const DenseTensor& b);

// Split of the index set into row and column groups for matrix views.
// Both groups must be non-empty, disjoint, and together cover every axis.
struct Bipartition {
  std::vector<std::size_t> row_axes;
  std::vector<std::size_t> col_axes;
};

void validate_bipartition(const Bipartition& p, std::size_t order);

struct PredicateResult {
  bool pass = false;
  double deviation = 0.0;  // max-abs distance from the defining identity
  std::string reason;      // non-empty when the check fails structurally
  explicit operator bool() const { return pass; }
};

inline constexpr double kDefaultPredicateTol = 1e-12;

// Unitary: both W†W and WW† equal the identity (square matrix view).
PredicateResult is_unitary(const DenseTensor& t, const Bipartition& p,
                           double tol = kDefaultPredicateTol);
// Isometry: W†W = I for a d1 x d2 view with d1 >= d2.
PredicateResult is_isometry(const DenseTensor& t, const Bipartition& p,
                            double tol = kDefaultPredicateTol);
// Projector: P = P† = P² for a square order-2 tensor.
PredicateResult is_projector(const DenseTensor& t,
                             double tol = kDefaultPredicateTol);

}  // namespace tenkit
