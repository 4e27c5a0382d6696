#include "tenkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <type_traits>

#include "tenkit/matrix_view.hpp"

namespace tenkit {

namespace {

void validate_shape(const Shape& shape) {
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0) {
      std::ostringstream os;
      os << "dimension " << i << " is zero; every dimension must be >= 1";
      throw ValidationError(os.str());
    }
  }
}

// Compensated (Neumaier) accumulator; keeps sums reproducible and tight so
// norm identities hold to full precision.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

DenseTensor::DenseTensor() : shape_(), data_(std::vector<double>{0.0}) {}

std::size_t shape_size(const Shape& shape) {
  unsigned __int128 n = 1;
  for (std::size_t d : shape) {
    n *= d;
    if (n > std::numeric_limits<std::size_t>::max()) {
      throw ValidationError("tensor size overflows addressable range");
    }
  }
  return static_cast<std::size_t>(n);
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

DenseTensor DenseTensor::zeros(ScalarKind kind, Shape shape) {
  validate_shape(shape);
  const std::size_t n = shape_size(shape);
  DenseTensor t;
  t.shape_ = std::move(shape);
  if (kind == ScalarKind::Real) {
    t.data_ = std::vector<double>(n, 0.0);
  } else {
    t.data_ = std::vector<Complex>(n, Complex(0.0, 0.0));
  }
  return t;
}

DenseTensor DenseTensor::from_real(Shape shape, std::vector<double> data) {
  validate_shape(shape);
  if (shape_size(shape) != data.size()) {
    throw ValidationError("data length does not match shape size");
  }
  DenseTensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

DenseTensor DenseTensor::from_complex(Shape shape, std::vector<Complex> data) {
  validate_shape(shape);
  if (shape_size(shape) != data.size()) {
    throw ValidationError("data length does not match shape size");
  }
  DenseTensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

DenseTensor DenseTensor::scalar(double value) {
  return from_real({}, {value});
}

DenseTensor DenseTensor::scalar(Complex value) {
  return from_complex({}, {value});
}

DenseTensor DenseTensor::identity(std::size_t dim, ScalarKind kind) {
  if (dim == 0) throw ValidationError("identity dimension must be >= 1");
  DenseTensor t = zeros(kind, {dim, dim});
  if (kind == ScalarKind::Real) {
    auto d = t.real_data();
    for (std::size_t i = 0; i < dim; ++i) d[i * dim + i] = 1.0;
  } else {
    auto d = t.complex_data();
    for (std::size_t i = 0; i < dim; ++i) d[i * dim + i] = Complex(1.0, 0.0);
  }
  return t;
}

std::size_t DenseTensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw ValidationError("axis out of range");
  return shape_[axis];
}

std::size_t DenseTensor::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

std::span<const double> DenseTensor::real_data() const {
  if (!is_real()) throw ValidationError("tensor is complex, not real");
  return std::get<0>(data_);
}

std::span<double> DenseTensor::real_data() {
  if (!is_real()) throw ValidationError("tensor is complex, not real");
  return std::get<0>(data_);
}

std::span<const Complex> DenseTensor::complex_data() const {
  if (is_real()) throw ValidationError("tensor is real, not complex");
  return std::get<1>(data_);
}

std::span<Complex> DenseTensor::complex_data() {
  if (is_real()) throw ValidationError("tensor is real, not complex");
  return std::get<1>(data_);
}

Complex DenseTensor::at_flat(std::size_t i) const {
  if (i >= size()) throw ValidationError("flat index out of range");
  return std::visit([&](const auto& v) { return Complex(v[i]); }, data_);
}

Complex DenseTensor::at(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ValidationError("index arity does not match tensor order");
  }
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (std::size_t i = shape_.size(); i-- > 0;) {
    if (index[i] >= shape_[i]) throw ValidationError("index out of range");
    flat += index[i] * stride;
    stride *= shape_[i];
  }
  return at_flat(flat);
}

DenseTensor DenseTensor::to_complex() const {
  if (!is_real()) return *this;
  const auto src = real_data();
  std::vector<Complex> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = Complex(src[i], 0.0);
  return from_complex(shape_, std::move(out));
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
  validate_shape(shape);
  if (shape_size(shape) != size()) {
    throw ValidationError("reshape must preserve the total element count");
  }
  DenseTensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
  const std::size_t n = t.order();
  if (perm.size() != n) {
    throw ValidationError("permutation length does not match tensor order");
  }
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) {
      throw ValidationError("permutation must list each axis exactly once");
    }
    seen[p] = true;
  }
  if (n <= 1) return t;

  Shape out_shape(n);
  for (std::size_t i = 0; i < n; ++i) out_shape[i] = t.shape()[perm[i]];
  const auto in_strides = row_major_strides(t.shape());
  std::vector<std::size_t> mapped(n);
  for (std::size_t i = 0; i < n; ++i) mapped[i] = in_strides[perm[i]];

  return std::visit(
      [&](const auto& src) {
        using Vec = std::decay_t<decltype(src)>;
        Vec out(src.size());
        std::vector<std::size_t> coord(n, 0);
        std::size_t off = 0;
        for (std::size_t k = 0; k < out.size(); ++k) {
          out[k] = src[off];
          for (std::size_t d = n; d-- > 0;) {
            ++coord[d];
            off += mapped[d];
            if (coord[d] < out_shape[d]) break;
            off -= mapped[d] * out_shape[d];
            coord[d] = 0;
          }
        }
        using T = typename Vec::value_type;
        if constexpr (std::is_same_v<T, double>) {
          return DenseTensor::from_real(out_shape, std::move(out));
        } else {
          return DenseTensor::from_complex(out_shape, std::move(out));
        }
      },
      t.storage());
}

DenseTensor reshape_group(const DenseTensor& t,
                          std::span<const std::vector<std::size_t>> groups) {
  std::size_t pos = 0;
  Shape out_shape;
  out_shape.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("index groups must be non-empty");
    std::size_t d = 1;
    for (std::size_t axis : g) {
      if (axis != pos) {
        throw ValidationError(
            "groups must cover consecutive index positions in order; permute first");
      }
      ++pos;
      d *= t.dim(axis);
    }
    out_shape.push_back(d);
  }
  if (pos != t.order()) {
    throw ValidationError("groups must together cover every index exactly once");
  }
  return t.reshaped(std::move(out_shape));
}

DenseTensor conjugate(const DenseTensor& t) {
  if (t.is_real()) return t;
  const auto src = t.complex_data();
  std::vector<Complex> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = std::conj(src[i]);
  return DenseTensor::from_complex(t.shape(), std::move(out));
}

DenseTensor scaled(const DenseTensor& t, double factor) {
  return std::visit(
      [&](const auto& src) {
        auto out = src;
        for (auto& x : out) x *= factor;
        using T = typename std::decay_t<decltype(src)>::value_type;
        if constexpr (std::is_same_v<T, double>) {
          return DenseTensor::from_real(t.shape(), std::move(out));
        } else {
          return DenseTensor::from_complex(t.shape(), std::move(out));
        }
      },
      t.storage());
}

DenseTensor scaled(const DenseTensor& t, Complex factor) {
  const DenseTensor c = t.to_complex();
  auto out = std::vector<Complex>(c.complex_data().begin(), c.complex_data().end());
  for (auto& x : out) x *= factor;
  return DenseTensor::from_complex(t.shape(), std::move(out));
}

Complex ttr(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("ttr requires identical shapes");
  }
  Accumulator re, im;
  std::visit(
      [&](const auto& av, const auto& bv) {
        for (std::size_t i = 0; i < av.size(); ++i) {
          const auto p = av[i] * bv[i];
          if constexpr (std::is_same_v<std::decay_t<decltype(p)>, double>) {
            re.add(p);
          } else {
            re.add(p.real());
            im.add(p.imag());
          }
        }
      },
      a.storage(), b.storage());
  return Complex(re.value(), im.value());
}

double frobenius_norm(const DenseTensor& t) {
  Accumulator acc;
  std::visit(
      [&](const auto& v) {
        for (const auto& x : v) {
          if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>) {
            acc.add(x * x);
          } else {
            acc.add(std::norm(x));
          }
        }
      },
      t.storage());
  return std::sqrt(acc.value());
}

double difference_norm(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("difference_norm requires identical shapes");
  }
  Accumulator acc;
  std::visit(
      [&](const auto& av, const auto& bv) {
        for (std::size_t i = 0; i < av.size(); ++i) {
          const auto d = av[i] - bv[i];
          if constexpr (std::is_same_v<std::decay_t<decltype(d)>, double>) {
            acc.add(d * d);
          } else {
            acc.add(std::norm(d));
          }
        }
      },
      a.storage(), b.storage());
  return std::sqrt(acc.value());
}

void validate_bipartition(const Bipartition& p, std::size_t order) {
  if (p.row_axes.empty() || p.col_axes.empty()) {
    throw ValidationError("bipartition groups must both be non-empty");
  }
  std::vector<bool> seen(order, false);
  auto take = [&](const std::vector<std::size_t>& axes) {
    for (std::size_t a : axes) {
      if (a >= order) throw ValidationError("bipartition axis out of range");
      if (seen[a]) throw ValidationError("bipartition lists an axis twice");
      seen[a] = true;
    }
  };
  take(p.row_axes);
  take(p.col_axes);
  if (p.row_axes.size() + p.col_axes.size() != order) {
    throw ValidationError("bipartition must cover every axis exactly once");
  }
}

namespace detail {

Unfolding unfold(const DenseTensor& t, const Bipartition& p) {
  validate_bipartition(p, t.order());
  std::vector<std::size_t> perm;
  perm.reserve(t.order());
  perm.insert(perm.end(), p.row_axes.begin(), p.row_axes.end());
  perm.insert(perm.end(), p.col_axes.begin(), p.col_axes.end());
  Unfolding u;
  u.data = permute(t, perm);
  for (std::size_t a : p.row_axes) {
    u.row_dims.push_back(t.dim(a));
    u.rows *= t.dim(a);
  }
  for (std::size_t a : p.col_axes) {
    u.col_dims.push_back(t.dim(a));
    u.cols *= t.dim(a);
  }
  return u;
}

DenseTensor from_matrix(const RowMatD& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return DenseTensor::from_real(
      {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
      std::move(data));
}

DenseTensor from_matrix(const RowMatC& m) {
  std::vector<Complex> data(m.data(), m.data() + m.size());
  return DenseTensor::from_complex(
      {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
      std::move(data));
}

RowMatD to_real_matrix(const DenseTensor& t) {
  if (t.order() != 2) throw ValidationError("matrix view requires an order-2 tensor");
  const auto d = t.real_data();
  return RowMatD(matrix_map<double>(d, t.dim(0), t.dim(1)));
}

RowMatC to_complex_matrix(const DenseTensor& t) {
  if (t.order() != 2) throw ValidationError("matrix view requires an order-2 tensor");
  if (t.is_real()) {
    const auto d = t.real_data();
    return matrix_map<double>(d, t.dim(0), t.dim(1)).cast<Complex>();
  }
  const auto d = t.complex_data();
  return RowMatC(matrix_map<Complex>(d, t.dim(0), t.dim(1)));
}

}  // namespace detail

namespace {

// Max-abs deviation helpers against the defining identities, evaluated on a
// complex matrix view (real input promotes losslessly).
double max_abs(const detail::RowMatC& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

detail::RowMatC unfold_complex(const DenseTensor& t, const Bipartition& p,
                               std::size_t& rows, std::size_t& cols) {
  const auto u = detail::unfold(t, p);
  rows = u.rows;
  cols = u.cols;
  const DenseTensor m = u.data.reshaped({u.rows, u.cols});
  return detail::to_complex_matrix(m);
}

}  // namespace

PredicateResult is_unitary(const DenseTensor& t, const Bipartition& p, double tol) {
  std::size_t d1 = 0, d2 = 0;
  const auto m = unfold_complex(t, p, d1, d2);
  if (d1 != d2) {
    std::ostringstream os;
    os << "not square: row dimension " << d1 << " != column dimension " << d2;
    return {false, 0.0, os.str()};
  }
  const auto id = detail::RowMatC::Identity(m.rows(), m.rows());
  const double dev =
      std::max(max_abs(m.adjoint() * m - id), max_abs(m * m.adjoint() - id));
  return {dev <= tol, dev, dev <= tol ? "" : "deviation exceeds tolerance"};
}

PredicateResult is_isometry(const DenseTensor& t, const Bipartition& p, double tol) {
  std::size_t d1 = 0, d2 = 0;
  const auto m = unfold_complex(t, p, d1, d2);
  if (d1 < d2) {
    std::ostringstream os;
    os << "row dimension " << d1 << " smaller than column dimension " << d2
       << "; an isometry requires d1 >= d2";
    return {false, 0.0, os.str()};
  }
  const auto id = detail::RowMatC::Identity(m.cols(), m.cols());
  const double dev = max_abs(m.adjoint() * m - id);
  return {dev <= tol, dev, dev <= tol ? "" : "deviation exceeds tolerance"};
}

PredicateResult is_projector(const DenseTensor& t, double tol) {
  if (t.order() != 2 || t.dim(0) != t.dim(1)) {
    return {false, 0.0, "projector check requires a square order-2 tensor"};
  }
  const auto m = detail::to_complex_matrix(t);
  const double dev =
      std::max(max_abs(m - m.adjoint()), max_abs(m * m - m));
  return {dev <= tol, dev, dev <= tol ? "" : "deviation exceeds tolerance"};
}

}  // namespace tenkit
