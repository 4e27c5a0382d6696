#include "tenkit/decomp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tenkit/matrix_view.hpp"

namespace tenkit {

namespace {

// Relative gap under which a truncation boundary counts as degenerate; the
// discarded side is then not uniquely determined by the spectrum.
constexpr double kDegenerateGap = 1e-12;
constexpr double kZeroFloor = 1e-14;  // relative floor for "numerically zero"

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
T conj_of(T v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return std::conj(v);
  }
}

template <class T>
Mat<T> to_matrix(const DenseTensor& t);

template <>
Mat<double> to_matrix<double>(const DenseTensor& t) {
  return detail::to_real_matrix(t);
}

template <>
Mat<Complex> to_matrix<Complex>(const DenseTensor& t) {
  return detail::to_complex_matrix(t);
}

template <class T>
DenseTensor tensor_of(const Mat<T>& m) {
  detail::RowMat<T> r = m;
  return detail::from_matrix(r);
}

// Rotates each column of U so its largest-magnitude entry (first such row on
// ties) is real and positive; the companion matrix absorbs the inverse phase
// columnwise so the reconstructed product is unchanged.
template <class T>
void fix_column_phases(Mat<T>& u, Mat<T>* companion) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    const T v = u(imax, j);
    const double a = std::abs(v);
    if (a == 0.0) continue;
    const T phase = v / a;
    u.col(j) *= conj_of(phase);
    if (companion) companion->col(j) *= conj_of(phase);
  }
}

template <class T>
void svd_kernel(const Mat<T>& m, Mat<T>& u, Eigen::VectorXd& s, Mat<T>& v) {
  Eigen::JacobiSVD<Mat<T>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("singular value decomposition failed to converge");
  }
  u = svd.matrixU();
  v = svd.matrixV();
  s = svd.singularValues();
  fix_column_phases(u, &v);
}

template <class T>
void qr_kernel(const Mat<T>& m, Mat<T>& q, Mat<T>& r) {
  const Eigen::Index d1 = m.rows(), d2 = m.cols();
  Eigen::HouseholderQR<Mat<T>> qr(m);
  q = qr.householderQ() * Mat<T>::Identity(d1, d2);
  r = qr.matrixQR().topRows(d2).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d2; ++j) {
    const T d = r(j, j);
    const double a = std::abs(d);
    if (a == 0.0) continue;
    const T phase = d / a;
    r.row(j) *= conj_of(phase);
    q.col(j) *= phase;
  }
}

Shape append_dim(Shape dims, std::size_t extra) {
  dims.push_back(extra);
  return dims;
}

Shape prepend_dim(std::size_t extra, const Shape& dims) {
  Shape out{extra};
  out.insert(out.end(), dims.begin(), dims.end());
  return out;
}

DenseTensor real_diagonal(const std::vector<double>& values) {
  const std::size_t k = values.size();
  DenseTensor d = DenseTensor::zeros(ScalarKind::Real, {k, k});
  auto data = d.real_data();
  for (std::size_t i = 0; i < k; ++i) data[i * k + i] = values[i];
  return d;
}

template <class T>
Factorization svd_impl(const detail::Unfolding& uf, const Bipartition& p) {
  const Mat<T> m = to_matrix<T>(uf.data.reshaped({uf.rows, uf.cols}));
  Mat<T> u, v;
  Eigen::VectorXd s;
  svd_kernel(m, u, s, v);
  const std::size_t k = static_cast<std::size_t>(s.size());

  Factorization f;
  f.kind = FactorizationKind::Svd;
  f.bipartition = p;
  f.spectrum.assign(s.data(), s.data() + s.size());
  f.factors.push_back(tensor_of<T>(u).reshaped(append_dim(uf.row_dims, k)));
  f.factors.push_back(real_diagonal(f.spectrum));
  f.factors.push_back(tensor_of<T>(Mat<T>(v.adjoint())).reshaped(prepend_dim(k, uf.col_dims)));
  f.truncation.rank = k;
  return f;
}

template <class T>
Factorization qr_impl(const detail::Unfolding& uf, const Bipartition& p) {
  const Mat<T> m = to_matrix<T>(uf.data.reshaped({uf.rows, uf.cols}));
  Mat<T> q, r;
  qr_kernel(m, q, r);

  Factorization f;
  f.kind = FactorizationKind::Qr;
  f.bipartition = p;
  f.factors.push_back(tensor_of<T>(q).reshaped(append_dim(uf.row_dims, uf.cols)));
  f.factors.push_back(tensor_of<T>(r).reshaped(prepend_dim(uf.cols, uf.col_dims)));
  f.truncation.rank = uf.cols;
  return f;
}

template <class T>
Factorization spectral_impl(const detail::Unfolding& uf, const Bipartition& p,
                            double hermitian_tol) {
  const Mat<T> m = to_matrix<T>(uf.data.reshaped({uf.rows, uf.cols}));
  const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
  const double asym = (m - m.adjoint().eval()).cwiseAbs().maxCoeff();
  if (asym > hermitian_tol * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "matrix is not Hermitian within tolerance: max asymmetry " << asym
       << " against max magnitude " << scale;
    throw ValidationError(os.str());
  }

  const Mat<T> h = (m + m.adjoint().eval()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat<T>> es(h);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed to converge");
  }
  const std::size_t k = uf.rows;
  Mat<T> u(k, k);
  std::vector<double> evals(k);
  for (std::size_t j = 0; j < k; ++j) {  // ascending -> descending by value
    u.col(static_cast<Eigen::Index>(j)) =
        es.eigenvectors().col(static_cast<Eigen::Index>(k - 1 - j));
    evals[j] = es.eigenvalues()(static_cast<Eigen::Index>(k - 1 - j));
  }
  fix_column_phases<T>(u, nullptr);

  Factorization f;
  f.kind = FactorizationKind::Spectral;
  f.bipartition = p;
  f.eigenvalues = evals;
  f.spectrum.resize(k);
  std::transform(evals.begin(), evals.end(), f.spectrum.begin(),
                 [](double x) { return std::abs(x); });
  std::sort(f.spectrum.begin(), f.spectrum.end(), std::greater<>());
  f.factors.push_back(tensor_of<T>(u).reshaped(append_dim(uf.row_dims, k)));
  f.factors.push_back(real_diagonal(evals));
  f.truncation.rank = k;
  return f;
}

// Last-axis column selection: out[..., j] = in[..., pick[j]].
DenseTensor gather_last_axis(const DenseTensor& t, const std::vector<std::size_t>& pick) {
  const std::size_t k = t.shape().back();
  const std::size_t rows = t.size() / k;
  Shape out_shape = t.shape();
  out_shape.back() = pick.size();
  return std::visit(
      [&](const auto& src) {
        std::decay_t<decltype(src)> out(rows * pick.size());
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < pick.size(); ++j) {
            out[r * pick.size() + j] = src[r * k + pick[j]];
          }
        }
        using T = typename std::decay_t<decltype(src)>::value_type;
        if constexpr (std::is_same_v<T, double>) {
          return DenseTensor::from_real(out_shape, std::move(out));
        } else {
          return DenseTensor::from_complex(out_shape, std::move(out));
        }
      },
      t.storage());
}

DenseTensor slice_first_axis(const DenseTensor& t, std::size_t r) {
  const std::size_t k = t.shape().front();
  const std::size_t row = t.size() / k;
  Shape out_shape = t.shape();
  out_shape.front() = r;
  return std::visit(
      [&](const auto& src) {
        std::decay_t<decltype(src)> out(src.begin(),
                                        src.begin() + static_cast<std::ptrdiff_t>(r * row));
        using T = typename std::decay_t<decltype(src)>::value_type;
        if constexpr (std::is_same_v<T, double>) {
          return DenseTensor::from_real(out_shape, std::move(out));
        } else {
          return DenseTensor::from_complex(out_shape, std::move(out));
        }
      },
      t.storage());
}

double tail_weight(const std::vector<double>& values, std::size_t from) {
  double w = 0.0;  // smallest terms first for a tight sum
  for (std::size_t i = values.size(); i-- > from;) w += values[i] * values[i];
  return w;
}

}  // namespace

Factorization svd(const DenseTensor& t, const Bipartition& p) {
  const auto uf = detail::unfold(t, p);
  return t.is_real() ? svd_impl<double>(uf, p) : svd_impl<Complex>(uf, p);
}

Factorization qr(const DenseTensor& t, const Bipartition& p) {
  const auto uf = detail::unfold(t, p);
  if (uf.rows < uf.cols) {
    std::ostringstream os;
    os << "qr requires the row group dimension (" << uf.rows
       << ") to be at least the column group dimension (" << uf.cols
       << "); swap the bipartition groups and transpose, or use svd";
    throw ValidationError(os.str());
  }
  return t.is_real() ? qr_impl<double>(uf, p) : qr_impl<Complex>(uf, p);
}

Factorization spectral(const DenseTensor& t, const Bipartition& p, double hermitian_tol) {
  const auto uf = detail::unfold(t, p);
  if (uf.rows != uf.cols) {
    std::ostringstream os;
    os << "spectral factorization requires a square matrix view (got " << uf.rows
       << " x " << uf.cols << ")";
    throw ValidationError(os.str());
  }
  return t.is_real() ? spectral_impl<double>(uf, p, hermitian_tol)
                     : spectral_impl<Complex>(uf, p, hermitian_tol);
}

Factorization truncate(const Factorization& f, std::size_t rank) {
  if (f.kind == FactorizationKind::Qr) {
    throw ValidationError("qr factorizations carry no spectrum to truncate");
  }
  const std::size_t k = f.spectrum.size();
  if (rank < 1 || rank > k) {
    std::ostringstream os;
    os << "truncation rank " << rank << " outside the valid range 1.." << k;
    throw ValidationError(os.str());
  }

  Factorization out;
  out.kind = f.kind;
  out.bipartition = f.bipartition;
  out.spectrum.assign(f.spectrum.begin(),
                      f.spectrum.begin() + static_cast<std::ptrdiff_t>(rank));
  out.truncation.rank = rank;
  out.truncation.discarded_weight = tail_weight(f.spectrum, rank);
  out.truncation.error = std::sqrt(out.truncation.discarded_weight);
  out.truncation.degenerate_boundary =
      rank < k && (f.spectrum[rank - 1] - f.spectrum[rank]) <= kDegenerateGap * f.spectrum[0];

  if (f.kind == FactorizationKind::Svd) {
    std::vector<std::size_t> pick(rank);
    std::iota(pick.begin(), pick.end(), 0);
    out.factors.push_back(gather_last_axis(f.factors[0], pick));
    out.factors.push_back(real_diagonal(out.spectrum));
    out.factors.push_back(slice_first_axis(f.factors[2], rank));
  } else {
    // Spectral: keep the rank largest-magnitude eigenvalues (ties by value
    // order, so the selection is deterministic).
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(f.eigenvalues[a]) > std::abs(f.eigenvalues[b]);
    });
    std::vector<std::size_t> pick(order.begin(),
                                  order.begin() + static_cast<std::ptrdiff_t>(rank));
    std::vector<double> evals(rank);
    for (std::size_t i = 0; i < rank; ++i) evals[i] = f.eigenvalues[pick[i]];
    out.eigenvalues = evals;
    out.factors.push_back(gather_last_axis(f.factors[0], pick));
    out.factors.push_back(real_diagonal(evals));
  }
  return out;
}

Factorization truncate_by_tolerance(const Factorization& f, double eps_max) {
  if (!(eps_max >= 0.0)) {
    throw ValidationError("truncation tolerance must be non-negative");
  }
  if (f.kind == FactorizationKind::Qr) {
    throw ValidationError("qr factorizations carry no spectrum to truncate");
  }
  const std::size_t k = f.spectrum.size();
  const double floor = f.spectrum.empty() ? 0.0 : kZeroFloor * f.spectrum[0];
  std::vector<double> eff(f.spectrum);
  for (double& v : eff) {
    if (v <= floor) v = 0.0;
  }
  std::size_t rank = k;
  for (std::size_t r = 1; r <= k; ++r) {
    if (std::sqrt(tail_weight(eff, r)) <= eps_max) {
      rank = r;
      break;
    }
  }
  return truncate(f, rank);
}

PrincipalSqrtResult principal_sqrt(const DenseTensor& rho, double psd_tol,
                                   double null_threshold) {
  if (rho.order() != 2 || rho.dim(0) != rho.dim(1)) {
    throw ValidationError("principal square root requires a square order-2 tensor");
  }
  const Factorization f = spectral(rho, {{0}, {1}}, psd_tol);
  const std::vector<double>& evals = f.eigenvalues;  // descending by value
  const std::size_t m = evals.size();
  const double lmax = evals.front();
  const double lmin = evals.back();
  const double scale = std::max(std::abs(lmax), std::abs(lmin));
  if (lmin < -psd_tol * scale) {
    std::ostringstream os;
    os << "matrix is not positive semidefinite: eigenvalue " << lmin
       << " below -" << psd_tol << " * " << scale;
    throw ValidationError(os.str());
  }

  const double tau = null_threshold * std::max(lmax, 0.0);
  std::size_t q = 0;
  while (q < m && evals[q] > tau) ++q;
  if (q == 0) {
    throw ValidationError(
        "every eigenvalue sits at or below the null threshold; the principal "
        "root would have rank zero");
  }

  PrincipalSqrtResult out;
  out.original_dim = m;
  out.retained_dim = q;
  out.condition_number = evals[0] / evals[q - 1];
  for (std::size_t i = q; i < m; ++i) out.discarded_weight += std::max(evals[i], 0.0);

  const DenseTensor& u_t = f.factors[0];
  const bool real = u_t.is_real();
  const auto build = [&](auto tag) {
    using T = decltype(tag);
    const Mat<T> u = to_matrix<T>(u_t);
    const Mat<T> uk = u.leftCols(static_cast<Eigen::Index>(q));
    Eigen::VectorXd sq(static_cast<Eigen::Index>(q));
    for (std::size_t i = 0; i < q; ++i) sq(static_cast<Eigen::Index>(i)) = std::sqrt(evals[i]);
    if (q == m) {
      const Mat<T> x = uk * sq.asDiagonal() * uk.adjoint();
      const Mat<T> xi = uk * sq.cwiseInverse().asDiagonal() * uk.adjoint();
      out.x = tensor_of<T>(x);
      out.x_inverse = tensor_of<T>(xi);
    } else {
      const Mat<T> x = uk * sq.asDiagonal();
      const Mat<T> xi = sq.cwiseInverse().asDiagonal() * uk.adjoint();
      out.x = tensor_of<T>(x);
      out.x_inverse = tensor_of<T>(xi);
    }
  };
  if (real) {
    build(double{});
  } else {
    build(Complex{});
  }
  return out;
}

namespace detail {

void thin_svd(const DenseTensor& m, DenseTensor& u, std::vector<double>& s,
              DenseTensor& vh) {
  if (m.order() != 2) throw ValidationError("thin_svd requires an order-2 tensor");
  const auto run = [&](auto tag) {
    using T = decltype(tag);
    const Mat<T> mm = to_matrix<T>(m);
    Mat<T> mu, mv;
    Eigen::VectorXd ms;
    svd_kernel(mm, mu, ms, mv);
    u = tensor_of<T>(mu);
    vh = tensor_of<T>(Mat<T>(mv.adjoint()));
    s.assign(ms.data(), ms.data() + ms.size());
  };
  if (m.is_real()) {
    run(double{});
  } else {
    run(Complex{});
  }
}

void thin_qr(const DenseTensor& m, DenseTensor& q, DenseTensor& r) {
  if (m.order() != 2) throw ValidationError("thin_qr requires an order-2 tensor");
  if (m.dim(0) < m.dim(1)) {
    throw ValidationError("thin_qr requires rows >= cols");
  }
  const auto run = [&](auto tag) {
    using T = decltype(tag);
    const Mat<T> mm = to_matrix<T>(m);
    Mat<T> mq, mr;
    qr_kernel(mm, mq, mr);
    q = tensor_of<T>(mq);
    r = tensor_of<T>(mr);
  };
  if (m.is_real()) {
    run(double{});
  } else {
    run(Complex{});
  }
}

DenseTensor invert_square(const DenseTensor& m, double& condition, double cond_limit) {
  if (m.order() != 2 || m.dim(0) != m.dim(1)) {
    throw ValidationError("matrix inverse requires a square order-2 tensor");
  }
  DenseTensor out;
  const auto run = [&](auto tag) {
    using T = decltype(tag);
    const Mat<T> mm = to_matrix<T>(m);
    Eigen::JacobiSVD<Mat<T>> svd(mm, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    const double smax = s(0);
    condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(condition <= cond_limit)) {
      std::ostringstream os;
      os << "matrix condition number " << condition << " exceeds " << cond_limit
         << "; treating it as singular";
      throw ValidationError(os.str());
    }
    const Mat<T> inv =
        svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
    out = tensor_of<T>(inv);
  };
  if (m.is_real()) {
    run(double{});
  } else {
    run(Complex{});
  }
  return out;
}

}  // namespace detail

}  // namespace tenkit
