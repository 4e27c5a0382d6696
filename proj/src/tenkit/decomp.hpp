#pragma once

#include <cstdint>
#include <vector>

#include "tenkit/tensor.hpp"

namespace tenkit {

enum class FactorizationKind { Svd, Qr, Spectral };

struct TruncationInfo {
  std::size_t rank = 0;              // retained values
  double discarded_weight = 0.0;     // sum of squared discarded values
  double error = 0.0;                // sqrt(discarded_weight)
  bool degenerate_boundary = false;  // cut separates a near-degenerate pair
};

// A tensor factorization across a bipartition of its indices. With M the
// d1 x d2 matrix view (row axes fused, then column axes):
//   Svd:      factors {U, S, Vh}; M = U S Vh (thin). U carries the row axes
//             plus one new axis, S is (k, k) real diagonal with the singular
//             values descending, Vh carries the new axis plus the col axes.
//             Phases are fixed so each U column's largest-magnitude entry is
//             real positive, making the factors deterministic.
//   Qr:       factors {Q, R}; M = Q R with Q isometric (row axes + new) and
//             R upper triangular (new + col axes) with real non-negative
//             diagonal. Requires d1 >= d2.
//   Spectral: factors {U, D}; M = U D U† for Hermitian M. D is real diagonal,
//             eigenvalues descending by value; U columns phase-fixed as above.
// spectrum holds magnitudes descending: singular values, or |eigenvalue|.
struct Factorization {
  FactorizationKind kind = FactorizationKind::Svd;
  std::vector<DenseTensor> factors;
  std::vector<double> spectrum;
  std::vector<double> eigenvalues;  // Spectral only, descending by value
  Bipartition bipartition;
  TruncationInfo truncation;
};

Factorization svd(const DenseTensor& t, const Bipartition& p);
Factorization qr(const DenseTensor& t, const Bipartition& p);
Factorization spectral(const DenseTensor& t, const Bipartition& p,
                       double hermitian_tol = 1e-10);

// Rank-r slice keeping the largest spectrum values (Svd or Spectral). The
// reported error sqrt(sum of discarded squares) is optimal over rank-r
// approximations in the Frobenius distance.
Factorization truncate(const Factorization& f, std::size_t rank);

// Smallest rank (at least 1) whose truncation error stays <= eps_max.
// eps_max == 0 keeps exactly the values above a 1e-14 relative floor.
Factorization truncate_by_tolerance(const Factorization& f, double eps_max);

struct PrincipalSqrtResult {
  DenseTensor x;          // rho = x x†
  DenseTensor x_inverse;  // x_inverse rho x_inverse† = identity (retained part)
  std::size_t original_dim = 0;
  std::size_t retained_dim = 0;
  double condition_number = 0.0;  // retained eigenvalue spread
  double discarded_weight = 0.0;  // trace weight of dropped eigenvalues
};

// Principal square root of a Hermitian PSD matrix. Eigenvalues at or below
// null_threshold * lmax are dropped, shrinking the factor to m x q (its
// inverse then acts on the retained subspace only); an eigenvalue below
// -psd_tol * |spectrum| rejects the input as not PSD.
PrincipalSqrtResult principal_sqrt(const DenseTensor& rho, double psd_tol = 1e-10,
                                   double null_threshold = 1e-12);

namespace detail {

// Order-2 kernels shared with the tree-gauge layer; factor conventions and
// phase fixes match the public operations.
void thin_svd(const DenseTensor& m, DenseTensor& u, std::vector<double>& s,
              DenseTensor& vh);
void thin_qr(const DenseTensor& m, DenseTensor& q, DenseTensor& r);

// SVD-based inverse with a conditioning gate; throws ValidationError when the
// condition number exceeds cond_limit.
DenseTensor invert_square(const DenseTensor& m, double& condition,
                          double cond_limit = 1e14);

}  // namespace detail

}  // namespace tenkit
