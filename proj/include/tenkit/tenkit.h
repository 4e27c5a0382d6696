#ifndef TENKIT_TENKIT_H
#define TENKIT_TENKIT_H

/* C interface to the tenkit tensor network library.
 *
 * All functions return tnk_status; TNK_OK means success.  On failure the
 * thread-local message from tnk_last_error() describes what went wrong and
 * no output parameter has been written.  Objects returned through `out`
 * pointers are owned by the caller and released with the matching _free.
 * Strings returned through char** are released with tnk_string_free.
 *
 * Complex tensor data crosses the boundary as interleaved doubles
 * (re, im, re, im, ...) in row-major element order.
 */

#include <stddef.h>
#include <stdint.h>

#ifndef TNK_API
#if defined(_WIN32)
#define TNK_API __declspec(dllexport)
#else
#define TNK_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tnk_status {
  TNK_OK = 0,
  TNK_ERROR_VALIDATION = 1,
  TNK_ERROR_NUMERICAL = 2,
  TNK_ERROR_IO = 3,
  TNK_ERROR_OVERFLOW = 4,
  TNK_ERROR_INVALID_ARGUMENT = 5
} tnk_status;

typedef enum tnk_scalar_kind {
  TNK_SCALAR_REAL = 0,
  TNK_SCALAR_COMPLEX = 1
} tnk_scalar_kind;

typedef enum tnk_factor_kind {
  TNK_FACTOR_SVD = 0,
  TNK_FACTOR_QR = 1,
  TNK_FACTOR_SPECTRAL = 2
} tnk_factor_kind;

typedef struct tnk_tensor tnk_tensor;
typedef struct tnk_network tnk_network;
typedef struct tnk_tree tnk_tree;
typedef struct tnk_seq_cache tnk_seq_cache;
typedef struct tnk_factorization tnk_factorization;
typedef struct tnk_ttn tnk_ttn;

/* ---- diagnostics ---- */

/* Message for the most recent failure on this thread.  Never NULL; empty
 * string when no failure has occurred.  Valid until the next failing call
 * on the same thread. */
TNK_API const char* tnk_last_error(void);

TNK_API void tnk_string_free(char* s);

/* ---- tensors ---- */

TNK_API tnk_status tnk_tensor_create_real(const uint64_t* dims, uint32_t order,
                                          const double* data, tnk_tensor** out);

/* `interleaved` holds 2 * (product of dims) doubles. */
TNK_API tnk_status tnk_tensor_create_complex(const uint64_t* dims, uint32_t order,
                                             const double* interleaved,
                                             tnk_tensor** out);

TNK_API tnk_status tnk_tensor_clone(const tnk_tensor* t, tnk_tensor** out);
TNK_API void tnk_tensor_free(tnk_tensor* t);

TNK_API tnk_status tnk_tensor_kind(const tnk_tensor* t, tnk_scalar_kind* out);
TNK_API tnk_status tnk_tensor_order(const tnk_tensor* t, uint32_t* out);
TNK_API tnk_status tnk_tensor_dims(const tnk_tensor* t, uint64_t* dims);
TNK_API tnk_status tnk_tensor_size(const tnk_tensor* t, uint64_t* out);

/* Copies element data into `buffer`.  `capacity` counts doubles; a complex
 * tensor needs 2 * size.  Fails with TNK_ERROR_INVALID_ARGUMENT when the
 * buffer is too small. */
TNK_API tnk_status tnk_tensor_data(const tnk_tensor* t, double* buffer,
                                   uint64_t capacity);

TNK_API tnk_status tnk_tensor_save(const tnk_tensor* t, const char* path);
TNK_API tnk_status tnk_tensor_load(const char* path, tnk_tensor** out);

/* `perm` lists source axes in their new order and must have `order` entries. */
TNK_API tnk_status tnk_tensor_permute(const tnk_tensor* t, const uint32_t* perm,
                                      uint32_t order, tnk_tensor** out);

/* Fuses consecutive axis runs: group_sizes sums to the order, each group of
 * adjacent axes becomes one axis.  A group size above 1 fuses, 1 keeps. */
TNK_API tnk_status tnk_tensor_reshape_group(const tnk_tensor* t,
                                            const uint32_t* group_sizes,
                                            uint32_t ngroups, tnk_tensor** out);

/* Plain reshape to the given dimensions; the element count must match. */
TNK_API tnk_status tnk_tensor_reshape(const tnk_tensor* t, const uint64_t* dims,
                                      uint32_t order, tnk_tensor** out);

TNK_API tnk_status tnk_tensor_conjugate(const tnk_tensor* t, tnk_tensor** out);

/* Sum of elementwise products, no conjugation.  `im` may be NULL for real
 * inputs and receives 0 for them otherwise. */
TNK_API tnk_status tnk_tensor_ttr(const tnk_tensor* a, const tnk_tensor* b,
                                  double* re, double* im);

TNK_API tnk_status tnk_tensor_norm(const tnk_tensor* t, double* out);
TNK_API tnk_status tnk_tensor_difference_norm(const tnk_tensor* a,
                                              const tnk_tensor* b, double* out);

/* Property checks on a matrix unfolding.  `pass` gets 0/1, `deviation` the
 * measured departure, `reason` (optional, may be NULL) a diagnostic string.
 * Pass tol <= 0 for the default tolerance. */
TNK_API tnk_status tnk_tensor_is_unitary(const tnk_tensor* t,
                                         const uint32_t* row_axes, uint32_t nrow,
                                         const uint32_t* col_axes, uint32_t ncol,
                                         double tol, int* pass, double* deviation,
                                         char** reason);
TNK_API tnk_status tnk_tensor_is_isometry(const tnk_tensor* t,
                                          const uint32_t* row_axes, uint32_t nrow,
                                          const uint32_t* col_axes, uint32_t ncol,
                                          double tol, int* pass, double* deviation,
                                          char** reason);
TNK_API tnk_status tnk_tensor_is_projector(const tnk_tensor* t, double tol,
                                           int* pass, double* deviation,
                                           char** reason);

/* ---- pairwise contraction ---- */

/* Contracts a_axes[i] of `a` with b_axes[i] of `b`.  Result axes are the
 * free axes of `a` in order, then the free axes of `b`. */
TNK_API tnk_status tnk_contract_pair(const tnk_tensor* a, const tnk_tensor* b,
                                     const uint32_t* a_axes, const uint32_t* b_axes,
                                     uint32_t naxes, tnk_tensor** out);

/* Multiply count for the same contraction: |dims of a| * |dims of b| divided
 * by the shared dimensions. */
TNK_API tnk_status tnk_pair_cost(const tnk_tensor* a, const tnk_tensor* b,
                                 const uint32_t* a_axes, const uint32_t* b_axes,
                                 uint32_t naxes, uint64_t* cost);

/* ---- networks ---- */

TNK_API tnk_status tnk_network_create(tnk_network** out);
TNK_API void tnk_network_free(tnk_network* n);

/* Adds a tensor under a unique id.  `labels` has one entry per axis: a
 * positive label names a bond shared with exactly one other axis, negative
 * labels -1, -2, ... name the open axes of the result. */
TNK_API tnk_status tnk_network_add(tnk_network* n, const char* id,
                                   const int32_t* labels, uint32_t nlabels,
                                   const tnk_tensor* t);

TNK_API tnk_status tnk_network_size(const tnk_network* n, uint32_t* out);

/* Structural diagnostics as a JSON array of strings; empty array means the
 * network is well formed.  Returns TNK_OK either way. */
TNK_API tnk_status tnk_network_validate(const tnk_network* n,
                                        char** diagnostics_json);

TNK_API tnk_status tnk_network_load(const char* manifest_path, tnk_network** out);
TNK_API tnk_status tnk_network_save(const tnk_network* n,
                                    const char* manifest_path);

/* Attaches a contraction plan carried along by save/load; NULL clears. */
TNK_API tnk_status tnk_network_set_sequence(tnk_network* n, const tnk_tree* tree);

/* *out becomes NULL when no plan is stored. */
TNK_API tnk_status tnk_network_get_sequence(const tnk_network* n, tnk_tree** out);

/* Contracts the whole network.  `tree` may be NULL: a stored plan is used
 * if present, otherwise one is searched (exhaustive up to 16 tensors, greedy
 * beyond).  `report_json` (optional, may be NULL) receives the step list. */
TNK_API tnk_status tnk_network_contract(const tnk_network* n, const tnk_tree* tree,
                                        tnk_tensor** value, char** report_json);

/* ---- contraction plans ---- */

/* use_greedy = 0 searches exhaustively over pairwise plans (16 tensors at
 * most), nonzero uses the greedy cheapest-pair heuristic. */
TNK_API tnk_status tnk_search_sequence(const tnk_network* n, int use_greedy,
                                       tnk_tree** out);

TNK_API void tnk_tree_free(tnk_tree* t);
TNK_API tnk_status tnk_tree_clone(const tnk_tree* t, tnk_tree** out);
TNK_API tnk_status tnk_tree_to_json(const tnk_tree* t, char** json);
TNK_API tnk_status tnk_tree_from_json(const char* json, tnk_tree** out);

/* Costs are known for searched plans; plans parsed from JSON have none
 * until used.  `has_costs` gets 0/1. */
TNK_API tnk_status tnk_tree_total_cost(const tnk_tree* t, int* has_costs,
                                       uint64_t* cost);

/* ---- plan cache ---- */

/* Caches plans by network structure.  A hit requires every bond dimension
 * to be within `drift_factor` of the cached value in both directions.
 * Pass drift_factor <= 0 for the default factor of 2. */
TNK_API tnk_status tnk_seq_cache_create(double drift_factor, tnk_seq_cache** out);
TNK_API void tnk_seq_cache_free(tnk_seq_cache* c);

TNK_API tnk_status tnk_seq_cache_get(tnk_seq_cache* c, const tnk_network* n,
                                     int use_greedy, tnk_tree** out);

TNK_API tnk_status tnk_seq_cache_stats(const tnk_seq_cache* c, uint64_t* searches,
                                       uint64_t* hits, uint64_t* entries);

/* ---- factorizations ---- */

/* Factorizes the unfolding of `t` with `row_axes` fused as rows and
 * `col_axes` as columns.  Together they must cover every axis once.
 *
 *   TNK_FACTOR_SVD       factors: U, S, Vh       (any shape)
 *   TNK_FACTOR_QR        factors: Q, R           (rows >= cols)
 *   TNK_FACTOR_SPECTRAL  factors: U, D           (square, Hermitian)
 */
TNK_API tnk_status tnk_decompose(const tnk_tensor* t, tnk_factor_kind kind,
                                 const uint32_t* row_axes, uint32_t nrow,
                                 const uint32_t* col_axes, uint32_t ncol,
                                 tnk_factorization** out);

TNK_API void tnk_factorization_free(tnk_factorization* f);

TNK_API tnk_status tnk_factorization_kind(const tnk_factorization* f,
                                          tnk_factor_kind* out);
TNK_API tnk_status tnk_factor_count(const tnk_factorization* f, uint32_t* out);
TNK_API tnk_status tnk_factor_get(const tnk_factorization* f, uint32_t index,
                                  tnk_tensor** out);

/* Singular value magnitudes (or |eigenvalue| for spectral), descending.
 * Call with values = NULL to query the count. */
TNK_API tnk_status tnk_factor_spectrum(const tnk_factorization* f, double* values,
                                       uint64_t capacity, uint64_t* count);

/* Signed eigenvalues, descending by value; spectral factorizations only. */
TNK_API tnk_status tnk_factor_eigenvalues(const tnk_factorization* f,
                                          double* values, uint64_t capacity,
                                          uint64_t* count);

TNK_API tnk_status tnk_factor_truncate(const tnk_factorization* f, uint64_t rank,
                                       tnk_factorization** out);

/* Smallest rank whose truncation error stays within eps_max. */
TNK_API tnk_status tnk_factor_truncate_by_tolerance(const tnk_factorization* f,
                                                    double eps_max,
                                                    tnk_factorization** out);

/* Truncation bookkeeping; an untruncated factorization reports its full rank
 * with zero error.  `degenerate` flags a cut through a (near) degenerate
 * value pair. */
TNK_API tnk_status tnk_factor_truncation_info(const tnk_factorization* f,
                                              uint64_t* rank,
                                              double* discarded_weight,
                                              double* error, int* degenerate);

/* Principal square root of a positive semidefinite matrix, dropping the
 * (near) null space.  X reproduces rho as X X^dagger; x_inverse is its
 * pseudo-inverse transform.  Pass tolerances <= 0 for defaults.
 * `report_json` (optional) records dims, condition number, discarded weight. */
TNK_API tnk_status tnk_principal_sqrt(const tnk_tensor* rho, double psd_tol,
                                      double null_threshold, tnk_tensor** x,
                                      tnk_tensor** x_inverse, char** report_json);

/* ---- tree tensor networks ---- */

/* The network must be connected, all closed labels pairwise, and acyclic. */
TNK_API tnk_status tnk_ttn_build(const tnk_network* n, tnk_ttn** out);
TNK_API void tnk_ttn_free(tnk_ttn* t);

TNK_API tnk_status tnk_ttn_load(const char* manifest_path, tnk_ttn** out);
TNK_API tnk_status tnk_ttn_save(const tnk_ttn* t, const char* manifest_path);

/* *center becomes NULL when no orthogonality center is set. */
TNK_API tnk_status tnk_ttn_center(const tnk_ttn* t, char** center);

TNK_API tnk_status tnk_ttn_tensor(const tnk_ttn* t, const char* id,
                                  tnk_tensor** out);

/* Copy of the underlying network (tensors, labels, ids). */
TNK_API tnk_status tnk_ttn_network(const tnk_ttn* t, tnk_network** out);

/* Branch layout around a prospective center, as JSON. */
TNK_API tnk_status tnk_ttn_branches(const tnk_ttn* t, const char* center,
                                    char** branches_json);

/* Inserts X and its inverse on the bond `edge_label`; the represented state
 * is unchanged.  X must be square and match the bond dimension. */
TNK_API tnk_status tnk_ttn_gauge(const tnk_ttn* t, int32_t edge_label,
                                 const tnk_tensor* x, tnk_ttn** out);

/* Makes `center` the orthogonality center.  direct_method = 0 pulls
 * isometries through from the leaves; nonzero computes each branch density
 * matrix and applies its principal square root directly. */
TNK_API tnk_status tnk_ttn_orthogonalize(const tnk_ttn* t, const char* center,
                                         int direct_method, tnk_ttn** out,
                                         char** report_json);

/* Checks the isometric property of every branch around `center` (NULL means
 * the stored center).  `pass` gets 0/1; per-branch deviations go to
 * `report_json` (optional).  tol <= 0 for the default 1e-8. */
TNK_API tnk_status tnk_ttn_verify_center(const tnk_ttn* t, const char* center,
                                         double tol, int* pass,
                                         char** report_json);

/* Norm of the represented state, read off the center tensor.  Fails unless
 * a verified center is present. */
TNK_API tnk_status tnk_ttn_center_norm(const tnk_ttn* t, double verify_tol,
                                       double* out);

/* Splits the center tensor along the given bipartition and truncates the
 * bond between the two halves.  rank > 0 picks the rank directly, rank = 0
 * picks the smallest rank with error within eps_max.  compute_global adds
 * the error of the full represented state to the report. */
TNK_API tnk_status tnk_ttn_truncate_center(const tnk_ttn* t,
                                           const uint32_t* row_axes, uint32_t nrow,
                                           const uint32_t* col_axes, uint32_t ncol,
                                           uint64_t rank, double eps_max,
                                           int compute_global, tnk_ttn** out,
                                           char** report_json);

/* Contracts the whole tree to its represented tensor. */
TNK_API tnk_status tnk_ttn_contract(const tnk_ttn* t, tnk_tensor** out);

#ifdef __cplusplus
}
#endif

#endif /* TENKIT_TENKIT_H */
