// C boundary: opaque handles over the value-semantic core, exceptions mapped
// to status codes, reports serialized as JSON strings.

#include "tenkit/tenkit.h"

#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "tenkit/contract.hpp"
#include "tenkit/decomp.hpp"
#include "tenkit/errors.hpp"
#include "tenkit/io.hpp"
#include "tenkit/netcon.hpp"
#include "tenkit/sequence.hpp"
#include "tenkit/tensor.hpp"
#include "tenkit/ttn.hpp"

struct tnk_tensor {
  tenkit::DenseTensor v;
};
struct tnk_network {
  tenkit::Network v;
};
struct tnk_tree {
  tenkit::ContractionTree v;
};
struct tnk_seq_cache {
  tenkit::SequenceCache v;
  explicit tnk_seq_cache(double drift) : v(drift) {}
};
struct tnk_factorization {
  tenkit::Factorization v;
};
struct tnk_ttn {
  tenkit::TreeNetwork v;
};

namespace {

using nlohmann::json;

thread_local std::string t_last_error;

tnk_status fail(tnk_status s, std::string msg) {
  t_last_error = std::move(msg);
  return s;
}

tnk_status invalid(const char* msg) { return fail(TNK_ERROR_INVALID_ARGUMENT, msg); }

template <class F>
tnk_status guarded(F&& f) {
  try {
    return f();
  } catch (const tenkit::ValidationError& e) {
    return fail(TNK_ERROR_VALIDATION, e.what());
  } catch (const tenkit::OverflowError& e) {
    return fail(TNK_ERROR_OVERFLOW, e.what());
  } catch (const tenkit::IoError& e) {
    return fail(TNK_ERROR_IO, e.what());
  } catch (const tenkit::NumericalError& e) {
    return fail(TNK_ERROR_NUMERICAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TNK_ERROR_NUMERICAL, "allocation failed");
  } catch (const std::exception& e) {
    return fail(TNK_ERROR_NUMERICAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tenkit::Shape to_shape(const uint64_t* dims, uint32_t order) {
  tenkit::Shape s(order);
  for (uint32_t i = 0; i < order; ++i) s[i] = static_cast<std::size_t>(dims[i]);
  return s;
}

std::vector<std::size_t> to_axes(const uint32_t* axes, uint32_t n) {
  std::vector<std::size_t> out(n);
  for (uint32_t i = 0; i < n; ++i) out[i] = axes[i];
  return out;
}

tenkit::Bipartition to_bipartition(const uint32_t* row_axes, uint32_t nrow,
                                   const uint32_t* col_axes, uint32_t ncol) {
  return tenkit::Bipartition{to_axes(row_axes, nrow), to_axes(col_axes, ncol)};
}

json tree_json(const tenkit::ContractionTree& tree) {
  if (tree.empty()) return nullptr;
  return json::parse(tenkit::tree_to_json(tree));
}

json contraction_report_json(const tenkit::ContractionReport& r) {
  json steps = json::array();
  for (const tenkit::ContractionStep& s : r.steps) {
    json j{{"kind", s.kind}, {"left", s.left}, {"labels", s.labels}, {"cost", s.cost}};
    if (!s.right.empty()) j["right"] = s.right;
    steps.push_back(std::move(j));
  }
  return json{{"steps", std::move(steps)},
              {"total_cost", r.total_cost},
              {"tree", tree_json(r.tree)}};
}

json branch_reports_json(const char* method, const std::vector<tenkit::BranchReport>& bs) {
  json arr = json::array();
  for (const tenkit::BranchReport& b : bs) {
    arr.push_back(json{{"root_label", b.root_label},
                       {"old_dim", b.old_dim},
                       {"new_dim", b.new_dim},
                       {"condition_number", b.condition_number},
                       {"discarded_weight", b.discarded_weight}});
  }
  return json{{"method", method}, {"branches", std::move(arr)}};
}

void write_predicate(const tenkit::PredicateResult& r, int* pass, double* deviation,
                     char** reason) {
  if (pass) *pass = r.pass ? 1 : 0;
  if (deviation) *deviation = r.deviation;
  if (reason) *reason = dup_string(r.reason);
}

tnk_status copy_values(const std::vector<double>& src, double* values, uint64_t capacity,
                       uint64_t* count) {
  if (count) *count = src.size();
  if (!values) return TNK_OK;
  if (capacity < src.size()) return invalid("buffer too small");
  std::memcpy(values, src.data(), src.size() * sizeof(double));
  return TNK_OK;
}

}  // namespace

extern "C" {

const char* tnk_last_error(void) { return t_last_error.c_str(); }

void tnk_string_free(char* s) { delete[] s; }

/* ---- tensors ---- */

tnk_status tnk_tensor_create_real(const uint64_t* dims, uint32_t order,
                                  const double* data, tnk_tensor** out) {
  if (!out || (!dims && order > 0) || !data) return invalid("null argument");
  return guarded([&] {
    tenkit::Shape shape = to_shape(dims, order);
    std::vector<double> values(data, data + tenkit::shape_size(shape));
    *out = new tnk_tensor{tenkit::DenseTensor::from_real(std::move(shape), std::move(values))};
    return TNK_OK;
  });
}

tnk_status tnk_tensor_create_complex(const uint64_t* dims, uint32_t order,
                                     const double* interleaved, tnk_tensor** out) {
  if (!out || (!dims && order > 0) || !interleaved) return invalid("null argument");
  return guarded([&] {
    tenkit::Shape shape = to_shape(dims, order);
    std::size_t n = tenkit::shape_size(shape);
    std::vector<tenkit::Complex> values(n);
    for (std::size_t i = 0; i < n; ++i)
      values[i] = tenkit::Complex(interleaved[2 * i], interleaved[2 * i + 1]);
    *out = new tnk_tensor{tenkit::DenseTensor::from_complex(std::move(shape), std::move(values))};
    return TNK_OK;
  });
}

tnk_status tnk_tensor_clone(const tnk_tensor* t, tnk_tensor** out) {
  if (!t || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_tensor{t->v};
    return TNK_OK;
  });
}

void tnk_tensor_free(tnk_tensor* t) { delete t; }

tnk_status tnk_tensor_kind(const tnk_tensor* t, tnk_scalar_kind* out) {
  if (!t || !out) return invalid("null argument");
  *out = t->v.is_real() ? TNK_SCALAR_REAL : TNK_SCALAR_COMPLEX;
  return TNK_OK;
}

tnk_status tnk_tensor_order(const tnk_tensor* t, uint32_t* out) {
  if (!t || !out) return invalid("null argument");
  *out = static_cast<uint32_t>(t->v.order());
  return TNK_OK;
}

tnk_status tnk_tensor_dims(const tnk_tensor* t, uint64_t* dims) {
  if (!t || (!dims && t->v.order() > 0)) return invalid("null argument");
  const tenkit::Shape& s = t->v.shape();
  for (std::size_t i = 0; i < s.size(); ++i) dims[i] = s[i];
  return TNK_OK;
}

tnk_status tnk_tensor_size(const tnk_tensor* t, uint64_t* out) {
  if (!t || !out) return invalid("null argument");
  *out = t->v.size();
  return TNK_OK;
}

tnk_status tnk_tensor_data(const tnk_tensor* t, double* buffer, uint64_t capacity) {
  if (!t || !buffer) return invalid("null argument");
  return guarded([&] {
    if (t->v.is_real()) {
      auto src = t->v.real_data();
      if (capacity < src.size()) return invalid("buffer too small");
      std::memcpy(buffer, src.data(), src.size() * sizeof(double));
    } else {
      auto src = t->v.complex_data();
      if (capacity < 2 * src.size()) return invalid("buffer too small");
      for (std::size_t i = 0; i < src.size(); ++i) {
        buffer[2 * i] = src[i].real();
        buffer[2 * i + 1] = src[i].imag();
      }
    }
    return TNK_OK;
  });
}

tnk_status tnk_tensor_save(const tnk_tensor* t, const char* path) {
  if (!t || !path) return invalid("null argument");
  return guarded([&] {
    tenkit::save_tensor(t->v, path);
    return TNK_OK;
  });
}

tnk_status tnk_tensor_load(const char* path, tnk_tensor** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_tensor{tenkit::load_tensor(path)};
    return TNK_OK;
  });
}

tnk_status tnk_tensor_permute(const tnk_tensor* t, const uint32_t* perm, uint32_t order,
                              tnk_tensor** out) {
  if (!t || !out || (!perm && order > 0)) return invalid("null argument");
  return guarded([&] {
    std::vector<std::size_t> p = to_axes(perm, order);
    *out = new tnk_tensor{tenkit::permute(t->v, p)};
    return TNK_OK;
  });
}

tnk_status tnk_tensor_reshape_group(const tnk_tensor* t, const uint32_t* group_sizes,
                                    uint32_t ngroups, tnk_tensor** out) {
  if (!t || !out || (!group_sizes && ngroups > 0)) return invalid("null argument");
  return guarded([&] {
    std::vector<std::vector<std::size_t>> groups;
    groups.reserve(ngroups);
    std::size_t axis = 0;
    for (uint32_t g = 0; g < ngroups; ++g) {
      std::vector<std::size_t> group;
      for (uint32_t i = 0; i < group_sizes[g]; ++i) group.push_back(axis++);
      groups.push_back(std::move(group));
    }
    if (axis != t->v.order())
      throw tenkit::ValidationError("group sizes must cover every axis exactly once");
    *out = new tnk_tensor{tenkit::reshape_group(t->v, groups)};
    return TNK_OK;
  });
}

tnk_status tnk_tensor_reshape(const tnk_tensor* t, const uint64_t* dims, uint32_t order,
                              tnk_tensor** out) {
  if (!t || !out || (!dims && order > 0)) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_tensor{t->v.reshaped(to_shape(dims, order))};
    return TNK_OK;
  });
}

tnk_status tnk_tensor_conjugate(const tnk_tensor* t, tnk_tensor** out) {
  if (!t || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_tensor{tenkit::conjugate(t->v)};
    return TNK_OK;
  });
}

tnk_status tnk_tensor_ttr(const tnk_tensor* a, const tnk_tensor* b, double* re,
                          double* im) {
  if (!a || !b || !re) return invalid("null argument");
  return guarded([&] {
    tenkit::Complex v = tenkit::ttr(a->v, b->v);
    *re = v.real();
    if (im) *im = v.imag();
    return TNK_OK;
  });
}

tnk_status tnk_tensor_norm(const tnk_tensor* t, double* out) {
  if (!t || !out) return invalid("null argument");
  return guarded([&] {
    *out = tenkit::frobenius_norm(t->v);
    return TNK_OK;
  });
}

tnk_status tnk_tensor_difference_norm(const tnk_tensor* a, const tnk_tensor* b,
                                      double* out) {
  if (!a || !b || !out) return invalid("null argument");
  return guarded([&] {
    *out = tenkit::difference_norm(a->v, b->v);
    return TNK_OK;
  });
}

tnk_status tnk_tensor_is_unitary(const tnk_tensor* t, const uint32_t* row_axes,
                                 uint32_t nrow, const uint32_t* col_axes, uint32_t ncol,
                                 double tol, int* pass, double* deviation, char** reason) {
  if (!t || (!row_axes && nrow > 0) || (!col_axes && ncol > 0))
    return invalid("null argument");
  return guarded([&] {
    tenkit::Bipartition p = to_bipartition(row_axes, nrow, col_axes, ncol);
    double eff = tol > 0 ? tol : tenkit::kDefaultPredicateTol;
    write_predicate(tenkit::is_unitary(t->v, p, eff), pass, deviation, reason);
    return TNK_OK;
  });
}

tnk_status tnk_tensor_is_isometry(const tnk_tensor* t, const uint32_t* row_axes,
                                  uint32_t nrow, const uint32_t* col_axes, uint32_t ncol,
                                  double tol, int* pass, double* deviation, char** reason) {
  if (!t || (!row_axes && nrow > 0) || (!col_axes && ncol > 0))
    return invalid("null argument");
  return guarded([&] {
    tenkit::Bipartition p = to_bipartition(row_axes, nrow, col_axes, ncol);
    double eff = tol > 0 ? tol : tenkit::kDefaultPredicateTol;
    write_predicate(tenkit::is_isometry(t->v, p, eff), pass, deviation, reason);
    return TNK_OK;
  });
}

tnk_status tnk_tensor_is_projector(const tnk_tensor* t, double tol, int* pass,
                                   double* deviation, char** reason) {
  if (!t) return invalid("null argument");
  return guarded([&] {
    double eff = tol > 0 ? tol : tenkit::kDefaultPredicateTol;
    write_predicate(tenkit::is_projector(t->v, eff), pass, deviation, reason);
    return TNK_OK;
  });
}

/* ---- pairwise contraction ---- */

tnk_status tnk_contract_pair(const tnk_tensor* a, const tnk_tensor* b,
                             const uint32_t* a_axes, const uint32_t* b_axes,
                             uint32_t naxes, tnk_tensor** out) {
  if (!a || !b || !out || ((!a_axes || !b_axes) && naxes > 0))
    return invalid("null argument");
  return guarded([&] {
    std::vector<std::size_t> ax = to_axes(a_axes, naxes), bx = to_axes(b_axes, naxes);
    *out = new tnk_tensor{tenkit::contract_pair(a->v, b->v, ax, bx)};
    return TNK_OK;
  });
}

tnk_status tnk_pair_cost(const tnk_tensor* a, const tnk_tensor* b,
                         const uint32_t* a_axes, const uint32_t* b_axes, uint32_t naxes,
                         uint64_t* cost) {
  if (!a || !b || !cost || ((!a_axes || !b_axes) && naxes > 0))
    return invalid("null argument");
  return guarded([&] {
    std::vector<std::size_t> ax = to_axes(a_axes, naxes), bx = to_axes(b_axes, naxes);
    *cost = tenkit::pair_cost(a->v.shape(), b->v.shape(), ax, bx);
    return TNK_OK;
  });
}

/* ---- networks ---- */

tnk_status tnk_network_create(tnk_network** out) {
  if (!out) return invalid("null argument");
  *out = new tnk_network{};
  return TNK_OK;
}

void tnk_network_free(tnk_network* n) { delete n; }

tnk_status tnk_network_add(tnk_network* n, const char* id, const int32_t* labels,
                           uint32_t nlabels, const tnk_tensor* t) {
  if (!n || !id || !t || (!labels && nlabels > 0)) return invalid("null argument");
  return guarded([&] {
    std::vector<int> ls(labels, labels + nlabels);
    n->v.add(id, std::move(ls), t->v);
    return TNK_OK;
  });
}

tnk_status tnk_network_size(const tnk_network* n, uint32_t* out) {
  if (!n || !out) return invalid("null argument");
  *out = static_cast<uint32_t>(n->v.size());
  return TNK_OK;
}

tnk_status tnk_network_validate(const tnk_network* n, char** diagnostics_json) {
  if (!n || !diagnostics_json) return invalid("null argument");
  return guarded([&] {
    json arr = json::array();
    for (const std::string& d : tenkit::validate(n->v)) arr.push_back(d);
    *diagnostics_json = dup_string(arr.dump());
    return TNK_OK;
  });
}

tnk_status tnk_network_load(const char* manifest_path, tnk_network** out) {
  if (!manifest_path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_network{tenkit::load_network(manifest_path)};
    return TNK_OK;
  });
}

tnk_status tnk_network_save(const tnk_network* n, const char* manifest_path) {
  if (!n || !manifest_path) return invalid("null argument");
  return guarded([&] {
    tenkit::save_network(n->v, manifest_path);
    return TNK_OK;
  });
}

tnk_status tnk_network_set_sequence(tnk_network* n, const tnk_tree* tree) {
  if (!n) return invalid("null argument");
  if (tree)
    n->v.sequence = tree->v;
  else
    n->v.sequence.reset();
  return TNK_OK;
}

tnk_status tnk_network_get_sequence(const tnk_network* n, tnk_tree** out) {
  if (!n || !out) return invalid("null argument");
  *out = n->v.sequence ? new tnk_tree{*n->v.sequence} : nullptr;
  return TNK_OK;
}

tnk_status tnk_network_contract(const tnk_network* n, const tnk_tree* tree,
                                tnk_tensor** value, char** report_json) {
  if (!n || !value) return invalid("null argument");
  return guarded([&] {
    tenkit::ContractionResult r =
        tenkit::contract_network(n->v, tree ? &tree->v : nullptr);
    if (report_json) *report_json = dup_string(contraction_report_json(r.report).dump());
    *value = new tnk_tensor{std::move(r.value)};
    return TNK_OK;
  });
}

/* ---- contraction plans ---- */

tnk_status tnk_search_sequence(const tnk_network* n, int use_greedy, tnk_tree** out) {
  if (!n || !out) return invalid("null argument");
  return guarded([&] {
    tenkit::SearchMethod m =
        use_greedy ? tenkit::SearchMethod::Greedy : tenkit::SearchMethod::Dp;
    *out = new tnk_tree{tenkit::search_sequence(n->v, m)};
    return TNK_OK;
  });
}

void tnk_tree_free(tnk_tree* t) { delete t; }

tnk_status tnk_tree_clone(const tnk_tree* t, tnk_tree** out) {
  if (!t || !out) return invalid("null argument");
  *out = new tnk_tree{t->v};
  return TNK_OK;
}

tnk_status tnk_tree_to_json(const tnk_tree* t, char** out) {
  if (!t || !out) return invalid("null argument");
  return guarded([&] {
    *out = dup_string(tenkit::tree_to_json(t->v));
    return TNK_OK;
  });
}

tnk_status tnk_tree_from_json(const char* text, tnk_tree** out) {
  if (!text || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_tree{tenkit::tree_from_json(text)};
    return TNK_OK;
  });
}

tnk_status tnk_tree_total_cost(const tnk_tree* t, int* has_costs, uint64_t* cost) {
  if (!t) return invalid("null argument");
  if (has_costs) *has_costs = t->v.has_costs ? 1 : 0;
  if (cost) *cost = t->v.has_costs ? t->v.total_cost : 0;
  return TNK_OK;
}

/* ---- plan cache ---- */

tnk_status tnk_seq_cache_create(double drift_factor, tnk_seq_cache** out) {
  if (!out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_seq_cache(drift_factor > 0 ? drift_factor : 2.0);
    return TNK_OK;
  });
}

void tnk_seq_cache_free(tnk_seq_cache* c) { delete c; }

tnk_status tnk_seq_cache_get(tnk_seq_cache* c, const tnk_network* n, int use_greedy,
                             tnk_tree** out) {
  if (!c || !n || !out) return invalid("null argument");
  return guarded([&] {
    tenkit::SearchMethod m =
        use_greedy ? tenkit::SearchMethod::Greedy : tenkit::SearchMethod::Dp;
    *out = new tnk_tree{c->v.get_or_search(n->v, m)};
    return TNK_OK;
  });
}

tnk_status tnk_seq_cache_stats(const tnk_seq_cache* c, uint64_t* searches,
                               uint64_t* hits, uint64_t* entries) {
  if (!c) return invalid("null argument");
  if (searches) *searches = c->v.searches();
  if (hits) *hits = c->v.hits();
  if (entries) *entries = c->v.entries();
  return TNK_OK;
}

/* ---- factorizations ---- */

tnk_status tnk_decompose(const tnk_tensor* t, tnk_factor_kind kind,
                         const uint32_t* row_axes, uint32_t nrow,
                         const uint32_t* col_axes, uint32_t ncol,
                         tnk_factorization** out) {
  if (!t || !out || (!row_axes && nrow > 0) || (!col_axes && ncol > 0))
    return invalid("null argument");
  return guarded([&] {
    tenkit::Bipartition p = to_bipartition(row_axes, nrow, col_axes, ncol);
    tenkit::Factorization f;
    switch (kind) {
      case TNK_FACTOR_SVD:
        f = tenkit::svd(t->v, p);
        break;
      case TNK_FACTOR_QR:
        f = tenkit::qr(t->v, p);
        break;
      case TNK_FACTOR_SPECTRAL:
        f = tenkit::spectral(t->v, p);
        break;
      default:
        return invalid("unknown factorization kind");
    }
    *out = new tnk_factorization{std::move(f)};
    return TNK_OK;
  });
}

void tnk_factorization_free(tnk_factorization* f) { delete f; }

tnk_status tnk_factorization_kind(const tnk_factorization* f, tnk_factor_kind* out) {
  if (!f || !out) return invalid("null argument");
  switch (f->v.kind) {
    case tenkit::FactorizationKind::Svd:
      *out = TNK_FACTOR_SVD;
      break;
    case tenkit::FactorizationKind::Qr:
      *out = TNK_FACTOR_QR;
      break;
    case tenkit::FactorizationKind::Spectral:
      *out = TNK_FACTOR_SPECTRAL;
      break;
  }
  return TNK_OK;
}

tnk_status tnk_factor_count(const tnk_factorization* f, uint32_t* out) {
  if (!f || !out) return invalid("null argument");
  *out = static_cast<uint32_t>(f->v.factors.size());
  return TNK_OK;
}

tnk_status tnk_factor_get(const tnk_factorization* f, uint32_t index, tnk_tensor** out) {
  if (!f || !out) return invalid("null argument");
  if (index >= f->v.factors.size()) return invalid("factor index out of range");
  *out = new tnk_tensor{f->v.factors[index]};
  return TNK_OK;
}

tnk_status tnk_factor_spectrum(const tnk_factorization* f, double* values,
                               uint64_t capacity, uint64_t* count) {
  if (!f) return invalid("null argument");
  return copy_values(f->v.spectrum, values, capacity, count);
}

tnk_status tnk_factor_eigenvalues(const tnk_factorization* f, double* values,
                                  uint64_t capacity, uint64_t* count) {
  if (!f) return invalid("null argument");
  if (f->v.kind != tenkit::FactorizationKind::Spectral)
    return fail(TNK_ERROR_VALIDATION, "eigenvalues are only available for spectral factorizations");
  return copy_values(f->v.eigenvalues, values, capacity, count);
}

tnk_status tnk_factor_truncate(const tnk_factorization* f, uint64_t rank,
                               tnk_factorization** out) {
  if (!f || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_factorization{tenkit::truncate(f->v, static_cast<std::size_t>(rank))};
    return TNK_OK;
  });
}

tnk_status tnk_factor_truncate_by_tolerance(const tnk_factorization* f, double eps_max,
                                            tnk_factorization** out) {
  if (!f || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_factorization{tenkit::truncate_by_tolerance(f->v, eps_max)};
    return TNK_OK;
  });
}

tnk_status tnk_factor_truncation_info(const tnk_factorization* f, uint64_t* rank,
                                      double* discarded_weight, double* error,
                                      int* degenerate) {
  if (!f) return invalid("null argument");
  if (rank) *rank = f->v.truncation.rank;
  if (discarded_weight) *discarded_weight = f->v.truncation.discarded_weight;
  if (error) *error = f->v.truncation.error;
  if (degenerate) *degenerate = f->v.truncation.degenerate_boundary ? 1 : 0;
  return TNK_OK;
}

tnk_status tnk_principal_sqrt(const tnk_tensor* rho, double psd_tol,
                              double null_threshold, tnk_tensor** x,
                              tnk_tensor** x_inverse, char** report_json) {
  if (!rho || !x) return invalid("null argument");
  return guarded([&] {
    tenkit::PrincipalSqrtResult r = tenkit::principal_sqrt(
        rho->v, psd_tol > 0 ? psd_tol : 1e-10, null_threshold > 0 ? null_threshold : 1e-12);
    if (report_json) {
      json j{{"original_dim", r.original_dim},
             {"retained_dim", r.retained_dim},
             {"condition_number", r.condition_number},
             {"discarded_weight", r.discarded_weight}};
      *report_json = dup_string(j.dump());
    }
    *x = new tnk_tensor{std::move(r.x)};
    if (x_inverse) *x_inverse = new tnk_tensor{std::move(r.x_inverse)};
    return TNK_OK;
  });
}

/* ---- tree tensor networks ---- */

tnk_status tnk_ttn_build(const tnk_network* n, tnk_ttn** out) {
  if (!n || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_ttn{tenkit::TreeNetwork::build(n->v)};
    return TNK_OK;
  });
}

void tnk_ttn_free(tnk_ttn* t) { delete t; }

tnk_status tnk_ttn_load(const char* manifest_path, tnk_ttn** out) {
  if (!manifest_path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_ttn{tenkit::load_tree(manifest_path)};
    return TNK_OK;
  });
}

tnk_status tnk_ttn_save(const tnk_ttn* t, const char* manifest_path) {
  if (!t || !manifest_path) return invalid("null argument");
  return guarded([&] {
    tenkit::save_tree(t->v, manifest_path);
    return TNK_OK;
  });
}

tnk_status tnk_ttn_center(const tnk_ttn* t, char** center) {
  if (!t || !center) return invalid("null argument");
  *center = t->v.center() ? dup_string(*t->v.center()) : nullptr;
  return TNK_OK;
}

tnk_status tnk_ttn_tensor(const tnk_ttn* t, const char* id, tnk_tensor** out) {
  if (!t || !id || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_tensor{t->v.tensor(id)};
    return TNK_OK;
  });
}

tnk_status tnk_ttn_network(const tnk_ttn* t, tnk_network** out) {
  if (!t || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_network{t->v.network()};
    return TNK_OK;
  });
}

tnk_status tnk_ttn_branches(const tnk_ttn* t, const char* center, char** branches_json) {
  if (!t || !center || !branches_json) return invalid("null argument");
  return guarded([&] {
    json arr = json::array();
    for (const tenkit::BranchInfo& b : t->v.branches(center)) {
      arr.push_back(json{{"root_label", b.root_label},
                         {"leading", b.leading_id},
                         {"members", b.members},
                         {"open_labels", b.open_labels}});
    }
    *branches_json = dup_string(arr.dump());
    return TNK_OK;
  });
}

tnk_status tnk_ttn_gauge(const tnk_ttn* t, int32_t edge_label, const tnk_tensor* x,
                         tnk_ttn** out) {
  if (!t || !x || !out) return invalid("null argument");
  return guarded([&] {
    *out = new tnk_ttn{tenkit::gauge_transform(t->v, edge_label, x->v)};
    return TNK_OK;
  });
}

tnk_status tnk_ttn_orthogonalize(const tnk_ttn* t, const char* center, int direct_method,
                                 tnk_ttn** out, char** report_json) {
  if (!t || !center || !out) return invalid("null argument");
  return guarded([&] {
    tenkit::OrthoResult r = direct_method ? tenkit::orthogonalize_direct(t->v, center)
                                          : tenkit::orthogonalize_pull(t->v, center);
    if (report_json) {
      *report_json = dup_string(
          branch_reports_json(direct_method ? "direct" : "pull", r.branches).dump());
    }
    *out = new tnk_ttn{std::move(r.network)};
    return TNK_OK;
  });
}

tnk_status tnk_ttn_verify_center(const tnk_ttn* t, const char* center, double tol,
                                 int* pass, char** report_json) {
  if (!t || !pass) return invalid("null argument");
  return guarded([&] {
    std::string c;
    if (center) {
      c = center;
    } else if (t->v.center()) {
      c = *t->v.center();
    } else {
      throw tenkit::ValidationError("no centre is set and none was given");
    }
    double eff = tol > 0 ? tol : 1e-8;
    tenkit::CenterCheck check = tenkit::verify_center(t->v, c, eff);
    *pass = check.pass ? 1 : 0;
    if (report_json) {
      json arr = json::array();
      for (const tenkit::BranchDeviation& b : check.branches) {
        arr.push_back(json{
            {"root_label", b.root_label}, {"dim", b.dim}, {"deviation", b.deviation}});
      }
      json j{{"pass", check.pass},
             {"max_deviation", check.max_deviation},
             {"tol", eff},
             {"center", c},
             {"branches", std::move(arr)}};
      *report_json = dup_string(j.dump());
    }
    return TNK_OK;
  });
}

tnk_status tnk_ttn_center_norm(const tnk_ttn* t, double verify_tol, double* out) {
  if (!t || !out) return invalid("null argument");
  return guarded([&] {
    *out = tenkit::center_norm(t->v, verify_tol > 0 ? verify_tol : 1e-8);
    return TNK_OK;
  });
}

tnk_status tnk_ttn_truncate_center(const tnk_ttn* t, const uint32_t* row_axes,
                                   uint32_t nrow, const uint32_t* col_axes, uint32_t ncol,
                                   uint64_t rank, double eps_max, int compute_global,
                                   tnk_ttn** out, char** report_json) {
  if (!t || !out || (!row_axes && nrow > 0) || (!col_axes && ncol > 0))
    return invalid("null argument");
  return guarded([&] {
    tenkit::Bipartition p = to_bipartition(row_axes, nrow, col_axes, ncol);
    tenkit::TruncateResult r =
        rank > 0 ? tenkit::truncate_at_center(t->v, p, static_cast<std::size_t>(rank),
                                              compute_global != 0)
                 : tenkit::truncate_at_center_by_tolerance(t->v, p, eps_max,
                                                           compute_global != 0);
    if (report_json) {
      json j{{"left_id", r.report.left_id},
             {"right_id", r.report.right_id},
             {"new_label", r.report.new_label},
             {"rank", r.report.rank},
             {"spectrum", r.report.spectrum},
             {"local_error", r.report.local_error},
             {"degenerate_boundary", r.report.degenerate_boundary}};
      if (r.report.global_error) j["global_error"] = *r.report.global_error;
      *report_json = dup_string(j.dump());
    }
    *out = new tnk_ttn{std::move(r.network)};
    return TNK_OK;
  });
}

tnk_status tnk_ttn_contract(const tnk_ttn* t, tnk_tensor** out) {
  if (!t || !out) return invalid("null argument");
  return guarded([&] {
    tenkit::ContractionResult r = tenkit::contract_network(t->v.network());
    *out = new tnk_tensor{std::move(r.value)};
    return TNK_OK;
  });
}

}  // extern "C"
