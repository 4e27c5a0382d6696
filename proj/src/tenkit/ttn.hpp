#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tenkit/decomp.hpp"
#include "tenkit/netcon.hpp"

namespace tenkit {

struct TreeEdge {
  int label = 0;
  std::string a, b;  // endpoint ids, a < b
  std::size_t dim = 0;
};

struct BranchInfo {
  int root_label = 0;                // centre edge this branch hangs from
  std::string leading_id;            // branch tensor adjacent to the centre
  std::vector<std::string> members;  // sorted
  std::vector<int> open_labels;      // negatives on members, by |label|
};

// Per-edge audit record: the matrix the centre-ward endpoint absorbed.
struct GaugeEvent {
  std::string op;  // "gauge", "pull", "direct" or "truncate"
  DenseTensor matrix;
};

// A tensor network whose positive labels form a tree: connected, acyclic, no
// self-loops, at most one edge between any two tensors. Value semantics; the
// gauge operations below return transformed copies.
class TreeNetwork {
public:
  TreeNetwork() = default;

  // Validates the network (as a contraction spec and as a tree) and derives
  // the edge table. Cycle and connectivity failures name the labels involved.
  static TreeNetwork build(const Network& net);

  const Network& network() const { return net_; }
  const std::optional<std::string>& center() const { return center_; }
  TreeNetwork with_center(std::optional<std::string> center) const;

  std::vector<TreeEdge> edges() const;  // ascending label
  const TreeEdge& edge(int label) const;
  const DenseTensor& tensor(const std::string& id) const;
  const std::vector<int>& labels(const std::string& id) const;
  const std::vector<GaugeEvent>& gauge_history(int label) const;

  // Branches hanging off `center`: one per incident edge, ascending label.
  std::vector<BranchInfo> branches(const std::string& center) const;
  // Endpoint of the edge lying on the centre side.
  const std::string& centerward(int label, const std::string& center) const;

private:
  const NetworkSlot& slot_of(const std::string& id) const;
  void set_slot_tensor(const std::string& id, DenseTensor t);
  void rebuild_edges();

  Network net_;
  std::optional<std::string> center_;
  std::map<int, TreeEdge> edges_;
  std::map<int, std::vector<GaugeEvent>> history_;

  friend TreeNetwork gauge_transform(const TreeNetwork&, int, const DenseTensor&, double);
  friend struct OrthoAccess;
};

// Inserts x x^-1 on an edge: the centre-ward endpoint (toward the established
// centre, else the lexicographically smaller endpoint) absorbs x, the other
// absorbs x^-1. x must be square with the edge dimension and well conditioned.
TreeNetwork gauge_transform(const TreeNetwork& tn, int edge_label, const DenseTensor& x,
                            double cond_limit = 1e14);

struct BranchReport {
  int root_label = 0;
  std::size_t old_dim = 0;
  std::size_t new_dim = 0;
  double condition_number = 0.0;  // direct method: branch matrix conditioning
  double discarded_weight = 0.0;  // direct method: weight of dropped null modes
};

struct OrthoResult {
  TreeNetwork network;  // centre established
  std::vector<BranchReport> branches;
};

// Makes every non-centre tensor isometric toward the centre by factoring
// tensors leaf-to-centre and passing the residual matrices inward. Edge
// dimensions never grow and may shrink.
OrthoResult orthogonalize_pull(const TreeNetwork& tn, const std::string& center);

// Same postcondition via branch density matrices: each branch's matrix is
// formed and its principal root's inverse is pushed into the branch while the
// centre absorbs the root. Branches whose matrix fails to be positive
// semidefinite (or collapses to rank zero) raise NumericalError.
OrthoResult orthogonalize_direct(const TreeNetwork& tn, const std::string& center);

struct BranchDeviation {
  int root_label = 0;
  std::size_t dim = 0;
  double deviation = 0.0;  // max-abs of the branch matrix minus identity
};

struct CenterCheck {
  bool pass = false;
  double max_deviation = 0.0;
  std::vector<BranchDeviation> branches;
};

// Checks every branch matrix around `center` against the identity.
CenterCheck verify_center(const TreeNetwork& tn, const std::string& center,
                          double tol = 1e-8);

// Norm of the full network tensor, read off the centre tensor alone.
// Requires an established, verified centre (tolerance verify_tol).
double center_norm(const TreeNetwork& tn, double verify_tol = 1e-8);

struct CenterTruncation {
  std::string left_id;
  std::string right_id;  // the new centre
  int new_label = 0;
  std::size_t rank = 0;
  std::vector<double> spectrum;  // retained singular values
  double local_error = 0.0;
  bool degenerate_boundary = false;
  std::optional<double> global_error;  // ||full - truncated full||, on request
};

struct TruncateResult {
  TreeNetwork network;
  CenterTruncation report;
};

// Splits the verified centre across p by a rank-limited factorization. The
// isometric half keeps the row axes; the residual half becomes the new
// centre. At a verified centre the local spectrum-tail error equals the
// global error of the whole network tensor.
TruncateResult truncate_at_center(const TreeNetwork& tn, const Bipartition& p,
                                  std::size_t rank, bool compute_global_error = false);
TruncateResult truncate_at_center_by_tolerance(const TreeNetwork& tn,
                                               const Bipartition& p, double eps_max,
                                               bool compute_global_error = false);

}  // namespace tenkit
