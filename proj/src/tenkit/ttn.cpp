#include "tenkit/ttn.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "tenkit/sequence.hpp"

namespace tenkit {

// Internal mutation gateway for the gauge operations below.
struct OrthoAccess {
  static void set_tensor(TreeNetwork& tn, const std::string& id, DenseTensor t) {
    tn.set_slot_tensor(id, std::move(t));
  }
  static void rebuild(TreeNetwork& tn) { tn.rebuild_edges(); }
  static void set_center(TreeNetwork& tn, std::optional<std::string> c) {
    tn.center_ = std::move(c);
  }
  static void record(TreeNetwork& tn, int label, GaugeEvent ev) {
    tn.history_[label].push_back(std::move(ev));
  }
};

namespace {

std::map<std::string, std::vector<std::pair<int, std::string>>> adjacency(
    const std::map<int, TreeEdge>& edges) {
  std::map<std::string, std::vector<std::pair<int, std::string>>> adj;
  for (const auto& [label, e] : edges) {
    adj[e.a].push_back({label, e.b});
    adj[e.b].push_back({label, e.a});
  }
  return adj;
}

}  // namespace

TreeNetwork TreeNetwork::build(const Network& net) {
  validate_or_throw(net);

  TreeNetwork tn;
  tn.net_ = net;
  tn.rebuild_edges();

  // Reject parallel edges: two tensors joined by more than one label close a
  // loop just like a longer cycle does.
  std::map<std::pair<std::string, std::string>, std::vector<int>> between;
  for (const auto& [label, e] : tn.edges_) {
    between[{e.a, e.b}].push_back(label);
  }
  for (const auto& [pair, labels] : between) {
    if (labels.size() > 1) {
      std::ostringstream os;
      os << "tensors '" << pair.first << "' and '" << pair.second
         << "' are joined by labels";
      for (int l : labels) os << ' ' << l;
      os << ", which closes a cycle";
      throw ValidationError(os.str());
    }
  }

  // Connectivity and cycle detection over the simple graph.
  const auto adj = adjacency(tn.edges_);
  std::map<std::string, std::pair<std::string, int>> parent;  // id -> (parent, label)
  std::set<std::string> seen;
  const std::string& start = net.slot(0).id;
  std::deque<std::string> queue{start};
  seen.insert(start);
  while (!queue.empty()) {
    const std::string u = queue.front();
    queue.pop_front();
    const auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (const auto& [label, v] : it->second) {
      if (!seen.count(v)) {
        seen.insert(v);
        parent[v] = {u, label};
        queue.push_back(v);
        continue;
      }
      if (parent.count(u) && parent.at(u) == std::make_pair(v, label)) continue;
      // Back edge: walk both endpoints to their common ancestor and report
      // every label on the loop.
      std::vector<std::string> pu, pv;
      for (std::string w = u; !w.empty();) {
        pu.push_back(w);
        w = parent.count(w) ? parent.at(w).first : "";
      }
      for (std::string w = v; !w.empty();) {
        pv.push_back(w);
        w = parent.count(w) ? parent.at(w).first : "";
      }
      std::set<int> cycle{label};
      const std::set<std::string> on_pu(pu.begin(), pu.end());
      std::string meet;
      for (const auto& w : pv) {
        if (on_pu.count(w)) {
          meet = w;
          break;
        }
      }
      for (std::string w = u; w != meet; w = parent.at(w).first) {
        cycle.insert(parent.at(w).second);
      }
      for (std::string w = v; w != meet; w = parent.at(w).first) {
        cycle.insert(parent.at(w).second);
      }
      std::ostringstream os;
      os << "network is not a tree: labels";
      for (int l : cycle) os << ' ' << l;
      os << " form a cycle";
      throw ValidationError(os.str());
    }
  }
  if (seen.size() != net.size()) {
    std::ostringstream os;
    os << "tree network must be connected; unreachable from '" << start << "':";
    for (const auto& s : net.slots()) {
      if (!seen.count(s.id)) os << " '" << s.id << "'";
    }
    throw ValidationError(os.str());
  }
  return tn;
}

void TreeNetwork::rebuild_edges() {
  std::map<int, std::vector<std::pair<std::string, std::size_t>>> at;
  for (const auto& s : net_.slots()) {
    for (std::size_t ax = 0; ax < s.labels.size(); ++ax) {
      if (s.labels[ax] > 0) at[s.labels[ax]].push_back({s.id, s.tensor.dim(ax)});
    }
  }
  edges_.clear();
  for (const auto& [label, ends] : at) {
    if (ends[0].first == ends[1].first) {
      std::ostringstream os;
      os << "label " << label << " is a self-loop on tensor '" << ends[0].first
         << "'; a tree has no cycles";
      throw ValidationError(os.str());
    }
    TreeEdge e;
    e.label = label;
    e.a = std::min(ends[0].first, ends[1].first);
    e.b = std::max(ends[0].first, ends[1].first);
    e.dim = ends[0].second;
    edges_[label] = e;
  }
}

TreeNetwork TreeNetwork::with_center(std::optional<std::string> center) const {
  if (center && !net_.find(*center)) {
    throw ValidationError("unknown tensor id '" + *center + "'");
  }
  TreeNetwork tn = *this;
  tn.center_ = std::move(center);
  return tn;
}

std::vector<TreeEdge> TreeNetwork::edges() const {
  std::vector<TreeEdge> out;
  out.reserve(edges_.size());
  for (const auto& [label, e] : edges_) out.push_back(e);
  return out;
}

const TreeEdge& TreeNetwork::edge(int label) const {
  const auto it = edges_.find(label);
  if (it == edges_.end()) {
    std::ostringstream os;
    os << "no edge with label " << label;
    throw ValidationError(os.str());
  }
  return it->second;
}

const NetworkSlot& TreeNetwork::slot_of(const std::string& id) const {
  const NetworkSlot* s = net_.find(id);
  if (!s) throw ValidationError("unknown tensor id '" + id + "'");
  return *s;
}

const DenseTensor& TreeNetwork::tensor(const std::string& id) const {
  return slot_of(id).tensor;
}

const std::vector<int>& TreeNetwork::labels(const std::string& id) const {
  return slot_of(id).labels;
}

const std::vector<GaugeEvent>& TreeNetwork::gauge_history(int label) const {
  edge(label);  // existence check
  static const std::vector<GaugeEvent> kEmpty;
  const auto it = history_.find(label);
  return it == history_.end() ? kEmpty : it->second;
}

void TreeNetwork::set_slot_tensor(const std::string& id, DenseTensor t) {
  NetworkSlot* s = net_.find(id);
  if (!s) throw ValidationError("unknown tensor id '" + id + "'");
  if (t.order() != s->tensor.order()) {
    throw ValidationError("replacement tensor must keep the index count");
  }
  s->tensor = std::move(t);
}

std::vector<BranchInfo> TreeNetwork::branches(const std::string& center) const {
  slot_of(center);
  const auto adj = adjacency(edges_);
  std::vector<BranchInfo> out;
  const auto it = adj.find(center);
  if (it == adj.end()) return out;

  auto incident = it->second;
  std::sort(incident.begin(), incident.end());
  for (const auto& [label, leading] : incident) {
    BranchInfo br;
    br.root_label = label;
    br.leading_id = leading;
    std::set<std::string> seen{center, leading};
    std::deque<std::string> queue{leading};
    while (!queue.empty()) {
      const std::string u = queue.front();
      queue.pop_front();
      br.members.push_back(u);
      const auto uit = adj.find(u);
      if (uit == adj.end()) continue;
      for (const auto& [l2, v] : uit->second) {
        if (!seen.count(v)) {
          seen.insert(v);
          queue.push_back(v);
        }
      }
    }
    std::sort(br.members.begin(), br.members.end());
    for (const auto& id : br.members) {
      for (int l : slot_of(id).labels) {
        if (l < 0) br.open_labels.push_back(l);
      }
    }
    std::sort(br.open_labels.begin(), br.open_labels.end(), std::greater<>());
    out.push_back(std::move(br));
  }
  return out;
}

const std::string& TreeNetwork::centerward(int label, const std::string& center) const {
  const TreeEdge& e = edge(label);
  slot_of(center);
  // Walk from e.a toward the centre; if the path uses this edge, the far
  // endpoint is centre-ward of e.a.
  const auto adj = adjacency(edges_);
  std::map<std::string, std::string> parent;
  std::set<std::string> seen{center};
  std::deque<std::string> queue{center};
  while (!queue.empty()) {
    const std::string u = queue.front();
    queue.pop_front();
    const auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (const auto& [l2, v] : it->second) {
      if (!seen.count(v)) {
        seen.insert(v);
        parent[v] = u;
        queue.push_back(v);
      }
    }
  }
  // The centre-ward endpoint is the one whose path to the centre avoids the
  // other: in a tree, that is simply the endpoint closer to the centre, and
  // the BFS parent of the farther endpoint is the nearer one.
  if (parent.count(e.b) && parent.at(e.b) == e.a) return e.a;
  if (parent.count(e.a) && parent.at(e.a) == e.b) return e.b;
  // One endpoint is the centre itself.
  if (e.a == center) return e.a;
  if (e.b == center) return e.b;
  // Unreachable for a connected tree.
  throw NumericalError("edge orientation could not be derived");
}

namespace {

// out[.., j@axis, ..] = sum_i m[j, i] t[.., i@axis, ..]   (m_second_index)
// out[.., j@axis, ..] = sum_i t[.., i@axis, ..] m[i, j]   (otherwise)
DenseTensor apply_matrix(const DenseTensor& t, std::size_t axis, const DenseTensor& m,
                         bool m_second_index) {
  const std::size_t bound_m = m_second_index ? 1 : 0;
  DenseTensor c = contract_pair(t, m, std::vector<std::size_t>{axis},
                                std::vector<std::size_t>{bound_m});
  std::vector<std::size_t> perm(t.order());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (i < axis) {
      perm[i] = i;
    } else if (i == axis) {
      perm[i] = perm.size() - 1;
    } else {
      perm[i] = i - 1;
    }
  }
  return permute(c, perm);
}

std::size_t axis_of_label(const std::vector<int>& labels, int label) {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) {
    std::ostringstream os;
    os << "label " << label << " not present on the tensor";
    throw ValidationError(os.str());
  }
  return static_cast<std::size_t>(it - labels.begin());
}

// Splits T across (all other axes | axis) into an isometry Q (axis dimension
// possibly reduced to k) and the residual R (k x old dim) with T = Q R over
// that axis. QR when the free side is at least as large; otherwise the thin
// factorization that absorbs the spectrum into R.
void isometric_split(const DenseTensor& t, std::size_t axis, DenseTensor& q_out,
                     DenseTensor& r_out) {
  std::vector<std::size_t> rows;
  Shape row_dims;
  std::size_t d1 = 1;
  for (std::size_t i = 0; i < t.order(); ++i) {
    if (i == axis) continue;
    rows.push_back(i);
    row_dims.push_back(t.dim(i));
    d1 *= t.dim(i);
  }
  const std::size_t d2 = t.dim(axis);

  std::vector<std::size_t> perm(rows);
  perm.push_back(axis);
  const DenseTensor m = permute(t, perm).reshaped({d1, d2});

  DenseTensor qm;
  std::size_t k = 0;
  if (d1 >= d2) {
    DenseTensor rm;
    detail::thin_qr(m, qm, rm);
    r_out = std::move(rm);
    k = d2;
  } else {
    DenseTensor u, vh;
    std::vector<double> s;
    detail::thin_svd(m, u, s, vh);
    k = s.size();  // == d1
    DenseTensor sd = DenseTensor::zeros(ScalarKind::Real, {k, k});
    auto sdata = sd.real_data();
    for (std::size_t i = 0; i < k; ++i) sdata[i * k + i] = s[i];
    r_out = contract_pair(sd, vh, {1}, {0});
    qm = std::move(u);
  }

  Shape q_shape = row_dims;
  q_shape.push_back(k);
  DenseTensor q = qm.reshaped(std::move(q_shape));
  std::vector<std::size_t> back(t.order());
  for (std::size_t i = 0; i < back.size(); ++i) {
    if (i < axis) {
      back[i] = i;
    } else if (i == axis) {
      back[i] = back.size() - 1;
    } else {
      back[i] = i - 1;
    }
  }
  q_out = permute(q, back);
}

// Density matrix of a branch over its root edge: the branch contracted with
// its conjugate over every open and internal index, leaving (root, root').
DenseTensor branch_density(const TreeNetwork& tn, const BranchInfo& br) {
  int next_label = 0;
  for (const auto& id : br.members) {
    for (int l : tn.labels(id)) next_label = std::max(next_label, std::abs(l));
  }
  ++next_label;

  std::map<int, int> open_map;   // negative label -> fresh positive
  std::map<int, int> inner_map;  // internal positive -> fresh positive (conj side)
  for (const auto& id : br.members) {
    for (int l : tn.labels(id)) {
      if (l < 0 && !open_map.count(l)) open_map[l] = next_label++;
    }
  }
  for (const auto& id : br.members) {
    for (int l : tn.labels(id)) {
      if (l > 0 && l != br.root_label && !inner_map.count(l)) {
        inner_map[l] = next_label++;
      }
    }
  }

  Network bn;
  for (const auto& id : br.members) {
    std::vector<int> labels;
    for (int l : tn.labels(id)) {
      if (l == br.root_label) {
        labels.push_back(-1);
      } else if (l < 0) {
        labels.push_back(open_map.at(l));
      } else {
        labels.push_back(l);
      }
    }
    bn.add(id, std::move(labels), tn.tensor(id));
  }
  for (const auto& id : br.members) {
    std::vector<int> labels;
    for (int l : tn.labels(id)) {
      if (l == br.root_label) {
        labels.push_back(-2);
      } else if (l < 0) {
        labels.push_back(open_map.at(l));
      } else {
        labels.push_back(inner_map.at(l));
      }
    }
    std::string cid = id + "~";
    while (bn.find(cid)) cid += "~";
    bn.add(std::move(cid), std::move(labels), conjugate(tn.tensor(id)));
  }

  const SearchMethod method =
      bn.size() <= kDpMaxTensors ? SearchMethod::Dp : SearchMethod::Greedy;
  const ContractionTree tree = search_sequence(bn, method);
  return contract_network(bn, &tree).value;
}

double deviation_from_identity(const DenseTensor& rho) {
  const std::size_t d = rho.dim(0);
  double dev = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const Complex v = rho.at_flat(i * d + j);
      const Complex want = (i == j) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
      dev = std::max(dev, std::abs(v - want));
    }
  }
  return dev;
}

}  // namespace

TreeNetwork gauge_transform(const TreeNetwork& tn, int edge_label, const DenseTensor& x,
                            double cond_limit) {
  const TreeEdge& e = tn.edge(edge_label);
  if (x.order() != 2 || x.dim(0) != x.dim(1)) {
    throw ValidationError("gauge matrix must be square and order 2");
  }
  if (x.dim(0) != e.dim) {
    std::ostringstream os;
    os << "gauge matrix dimension " << x.dim(0) << " does not match edge " << edge_label
       << " dimension " << e.dim;
    throw ValidationError(os.str());
  }
  double cond = 0.0;
  const DenseTensor xinv = detail::invert_square(x, cond, cond_limit);

  const std::string& toward =
      tn.center() ? tn.centerward(edge_label, *tn.center()) : std::min(e.a, e.b);
  const std::string& away = (toward == e.a) ? e.b : e.a;

  TreeNetwork out = tn;
  const DenseTensor& c = out.tensor(toward);
  const DenseTensor& b = out.tensor(away);
  const std::size_t c_axis = axis_of_label(out.labels(toward), edge_label);
  const std::size_t b_axis = axis_of_label(out.labels(away), edge_label);
  OrthoAccess::set_tensor(out, toward, apply_matrix(c, c_axis, x, false));
  OrthoAccess::set_tensor(out, away, apply_matrix(b, b_axis, xinv, true));
  OrthoAccess::rebuild(out);
  OrthoAccess::record(out, edge_label, {"gauge", x});
  return out;
}

OrthoResult orthogonalize_pull(const TreeNetwork& tn, const std::string& center) {
  tn.tensor(center);  // existence check
  const auto before = tn.branches(center);

  TreeNetwork work = tn;
  // BFS layering from the centre.
  std::map<std::string, std::pair<std::string, int>> parent;
  std::map<std::string, std::size_t> depth;
  {
    std::map<int, TreeEdge> em;
    for (const auto& e : tn.edges()) em[e.label] = e;
    const auto adj = adjacency(em);
    std::deque<std::string> queue{center};
    depth[center] = 0;
    while (!queue.empty()) {
      const std::string u = queue.front();
      queue.pop_front();
      const auto it = adj.find(u);
      if (it == adj.end()) continue;
      for (const auto& [label, v] : it->second) {
        if (!depth.count(v)) {
          depth[v] = depth[u] + 1;
          parent[v] = {u, label};
          queue.push_back(v);
        }
      }
    }
  }

  std::vector<std::string> order;
  for (const auto& [id, d] : depth) {
    if (id != center) order.push_back(id);
  }
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    if (depth.at(a) != depth.at(b)) return depth.at(a) > depth.at(b);
    return a < b;
  });

  for (const auto& id : order) {
    const auto& [pid, plabel] = parent.at(id);
    const std::size_t axis = axis_of_label(work.labels(id), plabel);
    DenseTensor q, r;
    isometric_split(work.tensor(id), axis, q, r);
    OrthoAccess::set_tensor(work, id, std::move(q));
    const std::size_t paxis = axis_of_label(work.labels(pid), plabel);
    OrthoAccess::set_tensor(work, pid,
                            apply_matrix(work.tensor(pid), paxis, r, true));
    OrthoAccess::rebuild(work);
    OrthoAccess::record(work, plabel, {"pull", std::move(r)});
  }
  OrthoAccess::set_center(work, center);

  OrthoResult res;
  res.network = std::move(work);
  for (const auto& br : before) {
    BranchReport rep;
    rep.root_label = br.root_label;
    rep.old_dim = tn.edge(br.root_label).dim;
    rep.new_dim = res.network.edge(br.root_label).dim;
    res.branches.push_back(rep);
  }
  return res;
}

OrthoResult orthogonalize_direct(const TreeNetwork& tn, const std::string& center) {
  tn.tensor(center);  // existence check

  TreeNetwork work = tn;
  OrthoResult res;
  for (const BranchInfo& br : tn.branches(center)) {
    const DenseTensor rho = branch_density(work, br);
    PrincipalSqrtResult ps;
    try {
      ps = principal_sqrt(rho);
    } catch (const ValidationError& e) {
      std::ostringstream os;
      os << "branch at edge " << br.root_label << ": " << e.what();
      throw NumericalError(os.str());
    }

    const std::size_t c_axis = axis_of_label(work.labels(center), br.root_label);
    const std::size_t b_axis =
        axis_of_label(work.labels(br.leading_id), br.root_label);
    OrthoAccess::set_tensor(
        work, center, apply_matrix(work.tensor(center), c_axis, ps.x, false));
    OrthoAccess::set_tensor(
        work, br.leading_id,
        apply_matrix(work.tensor(br.leading_id), b_axis, ps.x_inverse, true));
    OrthoAccess::rebuild(work);
    OrthoAccess::record(work, br.root_label, {"direct", ps.x});

    BranchReport rep;
    rep.root_label = br.root_label;
    rep.old_dim = ps.original_dim;
    rep.new_dim = ps.retained_dim;
    rep.condition_number = ps.condition_number;
    rep.discarded_weight = ps.discarded_weight;
    res.branches.push_back(rep);
  }
  OrthoAccess::set_center(work, center);
  res.network = std::move(work);
  return res;
}

CenterCheck verify_center(const TreeNetwork& tn, const std::string& center, double tol) {
  tn.tensor(center);  // existence check
  CenterCheck check;
  check.pass = true;
  for (const BranchInfo& br : tn.branches(center)) {
    const DenseTensor rho = branch_density(tn, br);
    BranchDeviation dev;
    dev.root_label = br.root_label;
    dev.dim = rho.dim(0);
    dev.deviation = deviation_from_identity(rho);
    check.max_deviation = std::max(check.max_deviation, dev.deviation);
    check.branches.push_back(dev);
  }
  check.pass = check.max_deviation <= tol;
  return check;
}

double center_norm(const TreeNetwork& tn, double verify_tol) {
  if (!tn.center()) {
    throw ValidationError("network has no established centre");
  }
  const CenterCheck check = verify_center(tn, *tn.center(), verify_tol);
  if (!check.pass) {
    std::ostringstream os;
    os << "centre '" << *tn.center() << "' is not verified: max branch deviation "
       << check.max_deviation << " exceeds " << verify_tol;
    throw ValidationError(os.str());
  }
  return frobenius_norm(tn.tensor(*tn.center()));
}

namespace {

TruncateResult truncate_at_center_impl(const TreeNetwork& tn, const Bipartition& p,
                                       const Factorization& fr,
                                       bool compute_global_error) {
  const std::string center = *tn.center();
  const std::vector<int>& labels = tn.labels(center);

  const DenseTensor a_left = fr.factors[0];
  const DenseTensor a_right = contract_pair(fr.factors[1], fr.factors[2], {1}, {0});

  int new_label = 0;
  for (const auto& s : tn.network().slots()) {
    for (int l : s.labels) new_label = std::max(new_label, l);
  }
  ++new_label;

  std::string left_id = center + ".L";
  while (tn.network().find(left_id)) left_id += "'";
  std::string right_id = center + ".R";
  while (tn.network().find(right_id)) right_id += "'";

  std::vector<int> left_labels, right_labels;
  for (std::size_t ax : p.row_axes) left_labels.push_back(labels[ax]);
  left_labels.push_back(new_label);
  right_labels.push_back(new_label);
  for (std::size_t ax : p.col_axes) right_labels.push_back(labels[ax]);

  Network out;
  for (const auto& s : tn.network().slots()) {
    if (s.id == center) {
      out.add(left_id, left_labels, a_left);
      out.add(right_id, right_labels, a_right);
    } else {
      out.add(s.id, s.labels, s.tensor);
    }
  }

  TruncateResult res;
  res.network = TreeNetwork::build(out);
  for (const TreeEdge& e : tn.edges()) {  // carry the audit trail over
    for (const GaugeEvent& ev : tn.gauge_history(e.label)) {
      OrthoAccess::record(res.network, e.label, ev);
    }
  }
  OrthoAccess::record(res.network, new_label, {"truncate", fr.factors[1]});
  OrthoAccess::set_center(res.network, right_id);

  res.report.left_id = left_id;
  res.report.right_id = right_id;
  res.report.new_label = new_label;
  res.report.rank = fr.truncation.rank;
  res.report.spectrum = fr.spectrum;
  res.report.local_error = fr.truncation.error;
  res.report.degenerate_boundary = fr.truncation.degenerate_boundary;

  if (compute_global_error) {
    const DenseTensor full = contract_network(tn.network()).value;
    const DenseTensor truncated = contract_network(res.network.network()).value;
    res.report.global_error = difference_norm(full, truncated);
  }
  return res;
}

const TreeNetwork& require_verified_center(const TreeNetwork& tn) {
  if (!tn.center()) {
    throw ValidationError("network has no established centre; orthogonalize first");
  }
  const CenterCheck check = verify_center(tn, *tn.center());
  if (!check.pass) {
    std::ostringstream os;
    os << "centre '" << *tn.center() << "' is not verified: max branch deviation "
       << check.max_deviation << "; orthogonalize first";
    throw ValidationError(os.str());
  }
  return tn;
}

}  // namespace

TruncateResult truncate_at_center(const TreeNetwork& tn, const Bipartition& p,
                                  std::size_t rank, bool compute_global_error) {
  require_verified_center(tn);
  const Factorization f = svd(tn.tensor(*tn.center()), p);
  return truncate_at_center_impl(tn, p, truncate(f, rank), compute_global_error);
}

TruncateResult truncate_at_center_by_tolerance(const TreeNetwork& tn,
                                               const Bipartition& p, double eps_max,
                                               bool compute_global_error) {
  require_verified_center(tn);
  const Factorization f = svd(tn.tensor(*tn.center()), p);
  return truncate_at_center_impl(tn, p, truncate_by_tolerance(f, eps_max),
                                 compute_global_error);
}

}  // namespace tenkit
