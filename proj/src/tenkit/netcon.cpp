#include "tenkit/netcon.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include "tenkit/sequence.hpp"

namespace tenkit {

std::vector<std::string> ContractionTree::leaf_ids() const {
  std::vector<std::string> ids;
  if (empty()) return ids;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const Node& n = nodes.at(static_cast<std::size_t>(i));
    if (n.left < 0) {
      ids.push_back(n.leaf_id);
    } else {
      stack.push_back(n.right);  // right pushed first: left-to-right order
      stack.push_back(n.left);
    }
  }
  return ids;
}

void Network::add(std::string id, std::vector<int> labels, DenseTensor tensor) {
  if (id.empty()) throw ValidationError("tensor id must be non-empty");
  if (find(id)) throw ValidationError("duplicate tensor id '" + id + "'");
  if (labels.size() != tensor.order()) {
    std::ostringstream os;
    os << "tensor '" << id << "' has order " << tensor.order() << " but "
       << labels.size() << " labels; exactly one label per index is required";
    throw ValidationError(os.str());
  }
  slots_.push_back({std::move(id), std::move(labels), std::move(tensor)});
}

const NetworkSlot& Network::slot(std::size_t i) const {
  if (i >= slots_.size()) throw ValidationError("slot index out of range");
  return slots_[i];
}

const NetworkSlot* Network::find(const std::string& id) const {
  for (const auto& s : slots_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

NetworkSlot* Network::find(const std::string& id) {
  for (auto& s : slots_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::vector<std::string> validate(const Network& net) {
  std::vector<std::string> diags;
  if (net.size() == 0) {
    diags.push_back("network has no tensors");
    return diags;
  }

  struct Occurrence {
    std::string id;
    std::size_t axis;
    std::size_t dim;
  };
  std::map<int, std::vector<Occurrence>> occ;
  for (const auto& s : net.slots()) {
    for (std::size_t ax = 0; ax < s.labels.size(); ++ax) {
      const int l = s.labels[ax];
      if (l == 0) {
        diags.push_back("tensor '" + s.id + "': label 0 is not allowed");
        continue;
      }
      occ[l].push_back({s.id, ax, s.tensor.dim(ax)});
    }
  }

  std::set<int> negatives;
  for (const auto& [label, where] : occ) {
    std::ostringstream os;
    if (label > 0) {
      if (where.size() != 2) {
        os << "label " << label << " appears " << where.size()
           << " time(s); a contracted label must appear exactly twice";
        diags.push_back(os.str());
      } else if (where[0].dim != where[1].dim) {
        os << "label " << label << " joins mismatched dimensions: tensor '"
           << where[0].id << "' axis " << where[0].axis << " has dim " << where[0].dim
           << ", tensor '" << where[1].id << "' axis " << where[1].axis << " has dim "
           << where[1].dim;
        diags.push_back(os.str());
      }
    } else {
      if (where.size() != 1) {
        os << "open label " << label << " appears " << where.size()
           << " time(s); open labels must be unique";
        diags.push_back(os.str());
      }
      negatives.insert(label);
    }
  }

  int expected = -1;
  for (auto it = negatives.rbegin(); it != negatives.rend(); ++it, --expected) {
    if (*it != expected) {
      std::ostringstream os;
      os << "open labels must form -1..-k without gaps; missing " << expected;
      diags.push_back(os.str());
      break;
    }
  }
  return diags;
}

void validate_or_throw(const Network& net) {
  const auto diags = validate(net);
  if (diags.empty()) return;
  std::ostringstream os;
  os << "invalid network:";
  for (const auto& d : diags) os << "\n  - " << d;
  throw ValidationError(os.str());
}

namespace {

// Working operand during tree evaluation: current value, its live labels, the
// sorted leaf ids beneath it, and the canonical display name.
struct Operand {
  DenseTensor value;
  std::vector<int> labels;
  std::vector<std::string> leaf_ids;  // sorted
  std::string name;
};

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += '*';
    out += ids[i];
  }
  return out;
}

// Sums the two axes i < j (equal dims) over their diagonal.
DenseTensor trace_axes(const DenseTensor& t, std::size_t i, std::size_t j) {
  const auto& shape = t.shape();
  const std::size_t d = shape[i];
  Shape out_shape;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (a != i && a != j) out_shape.push_back(shape[a]);
  }
  const auto in_strides = row_major_strides(shape);
  const std::size_t diag_stride = in_strides[i] + in_strides[j];
  std::vector<std::size_t> mapped;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (a != i && a != j) mapped.push_back(in_strides[a]);
  }

  return std::visit(
      [&](const auto& src) {
        using Vec = std::decay_t<decltype(src)>;
        Vec out(shape_size(out_shape));
        std::vector<std::size_t> coord(out_shape.size(), 0);
        std::size_t base = 0;
        for (std::size_t k = 0; k < out.size(); ++k) {
          typename Vec::value_type sum{};
          std::size_t off = base;
          for (std::size_t c = 0; c < d; ++c, off += diag_stride) sum += src[off];
          out[k] = sum;
          for (std::size_t a = out_shape.size(); a-- > 0;) {
            ++coord[a];
            base += mapped[a];
            if (coord[a] < out_shape[a]) break;
            base -= mapped[a] * out_shape[a];
            coord[a] = 0;
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

// Contracts every repeated label within the operand, smallest label first.
void trace_repeated(Operand& op, ContractionReport& report) {
  for (;;) {
    int label = 0;
    std::size_t i = 0, j = 0;
    bool found = false;
    for (std::size_t a = 0; a < op.labels.size() && !found; ++a) {
      for (std::size_t b = a + 1; b < op.labels.size(); ++b) {
        if (op.labels[a] == op.labels[b] && (!found || op.labels[a] < label)) {
          label = op.labels[a];
          i = a;
          j = b;
          found = true;
          break;
        }
      }
    }
    if (!found) return;

    const std::size_t d = op.value.dim(i);
    const std::uint64_t terms = op.value.size() / d;
    op.value = trace_axes(op.value, i, j);
    op.labels.erase(op.labels.begin() + static_cast<std::ptrdiff_t>(j));
    op.labels.erase(op.labels.begin() + static_cast<std::ptrdiff_t>(i));
    report.steps.push_back({"trace", op.name, "", {label}, terms});
  }
}

Operand evaluate(const Network& net, ContractionTree& tree, int node_idx,
                 ContractionReport& report) {
  auto& node = tree.nodes.at(static_cast<std::size_t>(node_idx));
  if (node.left < 0) {
    const NetworkSlot* slot = net.find(node.leaf_id);
    Operand op{slot->tensor, slot->labels, {slot->id}, slot->id};
    trace_repeated(op, report);
    return op;
  }

  Operand l = evaluate(net, tree, node.left, report);
  Operand r = evaluate(net, tree, node.right, report);

  std::vector<int> shared;
  for (int lab : l.labels) {
    if (std::find(r.labels.begin(), r.labels.end(), lab) != r.labels.end()) {
      shared.push_back(lab);
    }
  }
  std::sort(shared.begin(), shared.end());

  std::vector<std::size_t> a_axes, b_axes;
  for (int lab : shared) {
    a_axes.push_back(static_cast<std::size_t>(
        std::find(l.labels.begin(), l.labels.end(), lab) - l.labels.begin()));
    b_axes.push_back(static_cast<std::size_t>(
        std::find(r.labels.begin(), r.labels.end(), lab) - r.labels.begin()));
  }

  const std::uint64_t cost =
      pair_cost(l.value.shape(), r.value.shape(), a_axes, b_axes);

  Operand out;
  out.value = contract_pair(l.value, r.value, a_axes, b_axes);
  for (std::size_t a = 0; a < l.labels.size(); ++a) {
    if (std::find(a_axes.begin(), a_axes.end(), a) == a_axes.end()) {
      out.labels.push_back(l.labels[a]);
    }
  }
  for (std::size_t b = 0; b < r.labels.size(); ++b) {
    if (std::find(b_axes.begin(), b_axes.end(), b) == b_axes.end()) {
      out.labels.push_back(r.labels[b]);
    }
  }
  out.leaf_ids.resize(l.leaf_ids.size() + r.leaf_ids.size());
  std::merge(l.leaf_ids.begin(), l.leaf_ids.end(), r.leaf_ids.begin(),
             r.leaf_ids.end(), out.leaf_ids.begin());
  out.name = join_ids(out.leaf_ids);

  report.steps.push_back({"pair", l.name, r.name, shared, cost});
  node.step_labels = shared;
  node.step_cost = cost;
  return out;
}

}  // namespace

ContractionResult contract_network(const Network& net, const ContractionTree* tree) {
  validate_or_throw(net);

  ContractionTree plan;
  if (tree && !tree->empty()) {
    plan = *tree;
  } else if (net.sequence && !net.sequence->empty()) {
    plan = *net.sequence;
  } else {
    plan = search_sequence(
        net, net.size() <= kDpMaxTensors ? SearchMethod::Dp : SearchMethod::Greedy);
  }

  auto plan_ids = plan.leaf_ids();
  std::vector<std::string> net_ids;
  for (const auto& s : net.slots()) net_ids.push_back(s.id);
  std::sort(plan_ids.begin(), plan_ids.end());
  std::sort(net_ids.begin(), net_ids.end());
  if (plan_ids != net_ids) {
    throw ValidationError(
        "contraction tree leaves do not match the network's tensor ids");
  }

  ContractionResult res;
  Operand out = evaluate(net, plan, plan.root, res.report);

  // Open labels come out in tree order; finish with the canonical -1,-2,...
  std::vector<std::size_t> perm(out.labels.size());
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const int want = -static_cast<int>(i) - 1;
    const auto it = std::find(out.labels.begin(), out.labels.end(), want);
    perm[i] = static_cast<std::size_t>(it - out.labels.begin());
  }
  res.value = permute(out.value, perm);

  unsigned __int128 total = 0;
  for (const auto& s : res.report.steps) total += s.cost;
  if (total > static_cast<unsigned __int128>(kMaxContractionCost)) {
    throw OverflowError("total contraction cost exceeds the signed 64-bit range");
  }
  plan.total_cost = static_cast<std::uint64_t>(total);
  plan.has_costs = true;
  res.report.total_cost = plan.total_cost;
  res.report.tree = std::move(plan);
  return res;
}

}  // namespace tenkit
