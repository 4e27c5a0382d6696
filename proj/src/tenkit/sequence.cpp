#include "tenkit/sequence.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace tenkit {

namespace {

using u128 = unsigned __int128;

// Saturating cost/size arithmetic: anything past representable range becomes
// "unbounded" and loses every comparison, surfacing as OverflowError only if
// it survives into the chosen plan.
struct Big {
  u128 v = 0;
  bool unbounded = false;

  static Big inf() { return {0, true}; }
};

Big mul(Big a, Big b) {
  if (a.unbounded || b.unbounded) return Big::inf();
  u128 out = 0;
  if (__builtin_mul_overflow(a.v, b.v, &out)) return Big::inf();
  return {out, false};
}

Big add(Big a, Big b) {
  if (a.unbounded || b.unbounded) return Big::inf();
  const u128 s = a.v + b.v;
  if (s < a.v) return Big::inf();
  return {s, false};
}

bool less(Big a, Big b) {
  if (a.unbounded) return false;
  if (b.unbounded) return true;
  return a.v < b.v;
}

bool equal(Big a, Big b) {
  if (a.unbounded || b.unbounded) return a.unbounded == b.unbounded;
  return a.v == b.v;
}

std::uint64_t to_cost(Big a, const char* what) {
  if (a.unbounded || a.v > static_cast<u128>(kMaxContractionCost)) {
    throw OverflowError(std::string(what) + " exceeds the signed 64-bit range");
  }
  return static_cast<std::uint64_t>(a.v);
}

// Label occurrence masks per tensor. A label traced within one tensor
// occurs twice there and cancels out of the mask, matching the evaluator
// (traces contract before any pairwise step).
struct LabelIndex {
  std::vector<int> label_of;                // dense index -> original label
  std::vector<std::size_t> dim_of;          // dense index -> dimension
  std::vector<std::vector<std::uint64_t>> tensor_mask;  // per tensor, W words
  std::size_t words = 0;

  static LabelIndex build(const Network& net) {
    LabelIndex ix;
    std::map<int, std::size_t> dense;
    for (const auto& s : net.slots()) {
      for (std::size_t ax = 0; ax < s.labels.size(); ++ax) {
        if (dense.emplace(s.labels[ax], ix.label_of.size()).second) {
          ix.label_of.push_back(s.labels[ax]);
          ix.dim_of.push_back(s.tensor.dim(ax));
        }
      }
    }
    ix.words = (ix.label_of.size() + 63) / 64;
    for (const auto& s : net.slots()) {
      std::vector<std::uint64_t> mask(ix.words, 0);
      for (int lab : s.labels) {
        const std::size_t bit = dense.at(lab);
        mask[bit / 64] ^= (1ull << (bit % 64));
      }
      ix.tensor_mask.push_back(std::move(mask));
    }
    return ix;
  }

  Big dim_product(const std::vector<std::uint64_t>& mask) const {
    Big p{1, false};
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t bits = mask[w];
      while (bits) {
        const std::size_t bit = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        p = mul(p, {static_cast<u128>(dim_of[bit]), false});
      }
    }
    return p;
  }

  std::vector<int> labels_of_mask(const std::vector<std::uint64_t>& a,
                                  const std::vector<std::uint64_t>& b) const {
    std::vector<int> out;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t bits = a[w] & b[w];
      while (bits) {
        const std::size_t bit = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        out.push_back(label_of[bit]);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

std::vector<std::uint64_t> mask_xor(const std::vector<std::uint64_t>& a,
                                    const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

std::vector<std::uint64_t> mask_and(const std::vector<std::uint64_t>& a,
                                    const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] & b[i];
  return out;
}

bool mask_any(const std::vector<std::uint64_t>& a) {
  for (std::uint64_t w : a) {
    if (w) return true;
  }
  return false;
}

// Eq.-style merge cost of two subnetworks from their open-index sizes and the
// size of the shared index set: d1 * d2 / shared.
Big merge_cost(Big d1, Big d2, Big shared) {
  if (d1.unbounded || d2.unbounded || shared.unbounded) return Big::inf();
  return mul({d1.v / shared.v, false}, d2);  // shared divides d1 exactly
}

int add_leaf(ContractionTree& tree, const std::string& id) {
  ContractionTree::Node n;
  n.leaf_id = id;
  tree.nodes.push_back(std::move(n));
  return static_cast<int>(tree.nodes.size() - 1);
}

int add_merge(ContractionTree& tree, int left, int right, std::vector<int> labels,
              std::uint64_t cost) {
  ContractionTree::Node n;
  n.left = left;
  n.right = right;
  n.step_labels = std::move(labels);
  n.step_cost = cost;
  tree.nodes.push_back(std::move(n));
  return static_cast<int>(tree.nodes.size() - 1);
}

ContractionTree dp_search(const Network& net) {
  const std::size_t n = net.size();
  if (n > kDpMaxTensors) {
    std::ostringstream os;
    os << "exact sequence search handles at most " << kDpMaxTensors
       << " tensors (network has " << n << "); use the greedy method";
    throw ValidationError(os.str());
  }

  const LabelIndex ix = LabelIndex::build(net);
  const std::uint32_t full = (n == 32 ? ~0u : ((1u << n) - 1));

  // Tensor adjacency (shared positive label <=> overlapping masks).
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (mask_any(mask_and(ix.tensor_mask[i], ix.tensor_mask[j]))) {
        adj[i] |= (1u << j);
        adj[j] |= (1u << i);
      }
    }
  }

  const std::size_t nsub = std::size_t{1} << n;
  std::vector<std::vector<std::uint64_t>> open(nsub);
  std::vector<Big> dim(nsub), cost(nsub, Big::inf());
  std::vector<std::uint32_t> split(nsub, 0);
  std::vector<bool> connected(nsub, false);
  std::vector<std::string> key(nsub);

  // Sorted id order drives the canonical subset keys and tie-breaks.
  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
    return net.slot(a).id < net.slot(b).id;
  });

  open[0] = std::vector<std::uint64_t>(ix.words, 0);
  for (std::uint32_t s = 1; s <= full; ++s) {
    const std::size_t low = static_cast<std::size_t>(std::countr_zero(s));
    open[s] = mask_xor(open[s & (s - 1)], ix.tensor_mask[low]);
    dim[s] = ix.dim_product(open[s]);
    for (const std::size_t t : by_id) {
      if (s & (1u << t)) {
        if (!key[s].empty()) key[s] += '\x1f';
        key[s] += net.slot(t).id;
      }
    }
    if (std::popcount(s) == 1) {
      connected[s] = true;
      cost[s] = {0, false};
      continue;
    }
    std::uint32_t frontier = 1u << low, reach = 0;
    while (frontier) {
      reach |= frontier;
      std::uint32_t next = 0;
      std::uint32_t bits = frontier;
      while (bits) {
        const std::size_t t = static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        next |= adj[t] & s & ~reach;
      }
      frontier = next;
    }
    connected[s] = (reach == s);
  }

  // Optimal plan within every connected subset, smaller subsets first (any
  // proper submask is numerically smaller, so ascending order suffices).
  for (std::uint32_t s = 1; s <= full; ++s) {
    if (!connected[s] || std::popcount(s) < 2) continue;
    const std::uint32_t low = 1u << std::countr_zero(s);
    Big best = Big::inf();
    std::uint32_t best_sub = 0;
    bool have = false;
    const auto pair_key = [&](std::uint32_t a,
                              std::uint32_t b) -> std::pair<std::string, std::string> {
      return std::minmax(key[a], key[b]);
    };
    for (std::uint32_t sub = (s - 1) & s; sub; sub = (sub - 1) & s) {
      if (!(sub & low)) continue;  // each unordered split visited once
      const std::uint32_t other = s ^ sub;
      if (!connected[sub] || !connected[other]) continue;
      const Big shared = ix.dim_product(mask_and(open[sub], open[other]));
      const Big total =
          add(add(cost[sub], cost[other]), merge_cost(dim[sub], dim[other], shared));
      bool better = !have || less(total, best);
      if (!better && equal(total, best)) {
        better = pair_key(sub, other) < pair_key(best_sub, s ^ best_sub);
      }
      if (better) {
        have = true;
        best = total;
        best_sub = sub;
      }
    }
    cost[s] = best;
    split[s] = best_sub;
  }

  // Connected components of the whole network.
  std::vector<std::uint32_t> comps;
  std::uint32_t remaining = full;
  while (remaining) {
    std::uint32_t frontier = 1u << std::countr_zero(remaining), comp = 0;
    while (frontier) {
      comp |= frontier;
      std::uint32_t next = 0;
      std::uint32_t bits = frontier;
      while (bits) {
        const std::size_t t = static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        next |= adj[t] & remaining & ~comp;
      }
      frontier = next;
    }
    comps.push_back(comp);
    remaining &= ~comp;
  }
  std::sort(comps.begin(), comps.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (!equal(dim[a], dim[b])) return less(dim[a], dim[b]);
    return key[a] < key[b];
  });

  ContractionTree tree;
  Big grand{0, false};

  // Materializes the stored optimal split of a connected subset.
  auto build = [&](auto&& self, std::uint32_t s) -> int {
    if (std::popcount(s) == 1) {
      return add_leaf(tree, net.slot(static_cast<std::size_t>(std::countr_zero(s))).id);
    }
    std::uint32_t a = split[s], b = s ^ split[s];
    if (key[b] < key[a]) std::swap(a, b);
    const int left = self(self, a);
    const int right = self(self, b);
    const Big shared = ix.dim_product(mask_and(open[a], open[b]));
    const Big step = merge_cost(dim[a], dim[b], shared);
    return add_merge(tree, left, right, ix.labels_of_mask(open[a], open[b]),
                     to_cost(step, "contraction step cost"));
  };

  int root = -1;
  std::uint32_t acc_mask = 0;
  for (const std::uint32_t comp : comps) {
    grand = add(grand, cost[comp]);
    const int comp_root = build(build, comp);
    if (root < 0) {
      root = comp_root;
      acc_mask = comp;
      continue;
    }
    // Outer product join between disjoint components.
    const Big step = mul(dim[acc_mask], dim[comp]);
    grand = add(grand, step);
    int left = root, right = comp_root;
    if (key[comp] < key[acc_mask]) std::swap(left, right);
    root = add_merge(tree, left, right, {}, to_cost(step, "contraction step cost"));
    acc_mask |= comp;
  }

  tree.root = root;
  tree.total_cost = to_cost(grand, "total contraction cost");
  tree.has_costs = true;
  return tree;
}

ContractionTree greedy_search(const Network& net) {
  struct Group {
    std::vector<std::string> ids;       // sorted
    std::string key;
    std::map<int, std::size_t> open;    // label -> dim
    Big dim{1, false};
    int node = -1;
  };

  ContractionTree tree;
  std::vector<Group> groups;
  for (const auto& s : net.slots()) {
    Group g;
    g.ids = {s.id};
    g.key = s.id;
    std::map<int, int> count;
    for (int lab : s.labels) ++count[lab];
    for (std::size_t ax = 0; ax < s.labels.size(); ++ax) {
      if (count[s.labels[ax]] % 2 == 1) g.open[s.labels[ax]] = s.tensor.dim(ax);
    }
    for (const auto& [lab, d] : g.open) {
      (void)lab;
      g.dim = mul(g.dim, {static_cast<u128>(d), false});
    }
    g.node = add_leaf(tree, s.id);
    groups.push_back(std::move(g));
  }

  Big grand{0, false};
  while (groups.size() > 1) {
    std::size_t bi = 0, bj = 0;
    Big best = Big::inf();
    std::pair<std::string, std::string> best_key;
    bool found = false;

    auto consider = [&](std::size_t i, std::size_t j, Big c) {
      std::pair<std::string, std::string> k =
          std::minmax(groups[i].key, groups[j].key);
      if (!found || less(c, best) || (equal(c, best) && k < best_key)) {
        found = true;
        best = c;
        best_key = k;
        bi = i;
        bj = j;
      }
    };

    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        Big shared{1, false};
        bool any = false;
        for (const auto& [lab, d] : groups[i].open) {
          if (groups[j].open.count(lab)) {
            any = true;
            shared = mul(shared, {static_cast<u128>(d), false});
          }
        }
        if (!any) continue;
        consider(i, j, merge_cost(groups[i].dim, groups[j].dim, shared));
      }
    }
    if (!found) {
      // Disconnected remainder: cheapest outer product.
      for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
          consider(i, j, mul(groups[i].dim, groups[j].dim));
        }
      }
    }

    Group& a = groups[bi];
    Group& b = groups[bj];
    std::vector<int> shared_labels;
    for (const auto& [lab, d] : a.open) {
      (void)d;
      if (b.open.count(lab)) shared_labels.push_back(lab);
    }

    Group merged;
    merged.ids.resize(a.ids.size() + b.ids.size());
    std::merge(a.ids.begin(), a.ids.end(), b.ids.begin(), b.ids.end(),
               merged.ids.begin());
    for (std::size_t i = 0; i < merged.ids.size(); ++i) {
      if (i) merged.key += '\x1f';
      merged.key += merged.ids[i];
    }
    for (const auto& [lab, d] : a.open) {
      if (!b.open.count(lab)) merged.open[lab] = d;
    }
    for (const auto& [lab, d] : b.open) {
      if (!a.open.count(lab)) merged.open[lab] = d;
    }
    for (const auto& [lab, d] : merged.open) {
      (void)lab;
      merged.dim = mul(merged.dim, {static_cast<u128>(d), false});
    }
    grand = add(grand, best);
    int left = a.node, right = b.node;
    if (b.key < a.key) std::swap(left, right);
    merged.node = add_merge(tree, left, right, shared_labels,
                            to_cost(best, "contraction step cost"));

    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bi));
    groups.push_back(std::move(merged));
  }

  tree.root = groups.front().node;
  tree.total_cost = to_cost(grand, "total contraction cost");
  tree.has_costs = true;
  return tree;
}

}  // namespace

ContractionTree search_sequence(const Network& net, SearchMethod method) {
  validate_or_throw(net);
  return method == SearchMethod::Dp ? dp_search(net) : greedy_search(net);
}

SequenceCache::SequenceCache(double drift_factor) : drift_(drift_factor) {
  if (!(drift_factor >= 1.0)) {
    throw ValidationError("cache drift factor must be >= 1");
  }
}

namespace {

void canonical_spec(const Network& net, std::string& key, std::vector<std::size_t>& dims) {
  std::vector<std::size_t> order(net.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return net.slot(a).id < net.slot(b).id;
  });
  std::ostringstream os;
  for (const std::size_t i : order) {
    const auto& s = net.slot(i);
    os << s.id << '\x1e';
    for (int lab : s.labels) os << lab << ',';
    os << '\x1f';
    for (std::size_t ax = 0; ax < s.tensor.order(); ++ax) {
      dims.push_back(s.tensor.dim(ax));
    }
  }
  key = os.str();
}

}  // namespace

ContractionTree SequenceCache::get_or_search(const Network& net, SearchMethod method) {
  validate_or_throw(net);
  std::string key;
  std::vector<std::size_t> dims;
  canonical_spec(net, key, dims);

  {
    std::shared_lock lock(mu_);
    const auto it = map_.find(key);
    if (it != map_.end() && it->second.dims.size() == dims.size()) {
      bool ok = true;
      for (std::size_t i = 0; i < dims.size() && ok; ++i) {
        const double a = static_cast<double>(dims[i]);
        const double b = static_cast<double>(it->second.dims[i]);
        ok = (a <= drift_ * b) && (b <= drift_ * a);
      }
      if (ok) {
        ++hits_;
        return it->second.tree;
      }
    }
  }

  ContractionTree tree = search_sequence(net, method);
  ++searches_;
  {
    std::unique_lock lock(mu_);
    map_[key] = Entry{std::move(dims), tree};
  }
  return tree;
}

std::size_t SequenceCache::entries() const {
  std::shared_lock lock(mu_);
  return map_.size();
}

}  // namespace tenkit
