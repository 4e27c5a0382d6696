#include "support/oracles.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace oracles {

using tenkit::Complex;
using tenkit::DenseTensor;
using tenkit::Network;
using tenkit::Shape;

namespace {

// Walks a multi-index through `dims` in row-major order.
struct Odometer {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> index;
  bool done = false;

  explicit Odometer(std::vector<std::size_t> d) : dims(std::move(d)), index(dims.size(), 0) {
    for (std::size_t v : dims) {
      if (v == 0) done = true;
    }
  }

  void advance() {
    for (std::size_t i = dims.size(); i-- > 0;) {
      if (++index[i] < dims[i]) return;
      index[i] = 0;
    }
    done = true;
  }
};

}  // namespace

DenseTensor random_real(Rng& rng, const Shape& shape) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> data(tenkit::shape_size(shape));
  for (double& v : data) v = dist(rng);
  return DenseTensor::from_real(shape, std::move(data));
}

DenseTensor random_complex(Rng& rng, const Shape& shape) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Complex> data(tenkit::shape_size(shape));
  for (Complex& v : data) v = Complex(dist(rng), dist(rng));
  return DenseTensor::from_complex(shape, std::move(data));
}

DenseTensor random_tensor(Rng& rng, const Shape& shape, bool complex_kind) {
  return complex_kind ? random_complex(rng, shape) : random_real(rng, shape);
}

Network random_network(Rng& rng, const RandomNetworkOptions& opt) {
  const std::size_t n =
      opt.min_tensors + rng() % (opt.max_tensors - opt.min_tensors + 1);
  auto rand_dim = [&] { return opt.min_dim + rng() % (opt.max_dim - opt.min_dim + 1); };

  // labels[i] accumulates (label, dim) per tensor; ids are "T0".."Tn-1".
  std::vector<std::vector<std::pair<int, std::size_t>>> labels(n);
  int next_label = 1;

  // Spanning tree over a shuffled order keeps the network connected.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t a = order[i], b = order[rng() % i];
    const std::size_t d = rand_dim();
    labels[a].push_back({next_label, d});
    labels[b].push_back({next_label, d});
    ++next_label;
  }
  const std::size_t extra = n >= 2 ? rng() % (opt.extra_edges + 1) : 0;
  for (std::size_t e = 0; e < extra; ++e) {
    const std::size_t a = rng() % n;
    std::size_t b = rng() % n;
    while (b == a) b = rng() % n;
    const std::size_t d = rand_dim();
    labels[a].push_back({next_label, d});
    labels[b].push_back({next_label, d});
    ++next_label;
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < opt.trace_probability) {
    const std::size_t a = rng() % n;
    const std::size_t d = rand_dim();
    labels[a].push_back({next_label, d});
    labels[a].push_back({next_label, d});
    ++next_label;
  }
  const std::size_t opens = rng() % (opt.max_open + 1);
  for (std::size_t k = 0; k < opens; ++k) {
    labels[rng() % n].push_back({-static_cast<int>(k) - 1, rand_dim()});
  }

  Network net;
  for (std::size_t i = 0; i < n; ++i) {
    std::shuffle(labels[i].begin(), labels[i].end(), rng);
    std::vector<int> ls;
    Shape shape;
    for (auto [l, d] : labels[i]) {
      ls.push_back(l);
      shape.push_back(d);
    }
    net.add("T" + std::to_string(i), std::move(ls),
            random_tensor(rng, shape, opt.complex_kind));
  }
  return net;
}

DenseTensor loop_contract_pair(const DenseTensor& a, const DenseTensor& b,
                               const std::vector<std::size_t>& a_axes,
                               const std::vector<std::size_t>& b_axes,
                               std::uint64_t* macs) {
  std::vector<bool> bound_a(a.order(), false), bound_b(b.order(), false);
  for (std::size_t ax : a_axes) bound_a[ax] = true;
  for (std::size_t ax : b_axes) bound_b[ax] = true;

  std::vector<std::size_t> free_a, free_b, shared_dims;
  for (std::size_t i = 0; i < a.order(); ++i) {
    if (!bound_a[i]) free_a.push_back(i);
  }
  for (std::size_t i = 0; i < b.order(); ++i) {
    if (!bound_b[i]) free_b.push_back(i);
  }
  for (std::size_t ax : a_axes) shared_dims.push_back(a.dim(ax));

  Shape out_shape;
  std::vector<std::size_t> out_dims;
  for (std::size_t ax : free_a) out_shape.push_back(a.dim(ax));
  for (std::size_t ax : free_b) out_shape.push_back(b.dim(ax));
  out_dims = out_shape;

  const bool complex_kind = !a.is_real() || !b.is_real();
  std::vector<Complex> out(tenkit::shape_size(out_shape), Complex(0.0));
  std::uint64_t count = 0;

  std::vector<std::size_t> idx_a(a.order(), 0), idx_b(b.order(), 0);
  std::size_t flat = 0;
  for (Odometer outer(out_dims); !outer.done; outer.advance(), ++flat) {
    for (std::size_t i = 0; i < free_a.size(); ++i) idx_a[free_a[i]] = outer.index[i];
    for (std::size_t i = 0; i < free_b.size(); ++i) {
      idx_b[free_b[i]] = outer.index[free_a.size() + i];
    }
    Complex acc(0.0);
    for (Odometer inner(shared_dims); !inner.done; inner.advance()) {
      for (std::size_t k = 0; k < a_axes.size(); ++k) {
        idx_a[a_axes[k]] = inner.index[k];
        idx_b[b_axes[k]] = inner.index[k];
      }
      acc += a.at(idx_a) * b.at(idx_b);
      ++count;
    }
    out[flat] = acc;
  }
  if (macs) *macs = count;

  if (complex_kind) return DenseTensor::from_complex(out_shape, std::move(out));
  std::vector<double> real_out(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) real_out[i] = out[i].real();
  return DenseTensor::from_real(out_shape, std::move(real_out));
}

DenseTensor direct_network_summation(const Network& net) {
  std::map<int, std::size_t> dims;
  bool complex_kind = false;
  for (const tenkit::NetworkSlot& s : net.slots()) {
    complex_kind = complex_kind || !s.tensor.is_real();
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      auto [it, fresh] = dims.emplace(s.labels[i], s.tensor.dim(i));
      if (!fresh && it->second != s.tensor.dim(i)) {
        throw std::runtime_error("oracle: label dimension clash");
      }
    }
  }

  std::vector<int> open, internal;
  for (const auto& [l, d] : dims) (l < 0 ? open : internal).push_back(l);
  std::sort(open.begin(), open.end(), std::greater<int>());  // -1, -2, ...

  Shape out_shape;
  std::vector<std::size_t> open_dims, internal_dims;
  for (int l : open) {
    out_shape.push_back(dims[l]);
    open_dims.push_back(dims[l]);
  }
  for (int l : internal) internal_dims.push_back(dims[l]);

  std::map<int, std::size_t> assignment;
  std::vector<Complex> out(tenkit::shape_size(out_shape), Complex(0.0));
  std::vector<std::size_t> scratch;

  std::size_t flat = 0;
  for (Odometer outer(open_dims); !outer.done; outer.advance(), ++flat) {
    for (std::size_t i = 0; i < open.size(); ++i) assignment[open[i]] = outer.index[i];
    Complex acc(0.0);
    for (Odometer inner(internal_dims); !inner.done; inner.advance()) {
      for (std::size_t i = 0; i < internal.size(); ++i) {
        assignment[internal[i]] = inner.index[i];
      }
      Complex term(1.0);
      for (const tenkit::NetworkSlot& s : net.slots()) {
        scratch.clear();
        for (int l : s.labels) scratch.push_back(assignment[l]);
        term *= s.tensor.at(scratch);
      }
      acc += term;
    }
    out[flat] = acc;
  }

  if (complex_kind) return DenseTensor::from_complex(out_shape, std::move(out));
  std::vector<double> real_out(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) real_out[i] = out[i].real();
  return DenseTensor::from_real(out_shape, std::move(real_out));
}

namespace {

using u128 = unsigned __int128;

struct Operand {
  // Positive labels still open on this operand, with dims; sorted by label.
  std::vector<std::pair<int, std::size_t>> open;
  u128 total_dim = 1;  // product over all remaining axes, negatives included
};

Operand merge_operands(const Operand& x, const Operand& y, u128& step_cost,
                       bool& shares) {
  u128 shared = 1;
  shares = false;
  Operand out;
  out.total_dim = x.total_dim * y.total_dim;
  std::size_t i = 0, j = 0;
  while (i < x.open.size() && j < y.open.size()) {
    if (x.open[i].first == y.open[j].first) {
      shares = true;
      shared *= x.open[i].second;
      ++i;
      ++j;
    } else if (x.open[i].first < y.open[j].first) {
      out.open.push_back(x.open[i++]);
    } else {
      out.open.push_back(y.open[j++]);
    }
  }
  out.open.insert(out.open.end(), x.open.begin() + i, x.open.end());
  out.open.insert(out.open.end(), y.open.begin() + j, y.open.end());
  step_cost = (x.total_dim / shared) * y.total_dim;
  out.total_dim /= shared * shared;
  return out;
}

void enumerate_min(std::vector<Operand>& ops, u128 cost_so_far, u128& best) {
  if (cost_so_far >= best) return;
  if (ops.size() == 1) {
    best = cost_so_far;
    return;
  }
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (std::size_t j = i + 1; j < ops.size(); ++j) {
      u128 step = 0;
      bool shares = false;
      Operand merged = merge_operands(ops[i], ops[j], step, shares);
      if (!shares) continue;
      std::vector<Operand> next;
      next.reserve(ops.size() - 1);
      for (std::size_t k = 0; k < ops.size(); ++k) {
        if (k != i && k != j) next.push_back(ops[k]);
      }
      next.push_back(std::move(merged));
      enumerate_min(next, cost_so_far + step, best);
    }
  }
}

std::vector<Operand> leaf_operands(const Network& net) {
  std::vector<Operand> ops;
  for (const tenkit::NetworkSlot& s : net.slots()) {
    Operand op;
    std::map<int, std::size_t> open;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      op.total_dim *= s.tensor.dim(i);
      if (s.labels[i] > 0) open[s.labels[i]] = s.tensor.dim(i);
    }
    for (auto [l, d] : open) op.open.push_back({l, d});
    ops.push_back(std::move(op));
  }
  return ops;
}

}  // namespace

std::optional<std::uint64_t> min_cost_over_trees(const Network& net) {
  std::vector<Operand> ops = leaf_operands(net);
  if (ops.size() == 1) return 0;
  u128 best = ~u128{0};
  enumerate_min(ops, 0, best);
  if (best == ~u128{0}) return std::nullopt;
  return static_cast<std::uint64_t>(best);
}

tenkit::ContractionTree random_merge_tree(Rng& rng, const Network& net) {
  struct Item {
    Operand op;
    int node = -1;
  };
  tenkit::ContractionTree tree;
  std::vector<Item> items;
  std::vector<Operand> leaves = leaf_operands(net);
  for (std::size_t i = 0; i < net.size(); ++i) {
    tenkit::ContractionTree::Node node;
    node.leaf_id = net.slot(i).id;
    tree.nodes.push_back(node);
    items.push_back({leaves[i], static_cast<int>(i)});
  }
  while (items.size() > 1) {
    std::vector<std::pair<std::size_t, std::size_t>> sharing, all;
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        u128 step = 0;
        bool shares = false;
        merge_operands(items[i].op, items[j].op, step, shares);
        all.push_back({i, j});
        if (shares) sharing.push_back({i, j});
      }
    }
    const auto& pool = sharing.empty() ? all : sharing;
    auto [i, j] = pool[rng() % pool.size()];
    u128 step = 0;
    bool shares = false;
    Operand merged = merge_operands(items[i].op, items[j].op, step, shares);

    tenkit::ContractionTree::Node node;
    node.left = items[i].node;
    node.right = items[j].node;
    tree.nodes.push_back(node);
    Item joined{std::move(merged), static_cast<int>(tree.nodes.size()) - 1};
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(j));
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
    items.push_back(std::move(joined));
  }
  tree.root = items.empty() ? -1 : items[0].node;
  tree.has_costs = false;
  return tree;
}

bool bit_equal(const DenseTensor& a, const DenseTensor& b) {
  if (a.kind() != b.kind() || a.shape() != b.shape()) return false;
  if (a.is_real()) {
    auto x = a.real_data(), y = b.real_data();
    return std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
  }
  auto x = a.complex_data(), y = b.complex_data();
  return std::memcmp(x.data(), y.data(), x.size() * sizeof(Complex)) == 0;
}

double rel_diff(const DenseTensor& a, const DenseTensor& b) {
  const double scale = std::max(tenkit::frobenius_norm(a), 1e-300);
  return tenkit::difference_norm(a, b) / scale;
}

}  // namespace oracles
