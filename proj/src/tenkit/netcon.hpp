#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tenkit/contract.hpp"
#include "tenkit/tensor.hpp"

namespace tenkit {

// One tensor slot of a labelled network. Positive labels name contracted
// index pairs (a label repeated on one tensor is a partial trace); negative
// labels name open result indices.
struct NetworkSlot {
  std::string id;
  std::vector<int> labels;
  DenseTensor tensor;
};

// Binary contraction plan over slot ids. Children are ordered canonically
// (left subtree has the lexicographically smaller sorted id list), which
// keeps plans and evaluation results independent of input order.
struct ContractionTree {
  struct Node {
    int left = -1;
    int right = -1;
    std::string leaf_id;           // leaves only
    std::vector<int> step_labels;  // internal nodes: labels contracted here
    std::uint64_t step_cost = 0;
  };
  std::vector<Node> nodes;
  int root = -1;
  std::uint64_t total_cost = 0;
  bool has_costs = false;

  bool empty() const { return root < 0; }
  std::vector<std::string> leaf_ids() const;  // left-to-right
};

class Network {
public:
  // Enforces hard slot invariants (non-empty unique id, one label per index).
  void add(std::string id, std::vector<int> labels, DenseTensor tensor);

  const std::vector<NetworkSlot>& slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  const NetworkSlot& slot(std::size_t i) const;
  const NetworkSlot* find(const std::string& id) const;
  NetworkSlot* find(const std::string& id);

  // Optional stored plan, used by contract_network when no tree is passed.
  std::optional<ContractionTree> sequence;

private:
  std::vector<NetworkSlot> slots_;
};

// Structural diagnostics; an empty list means the network is a valid spec:
// every positive label appears exactly twice with matching dimensions, the
// negative labels are unique and form -1..-k without gaps, no label is zero.
std::vector<std::string> validate(const Network& net);
void validate_or_throw(const Network& net);

struct ContractionStep {
  std::string kind;   // "trace" or "pair"
  std::string left;   // canonical operand name (sorted leaf ids joined by '*')
  std::string right;  // empty for trace steps
  std::vector<int> labels;
  std::uint64_t cost = 0;  // pair: multiplications; trace: terms summed
};

struct ContractionReport {
  std::vector<ContractionStep> steps;
  ContractionTree tree;
  std::uint64_t total_cost = 0;
};

struct ContractionResult {
  DenseTensor value;
  ContractionReport report;
};

// Evaluates the network to one tensor whose indices are the open labels in
// the order -1, -2, ... An explicit tree wins over the stored sequence; with
// neither, a plan is searched first (exact for small networks, greedy above
// the exact-search size limit). Partial traces are contracted within each
// tensor before any pairwise step.
ContractionResult contract_network(const Network& net,
                                   const ContractionTree* tree = nullptr);

}  // namespace tenkit
