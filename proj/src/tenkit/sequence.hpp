#pragma once

#include <atomic>
#include <cstdint>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tenkit/netcon.hpp"

namespace tenkit {

enum class SearchMethod { Dp, Greedy };

// Exact search is a bitmask dynamic program over connected subnetworks and is
// limited to this many tensors.
inline constexpr std::size_t kDpMaxTensors = 16;

// Finds a contraction plan for a valid network.
//
// Dp minimizes total cost exactly over every binary tree whose merges each
// share at least one label; disconnected components are solved independently
// and joined by outer products in ascending result-dimension order. Greedy
// repeatedly merges the cheapest label-sharing pair (outer products only once
// no such pair remains). Both tie-break on the sorted leaf ids of the
// candidate operands, so the plan does not depend on input order.
ContractionTree search_sequence(const Network& net, SearchMethod method);

// Caches plans keyed by network structure (ids and labels, not dimensions).
// A hit requires every current dimension to be within drift_factor of the
// cached one (in either direction); otherwise the search reruns and the entry
// is replaced. Searches and hits are observable for cache behaviour tests.
class SequenceCache {
public:
  explicit SequenceCache(double drift_factor = 2.0);

  ContractionTree get_or_search(const Network& net,
                                SearchMethod method = SearchMethod::Dp);

  std::uint64_t searches() const { return searches_.load(); }
  std::uint64_t hits() const { return hits_.load(); }
  std::size_t entries() const;

private:
  struct Entry {
    std::vector<std::size_t> dims;
    ContractionTree tree;
  };

  double drift_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Entry> map_;
  std::atomic<std::uint64_t> searches_{0};
  std::atomic<std::uint64_t> hits_{0};
};

}  // namespace tenkit
