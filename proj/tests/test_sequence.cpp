#include <set>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tenkit/io.hpp"
#include "tenkit/sequence.hpp"

using namespace tenkit;

namespace {

// Matrix-chain-with-a-vector example: contracting the vector end first costs
// 2 chi^2, the matrix-matrix product first chi^3 + chi^2.
Network chain_with_vector(oracles::Rng& rng, std::size_t chi) {
  Network net;
  net.add("A", {-1, 1}, oracles::random_real(rng, {chi, chi}));
  net.add("B", {1, 2}, oracles::random_real(rng, {chi, chi}));
  net.add("C", {2}, oracles::random_real(rng, {chi}));
  return net;
}

// Three-tensor open chain with adjustable outer dimensions.
Network open_chain(oracles::Rng& rng, std::size_t dleft, std::size_t d1, std::size_t d2,
                   std::size_t dright) {
  Network net;
  net.add("A", {-1, 1}, oracles::random_real(rng, {dleft, d1}));
  net.add("B", {1, 2}, oracles::random_real(rng, {d1, d2}));
  net.add("C", {2, -2}, oracles::random_real(rng, {d2, dright}));
  return net;
}

// The id set under each child of the root, as sorted strings, to pin the
// association a plan chose.
std::set<std::string> root_split(const ContractionTree& tree) {
  std::set<std::string> out;
  const auto& root = tree.nodes.at(static_cast<std::size_t>(tree.root));
  for (const int child : {root.left, root.right}) {
    std::string joined;
    std::vector<int> stack{child};
    std::vector<std::string> ids;
    while (!stack.empty()) {
      const auto& n = tree.nodes.at(static_cast<std::size_t>(stack.back()));
      stack.pop_back();
      if (n.left < 0) {
        ids.push_back(n.leaf_id);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) joined += joined.empty() ? id : "*" + id;
    out.insert(joined);
  }
  return out;
}

}  // namespace

TEST_CASE("exact search finds the cheap association on the chain example") {
  oracles::Rng rng(51);
  const Network net = chain_with_vector(rng, 10);

  const ContractionTree dp = search_sequence(net, SearchMethod::Dp);
  CHECK(dp.has_costs);
  CHECK(dp.total_cost == 200);
  CHECK(root_split(dp) == std::set<std::string>{"A", "B*C"});

  const ContractionTree greedy = search_sequence(net, SearchMethod::Greedy);
  CHECK(greedy.total_cost == 200);

  // The expensive association really costs what it should.
  const ContractionTree forced = tree_from_json(R"([["A","B"],"C"])");
  const ContractionResult res = contract_network(net, &forced);
  CHECK(res.report.total_cost == 1100);
}

TEST_CASE("two tensors admit exactly one plan") {
  oracles::Rng rng(52);
  Network net;
  net.add("A", {1, -1}, oracles::random_real(rng, {3, 2}));
  net.add("B", {1, -2}, oracles::random_real(rng, {3, 4}));
  const ContractionTree tree = search_sequence(net, SearchMethod::Dp);
  CHECK(tree.total_cost == pair_cost({3, 2}, {3, 4}, {0}, {0}));
  CHECK(root_split(tree) == std::set<std::string>{"A", "B"});
}

TEST_CASE("exact search caps the tensor count and points at greedy") {
  oracles::Rng rng(53);
  Network net;
  const std::size_t n = kDpMaxTensors + 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> labels;
    Shape shape;
    if (i > 0) {
      labels.push_back(static_cast<int>(i));
      shape.push_back(2);
    }
    if (i + 1 < n) {
      labels.push_back(static_cast<int>(i + 1));
      shape.push_back(2);
    }
    if (i == 0) {
      labels.push_back(-1);
      shape.push_back(2);
    }
    net.add("T" + std::to_string(i), labels, oracles::random_real(rng, shape));
  }

  try {
    search_sequence(net, SearchMethod::Dp);
    FAIL("expected a size-limit error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("greedy") != std::string::npos);
  }
  const ContractionTree tree = search_sequence(net, SearchMethod::Greedy);
  CHECK(tree.leaf_ids().size() == n);
}

TEST_CASE("exact search is optimal over the label-sharing tree family") {
  oracles::Rng rng(54);
  oracles::RandomNetworkOptions opt;
  opt.min_tensors = 3;
  opt.max_tensors = 6;
  opt.min_dim = 2;
  opt.max_dim = 4;
  for (int it = 0; it < 50; ++it) {
    const Network net = oracles::random_network(rng, opt);
    const ContractionTree dp = search_sequence(net, SearchMethod::Dp);
    const auto best = oracles::min_cost_over_trees(net);
    REQUIRE(best.has_value());
    CHECK(dp.total_cost == *best);
    const ContractionTree greedy = search_sequence(net, SearchMethod::Greedy);
    CHECK(greedy.total_cost >= dp.total_cost);
  }
}

TEST_CASE("searched plans evaluate to the searched cost") {
  oracles::Rng rng(55);
  oracles::RandomNetworkOptions opt;
  opt.min_tensors = 3;
  opt.max_tensors = 6;
  for (int it = 0; it < 10; ++it) {
    const Network net = oracles::random_network(rng, opt);
    for (const SearchMethod m : {SearchMethod::Dp, SearchMethod::Greedy}) {
      const ContractionTree tree = search_sequence(net, m);
      const ContractionResult res = contract_network(net, &tree);
      CHECK(res.report.total_cost == tree.total_cost);
    }
  }
}

TEST_CASE("disconnected components are joined smallest result first") {
  oracles::Rng rng(56);
  Network net;
  // Three pair components whose results have total dimensions 2, 3, and 4.
  net.add("A1", {1, -1}, oracles::random_real(rng, {5, 2}));
  net.add("A2", {1}, oracles::random_real(rng, {5}));
  net.add("B1", {2, -2}, oracles::random_real(rng, {5, 3}));
  net.add("B2", {2}, oracles::random_real(rng, {5}));
  net.add("C1", {3, -3}, oracles::random_real(rng, {5, 4}));
  net.add("C2", {3}, oracles::random_real(rng, {5}));

  const ContractionTree tree = search_sequence(net, SearchMethod::Dp);
  // Component costs: 10 + 15 + 20. Ascending outer joins: 2*3 + 6*4 = 30.
  CHECK(tree.total_cost == 10 + 15 + 20 + 30);
  CHECK(root_split(tree).count("C1*C2") == 1);

  const ContractionResult res = contract_network(net, &tree);
  CHECK(res.report.total_cost == tree.total_cost);
  CHECK(res.value.shape() == Shape{2, 3, 4});

  const ContractionTree greedy = search_sequence(net, SearchMethod::Greedy);
  CHECK(greedy.total_cost == tree.total_cost);
}

TEST_CASE("plan structure ignores tensor insertion order") {
  oracles::Rng rng(57);
  oracles::RandomNetworkOptions opt;
  opt.min_tensors = 4;
  opt.max_tensors = 6;
  for (int it = 0; it < 10; ++it) {
    const Network net = oracles::random_network(rng, opt);
    Network shuffled;
    std::vector<std::size_t> order(net.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (const std::size_t i : order) {
      const NetworkSlot& s = net.slot(i);
      shuffled.add(s.id, s.labels, s.tensor);
    }
    const ContractionTree a = search_sequence(net, SearchMethod::Dp);
    const ContractionTree b = search_sequence(shuffled, SearchMethod::Dp);
    CHECK(tree_to_json(a) == tree_to_json(b));
  }
}

TEST_CASE("cache replays a plan for the same structure") {
  oracles::Rng rng(58);
  const Network net = chain_with_vector(rng, 10);
  SequenceCache cache;
  const ContractionTree first = cache.get_or_search(net);
  const ContractionTree second = cache.get_or_search(net);
  CHECK(cache.searches() == 1);
  CHECK(cache.hits() == 1);
  CHECK(cache.entries() == 1);
  CHECK(tree_to_json(first) == tree_to_json(second));
}

TEST_CASE("cache tolerates bounded dimension drift, inclusively") {
  oracles::Rng rng(59);
  SequenceCache cache;

  // Baseline: the fat middle bond makes the left association optimal.
  const ContractionTree base = cache.get_or_search(open_chain(rng, 2, 16, 4, 2));
  CHECK(base.total_cost == 144);
  CHECK(root_split(base) == std::set<std::string>{"A*B", "C"});

  // Doubling one outer dimension sits exactly on the drift bound: still a
  // hit, and the stale plan comes back even though it is now suboptimal
  // (reused 288 versus optimal 256).
  const ContractionTree reused = cache.get_or_search(open_chain(rng, 4, 16, 4, 2));
  CHECK(cache.hits() == 1);
  CHECK(cache.searches() == 1);
  CHECK(root_split(reused) == std::set<std::string>{"A*B", "C"});
  {
    const Network drifted = open_chain(rng, 4, 16, 4, 2);
    const ContractionResult stale = contract_network(drifted, &reused);
    CHECK(stale.report.total_cost == 288);
    const ContractionTree fresh = search_sequence(drifted, SearchMethod::Dp);
    CHECK(fresh.total_cost == 256);
  }

  // A 20x change busts the bound: the search reruns and the plan flips to
  // the right association (1408 beats 2880 once the left leg is fat).
  const ContractionTree flipped = cache.get_or_search(open_chain(rng, 40, 16, 4, 2));
  CHECK(cache.searches() == 2);
  CHECK(cache.hits() == 1);
  CHECK(cache.entries() == 1);
  CHECK(flipped.total_cost == 1408);
  CHECK(root_split(flipped) == std::set<std::string>{"A", "B*C"});

  // The replacement entry's dimensions are the new baseline.
  cache.get_or_search(open_chain(rng, 40, 16, 4, 2));
  CHECK(cache.hits() == 2);
}

TEST_CASE("cache keys on structure, so a relabeled network searches afresh") {
  oracles::Rng rng(60);
  SequenceCache cache;
  cache.get_or_search(open_chain(rng, 2, 3, 3, 2));
  Network renamed;
  renamed.add("A", {-1, 2}, oracles::random_real(rng, {2, 3}));
  renamed.add("B", {2, 1}, oracles::random_real(rng, {3, 3}));
  renamed.add("C", {1, -2}, oracles::random_real(rng, {3, 2}));
  cache.get_or_search(renamed);
  CHECK(cache.searches() == 2);
  CHECK(cache.entries() == 2);
}

TEST_CASE("cache rejects drift factors below one") {
  CHECK_THROWS_AS(SequenceCache(0.5), ValidationError);
  CHECK_NOTHROW(SequenceCache(1.0));
}

TEST_CASE("concurrent lookups settle into one entry") {
  oracles::Rng rng(61);
  const Network net = chain_with_vector(rng, 6);
  SequenceCache cache;
  constexpr int kThreads = 8, kPerThread = 25;
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&] {
      for (int i = 0; i < kPerThread; ++i) cache.get_or_search(net);
    });
  }
  for (auto& th : pool) th.join();
  CHECK(cache.entries() == 1);
  CHECK(cache.searches() >= 1);
  CHECK(cache.searches() + cache.hits() == kThreads * kPerThread);
}
