#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tenkit/contract.hpp"
#include "tenkit/decomp.hpp"
#include "tenkit/ttn.hpp"

using namespace tenkit;

namespace {

// Degree-4 hub with two depth-2 arms:
//   A(1,2,3,4), B(1,5,-1), C(2,6,-2), D(3,-3), E(4,-4), F(5,-5), G(6,-6).
Network seven(oracles::Rng& rng, std::size_t chi, bool complex_kind = false) {
  Network net;
  const Shape s2{chi, chi}, s3{chi, chi, chi}, s4{chi, chi, chi, chi};
  net.add("A", {1, 2, 3, 4}, oracles::random_tensor(rng, s4, complex_kind));
  net.add("B", {1, 5, -1}, oracles::random_tensor(rng, s3, complex_kind));
  net.add("C", {2, 6, -2}, oracles::random_tensor(rng, s3, complex_kind));
  net.add("D", {3, -3}, oracles::random_tensor(rng, s2, complex_kind));
  net.add("E", {4, -4}, oracles::random_tensor(rng, s2, complex_kind));
  net.add("F", {5, -5}, oracles::random_tensor(rng, s2, complex_kind));
  net.add("G", {6, -6}, oracles::random_tensor(rng, s2, complex_kind));
  return net;
}

DenseTensor full(const TreeNetwork& tn) { return contract_network(tn.network()).value; }

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.at_flat(i) - b.at_flat(i)));
  }
  return m;
}

// A comfortably conditioned random square gauge: random entries plus a
// multiple of the identity.
DenseTensor easy_gauge(oracles::Rng& rng, std::size_t dim, bool complex_kind) {
  DenseTensor x = oracles::random_tensor(rng, {dim, dim}, complex_kind);
  if (x.is_real()) {
    auto d = x.real_data();
    for (std::size_t i = 0; i < dim; ++i) d[i * dim + i] += 3.0;
  } else {
    auto d = x.complex_data();
    for (std::size_t i = 0; i < dim; ++i) d[i * dim + i] += Complex(3.0);
  }
  return x;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("building a tree derives the edge table and branch layout") {
  oracles::Rng rng(91);
  const TreeNetwork tn = TreeNetwork::build(seven(rng, 3));
  CHECK(!tn.center().has_value());

  const auto edges = tn.edges();
  REQUIRE(edges.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(edges[i].label == static_cast<int>(i) + 1);
  CHECK(tn.edge(1).a == "A");
  CHECK(tn.edge(1).b == "B");
  CHECK(tn.edge(5).a == "B");
  CHECK(tn.edge(5).b == "F");
  CHECK(tn.edge(5).dim == 3);
  CHECK_THROWS_AS(tn.edge(7), ValidationError);

  const auto around_a = tn.branches("A");
  REQUIRE(around_a.size() == 4);
  CHECK(around_a[0].root_label == 1);
  CHECK(around_a[0].leading_id == "B");
  CHECK(around_a[0].members == std::vector<std::string>{"B", "F"});
  CHECK(around_a[0].open_labels == std::vector<int>{-1, -5});
  CHECK(around_a[2].root_label == 3);
  CHECK(around_a[2].members == std::vector<std::string>{"D"});

  const auto around_f = tn.branches("F");
  REQUIRE(around_f.size() == 1);
  CHECK(around_f[0].root_label == 5);
  CHECK(around_f[0].leading_id == "B");
  CHECK(around_f[0].members.size() == 6);

  CHECK_THROWS_AS(tn.branches("Z"), ValidationError);
  CHECK_THROWS_AS(tn.with_center("Z"), ValidationError);
  CHECK(tn.centerward(5, "A") == "B");
  CHECK(tn.centerward(5, "F") == "F");
  CHECK(tn.centerward(1, "A") == "A");
}

TEST_CASE("non-tree topologies are rejected with the labels spelled out") {
  oracles::Rng rng(92);

  SUBCASE("triangle") {
    Network net;
    net.add("A", {1, 2, -1}, oracles::random_real(rng, {2, 2, 2}));
    net.add("B", {1, 3, -2}, oracles::random_real(rng, {2, 2, 2}));
    net.add("C", {2, 3, -3}, oracles::random_real(rng, {2, 2, 2}));
    const std::string msg = message_of([&] { TreeNetwork::build(net); });
    CHECK(msg.find("cycle") != std::string::npos);
    CHECK(msg.find('1') != std::string::npos);
  }
  SUBCASE("two components") {
    Network net;
    net.add("A", {1, -1}, oracles::random_real(rng, {2, 2}));
    net.add("B", {1, -2}, oracles::random_real(rng, {2, 2}));
    net.add("C", {2, -3}, oracles::random_real(rng, {2, 2}));
    net.add("D", {2, -4}, oracles::random_real(rng, {2, 2}));
    const std::string msg = message_of([&] { TreeNetwork::build(net); });
    CHECK(msg.find("connected") != std::string::npos);
  }
  SUBCASE("parallel edges") {
    Network net;
    net.add("A", {1, 2, -1}, oracles::random_real(rng, {2, 2, 2}));
    net.add("B", {1, 2, -2}, oracles::random_real(rng, {2, 2, 2}));
    const std::string msg = message_of([&] { TreeNetwork::build(net); });
    CHECK(msg.find("cycle") != std::string::npos);
  }
  SUBCASE("self-loop") {
    Network net;
    net.add("A", {1, 1, -1}, oracles::random_real(rng, {2, 2, 2}));
    const std::string msg = message_of([&] { TreeNetwork::build(net); });
    CHECK(msg.find("self-loop") != std::string::npos);
  }
}

TEST_CASE("gauge transforms preserve the represented tensor") {
  oracles::Rng rng(93);
  for (const bool complex_kind : {false, true}) {
    const TreeNetwork tn = TreeNetwork::build(seven(rng, 2, complex_kind));
    const DenseTensor before = full(tn);

    const TreeNetwork same = gauge_transform(tn, 3, DenseTensor::identity(2));
    CHECK(max_abs_diff(full(same), before) <= 1e-12);
    CHECK(same.gauge_history(3).size() == 1);
    CHECK(same.gauge_history(3)[0].op == "gauge");
    CHECK(tn.gauge_history(3).empty());

    const DenseTensor x = easy_gauge(rng, 2, complex_kind);
    const TreeNetwork moved = gauge_transform(tn, 5, x);
    CHECK(oracles::rel_diff(full(moved), before) <= 1e-10);

    // Gauging back with the inverse restores every tensor.
    double cond = 0.0;
    const DenseTensor xinv = detail::invert_square(x, cond);
    const TreeNetwork back = gauge_transform(moved, 5, xinv);
    for (const char* id : {"A", "B", "C", "D", "E", "F", "G"}) {
      CHECK(max_abs_diff(back.tensor(id), tn.tensor(id)) <= 1e-10);
    }
  }
}

TEST_CASE("gauge transforms reject unusable matrices") {
  oracles::Rng rng(94);
  const TreeNetwork tn = TreeNetwork::build(seven(rng, 2));
  CHECK_THROWS_AS(gauge_transform(tn, 1, DenseTensor::identity(3)), ValidationError);
  CHECK_THROWS_AS(gauge_transform(tn, 1, oracles::random_real(rng, {2, 2, 2})),
                  ValidationError);
  CHECK_THROWS_AS(gauge_transform(tn, 9, DenseTensor::identity(2)), ValidationError);
  const DenseTensor singular = DenseTensor::from_real({2, 2}, {1, 1, 1, 1});
  CHECK_THROWS_AS(gauge_transform(tn, 1, singular), ValidationError);
}

TEST_CASE("pulling through establishes a verified center") {
  oracles::Rng rng(95);
  for (const bool complex_kind : {false, true}) {
    const TreeNetwork tn = TreeNetwork::build(seven(rng, 3, complex_kind));
    const DenseTensor before = full(tn);

    const OrthoResult res = orthogonalize_pull(tn, "A");
    CHECK(res.network.center() == std::string("A"));
    REQUIRE(res.branches.size() == 4);
    for (const BranchReport& br : res.branches) {
      CHECK(br.old_dim == 3);
      CHECK(br.new_dim <= br.old_dim);
    }

    const CenterCheck check = verify_center(res.network, "A", 1e-10);
    CHECK(check.pass);
    CHECK(check.max_deviation <= 1e-10);
    REQUIRE(check.branches.size() == 4);

    CHECK(oracles::rel_diff(full(res.network), before) <= 1e-10);

    // The audit trail shows one pull per edge.
    for (int label = 1; label <= 6; ++label) {
      REQUIRE(res.network.gauge_history(label).size() == 1);
      CHECK(res.network.gauge_history(label)[0].op == "pull");
    }
  }
}

TEST_CASE("pulling through again leaves the tensors in place") {
  oracles::Rng rng(96);
  const TreeNetwork tn = TreeNetwork::build(seven(rng, 3));
  const TreeNetwork once = orthogonalize_pull(tn, "A").network;
  const TreeNetwork twice = orthogonalize_pull(once, "A").network;
  for (const char* id : {"A", "B", "C", "D", "E", "F", "G"}) {
    CHECK(max_abs_diff(twice.tensor(id), once.tensor(id)) <= 1e-12);
  }
}

TEST_CASE("pulling through a chain is two nested splits, written out") {
  oracles::Rng rng(97);
  const DenseTensor a = oracles::random_real(rng, {3, 2});
  const DenseTensor b = oracles::random_real(rng, {2, 2, 2});
  const DenseTensor c = oracles::random_real(rng, {2, 2});
  Network net;
  net.add("A", {-1, 1}, a);
  net.add("B", {1, 2, -2}, b);
  net.add("C", {2, -3}, c);
  const TreeNetwork pulled = orthogonalize_pull(TreeNetwork::build(net), "C").network;

  DenseTensor qa, ra;
  detail::thin_qr(a, qa, ra);
  const DenseTensor b1 = contract_pair(ra, b, {1}, {0});
  DenseTensor qb, rb;
  detail::thin_qr(permute(b1, {0, 2, 1}).reshaped({4, 2}), qb, rb);
  const DenseTensor b2 = permute(qb.reshaped({2, 2, 2}), {0, 2, 1});
  const DenseTensor c1 = contract_pair(rb, c, {1}, {0});

  CHECK(max_abs_diff(pulled.tensor("A"), qa) <= 1e-13);
  CHECK(max_abs_diff(pulled.tensor("B"), b2) <= 1e-13);
  CHECK(max_abs_diff(pulled.tensor("C"), c1) <= 1e-13);
}

TEST_CASE("direct orthogonalization agrees with the same postcondition") {
  oracles::Rng rng(98);
  for (const bool complex_kind : {false, true}) {
    const TreeNetwork tn = TreeNetwork::build(seven(rng, 3, complex_kind));
    const DenseTensor before = full(tn);

    const OrthoResult res = orthogonalize_direct(tn, "A");
    CHECK(res.network.center() == std::string("A"));
    const CenterCheck check = verify_center(res.network, "A", 1e-8);
    CHECK(check.pass);
    CHECK(oracles::rel_diff(full(res.network), before) <= 1e-8);

    for (const BranchReport& br : res.branches) {
      CHECK(br.condition_number >= 1.0);
      CHECK(res.network.gauge_history(br.root_label).back().op == "direct");
    }
  }
}

TEST_CASE("direct orthogonalization on an orthogonal network is a no-op") {
  oracles::Rng rng(99);
  const TreeNetwork pulled = orthogonalize_pull(TreeNetwork::build(seven(rng, 3)), "A").network;
  const OrthoResult res = orthogonalize_direct(pulled, "A");
  for (const char* id : {"A", "B", "C", "D", "E", "F", "G"}) {
    CHECK(max_abs_diff(res.network.tensor(id), pulled.tensor(id)) <= 1e-10);
  }
  for (const BranchReport& br : res.branches) {
    CHECK(br.condition_number <= 1.0 + 1e-8);
  }
}

TEST_CASE("direct orthogonalization shrinks rank-deficient branches") {
  oracles::Rng rng(100);
  Network net = seven(rng, 3);
  // Make D rank one: its branch density collapses to a single mode.
  const DenseTensor u = oracles::random_real(rng, {3});
  const DenseTensor v = oracles::random_real(rng, {3});
  NetworkSlot* d = net.find("D");
  REQUIRE(d != nullptr);
  d->tensor = contract_pair(u, v, {}, {});
  const DenseTensor before = contract_network(net).value;

  const OrthoResult res = orthogonalize_direct(TreeNetwork::build(net), "A");
  CHECK(res.network.edge(3).dim == 1);
  bool found = false;
  for (const BranchReport& br : res.branches) {
    if (br.root_label == 3) {
      found = true;
      CHECK(br.old_dim == 3);
      CHECK(br.new_dim == 1);
      // The discarded modes are exact zeros of the branch density; all that
      // survives is eigensolver noise, squared.
      CHECK(br.discarded_weight <= 1e-12);
    }
  }
  CHECK(found);
  CHECK(verify_center(res.network, "A").pass);
  CHECK(oracles::rel_diff(full(res.network), before) <= 1e-8);
}

TEST_CASE("direct orthogonalization reports a collapsed branch as numerical") {
  oracles::Rng rng(101);
  Network net = seven(rng, 2);
  NetworkSlot* d = net.find("D");
  REQUIRE(d != nullptr);
  d->tensor = DenseTensor::zeros(ScalarKind::Real, {2, 2});
  try {
    orthogonalize_direct(TreeNetwork::build(net), "A");
    FAIL("expected a numerical failure");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("edge 3") != std::string::npos);
  }
}

TEST_CASE("verification fails loudly away from orthogonality") {
  oracles::Rng rng(102);
  const TreeNetwork tn = TreeNetwork::build(seven(rng, 2));
  const CenterCheck check = verify_center(tn, "A");
  CHECK(!check.pass);
  CHECK(check.max_deviation > 1e-3);
  CHECK_THROWS_AS(verify_center(tn, "Z"), ValidationError);
}

TEST_CASE("a lone tensor is trivially its own center") {
  oracles::Rng rng(103);
  Network net;
  const DenseTensor t = oracles::random_real(rng, {3, 2});
  net.add("A", {-1, -2}, t);
  const TreeNetwork tn = TreeNetwork::build(net).with_center("A");
  CHECK(verify_center(tn, "A").pass);
  CHECK(center_norm(tn) == doctest::Approx(frobenius_norm(t)).epsilon(1e-14));
}

TEST_CASE("the center tensor carries the norm of the whole network") {
  oracles::Rng rng(104);
  const TreeNetwork tn = TreeNetwork::build(seven(rng, 3));
  const double norm_full = frobenius_norm(full(tn));

  const TreeNetwork pulled = orthogonalize_pull(tn, "A").network;
  CHECK(center_norm(pulled) == doctest::Approx(norm_full).epsilon(1e-10));

  // Scaling the center scales the represented state with it.
  Network scaled_net;
  for (const auto& s : pulled.network().slots()) {
    scaled_net.add(s.id, s.labels, s.id == "A" ? scaled(s.tensor, 2.0) : s.tensor);
  }
  const TreeNetwork rescaled = TreeNetwork::build(scaled_net).with_center("A");
  CHECK(center_norm(rescaled) == doctest::Approx(2.0 * norm_full).epsilon(1e-10));

  // Unverified or missing centers are refused.
  CHECK_THROWS_AS(center_norm(TreeNetwork::build(seven(rng, 3))), ValidationError);
  CHECK_THROWS_AS(center_norm(TreeNetwork::build(seven(rng, 3)).with_center("A")),
                  ValidationError);
}

TEST_CASE("overlaps against a centered network collapse onto the centers") {
  oracles::Rng rng(105);
  for (const bool complex_kind : {false, true}) {
    const TreeNetwork pulled =
        orthogonalize_pull(TreeNetwork::build(seven(rng, 2, complex_kind)), "A").network;
    // Same branches, a fresh center tensor.
    Network other;
    DenseTensor a2;
    for (const auto& s : pulled.network().slots()) {
      if (s.id == "A") {
        a2 = oracles::random_tensor(rng, s.tensor.shape(), complex_kind);
        other.add(s.id, s.labels, a2);
      } else {
        other.add(s.id, s.labels, s.tensor);
      }
    }
    const Complex big = ttr(conjugate(full(pulled)),
                            contract_network(other).value);
    const Complex small = ttr(conjugate(pulled.tensor("A")), a2);
    CHECK(std::abs(big - small) <= 1e-8 * std::max(1.0, std::abs(small)));
  }
}

TEST_CASE("truncating at the center splits it into an isometry and a residual") {
  oracles::Rng rng(106);
  const TreeNetwork pulled = orthogonalize_pull(TreeNetwork::build(seven(rng, 3)), "A").network;
  const DenseTensor before = full(pulled);
  const Bipartition p{{0, 1}, {2, 3}};

  const TruncateResult res = truncate_at_center(pulled, p, 2, true);
  CHECK(res.report.left_id == "A.L");
  CHECK(res.report.right_id == "A.R");
  CHECK(res.report.new_label == 7);
  CHECK(res.report.rank == 2);
  REQUIRE(res.report.spectrum.size() == 2);
  REQUIRE(res.report.global_error.has_value());

  // At a verified center the local spectrum tail is the global error.
  CHECK(std::abs(*res.report.global_error - res.report.local_error) <=
        1e-8 * res.report.local_error);
  CHECK(difference_norm(before, full(res.network)) ==
        doctest::Approx(res.report.local_error).epsilon(1e-8));

  // The new center is the residual half; the isometric half verifies.
  CHECK(res.network.center() == std::string("A.R"));
  CHECK(verify_center(res.network, "A.R").pass);
  CHECK(res.network.labels("A.L") == std::vector<int>{1, 2, 7});
  CHECK(res.network.labels("A.R") == std::vector<int>{7, 3, 4});
  CHECK(res.network.edge(7).dim == 2);
  CHECK(is_isometry(res.network.tensor("A.L"), {{0, 1}, {2}}).pass);
  CHECK(res.network.gauge_history(7).size() == 1);
  CHECK(res.network.gauge_history(7)[0].op == "truncate");
}

TEST_CASE("full-rank center truncation is lossless") {
  oracles::Rng rng(107);
  const TreeNetwork pulled = orthogonalize_pull(TreeNetwork::build(seven(rng, 2)), "A").network;
  const DenseTensor before = full(pulled);
  const TruncateResult res = truncate_at_center(pulled, {{0, 1}, {2, 3}}, 4, true);
  CHECK(res.report.local_error <= 1e-12);
  CHECK(*res.report.global_error <= 1e-10 * frobenius_norm(before));
}

TEST_CASE("center truncation by tolerance picks the matching rank") {
  oracles::Rng rng(108);
  const TreeNetwork pulled = orthogonalize_pull(TreeNetwork::build(seven(rng, 3)), "A").network;
  const Bipartition p{{0, 1}, {2, 3}};
  const TruncateResult fixed = truncate_at_center(pulled, p, 2);
  const TruncateResult by_tol =
      truncate_at_center_by_tolerance(pulled, p, fixed.report.local_error * (1 + 1e-12));
  CHECK(by_tol.report.rank == 2);
}

TEST_CASE("center truncation refuses bad ranks and unverified centers") {
  oracles::Rng rng(109);
  const TreeNetwork plain = TreeNetwork::build(seven(rng, 3));
  CHECK_THROWS_AS(truncate_at_center(plain, {{0, 1}, {2, 3}}, 2), ValidationError);
  CHECK_THROWS_AS(truncate_at_center(plain.with_center("A"), {{0, 1}, {2, 3}}, 2),
                  ValidationError);

  const TreeNetwork pulled = orthogonalize_pull(plain, "A").network;
  CHECK_THROWS_AS(truncate_at_center(pulled, {{0, 1}, {2, 3}}, 10), ValidationError);
  CHECK_THROWS_AS(truncate_at_center(pulled, {{0}, {1, 2}}, 2), ValidationError);
}

TEST_CASE("both centering methods agree on the collapsed norm") {
  oracles::Rng rng(110);
  const TreeNetwork tn = TreeNetwork::build(seven(rng, 3));
  const double via_pull = center_norm(orthogonalize_pull(tn, "A").network);
  const double via_direct = center_norm(orthogonalize_direct(tn, "A").network);
  CHECK(std::abs(via_pull - via_direct) <= 1e-8 * via_pull);
}

TEST_CASE("gauge shuffling never moves the represented state") {
  oracles::Rng rng(111);
  const TreeNetwork tn = TreeNetwork::build(seven(rng, 2));
  const double norm_full = frobenius_norm(full(tn));

  TreeNetwork work = tn;
  for (int round = 0; round < 3; ++round) {
    const int label = 1 + static_cast<int>(rng() % 6);
    work = gauge_transform(work, label, easy_gauge(rng, 2, false));
  }
  const TreeNetwork centered = orthogonalize_pull(work, "C").network;
  CHECK(center_norm(centered) == doctest::Approx(norm_full).epsilon(1e-8));
}
