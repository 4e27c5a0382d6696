#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tenkit/tensor.hpp"

using namespace tenkit;

TEST_CASE("construction enforces shape and payload invariants") {
  CHECK_THROWS_AS(DenseTensor::zeros(ScalarKind::Real, {2, 0, 3}), ValidationError);
  CHECK_THROWS_AS(DenseTensor::from_real({2, 2}, {1.0, 2.0, 3.0}), ValidationError);
  CHECK_THROWS_AS(DenseTensor::from_complex({3}, {Complex(1.0)}), ValidationError);

  const DenseTensor s = DenseTensor::scalar(2.5);
  CHECK(s.order() == 0);
  CHECK(s.size() == 1);
  CHECK(s.at_flat(0) == Complex(2.5));

  const DenseTensor z = DenseTensor::zeros(ScalarKind::Complex, {2, 3});
  CHECK(!z.is_real());
  CHECK(z.size() == 6);
  CHECK(frobenius_norm(z) == 0.0);
}

TEST_CASE("element access follows row-major order, last index fastest") {
  const DenseTensor t = DenseTensor::from_real({2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t.at({0, 0}) == Complex(0.0));
  CHECK(t.at({0, 2}) == Complex(2.0));
  CHECK(t.at({1, 0}) == Complex(3.0));
  CHECK(t.at({1, 2}) == Complex(5.0));
  CHECK(t.at_flat(4) == Complex(4.0));
  CHECK_THROWS_AS(t.at({2, 0}), ValidationError);
  CHECK_THROWS_AS(t.at({0, 0, 0}), ValidationError);

  const auto strides = row_major_strides({2, 3, 4});
  CHECK(strides == std::vector<std::size_t>{12, 4, 1});
}

TEST_CASE("permute relabels axes so result axis i reads input axis perm[i]") {
  oracles::Rng rng(11);
  const DenseTensor t = oracles::random_real(rng, {2, 3, 4});
  const DenseTensor p = permute(t, {2, 0, 1});
  REQUIRE(p.shape() == Shape{4, 2, 3});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(p.at({k, i, j}) == t.at({i, j, k}));
      }
    }
  }

  // Undoing the permutation restores the original storage bit for bit.
  const DenseTensor back = permute(p, {1, 2, 0});
  CHECK(oracles::bit_equal(back, t));

  CHECK_THROWS_AS(permute(t, {0, 1}), ValidationError);
  CHECK_THROWS_AS(permute(t, {0, 1, 1}), ValidationError);
  CHECK_THROWS_AS(permute(t, {0, 1, 3}), ValidationError);
}

TEST_CASE("reshaped reinterprets the flat buffer without moving data") {
  const DenseTensor t = DenseTensor::from_real({2, 3}, {0, 1, 2, 3, 4, 5});
  const DenseTensor flat = t.reshaped({6});
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(flat.at({i}) == Complex(static_cast<double>(i)));
  }
  CHECK(oracles::bit_equal(flat.reshaped({2, 3}), t));
  CHECK_THROWS_AS(t.reshaped({4}), ValidationError);
}

TEST_CASE("reshape_group fuses adjacent axis runs and rejects gaps") {
  oracles::Rng rng(12);
  const DenseTensor t = oracles::random_complex(rng, {2, 3, 4});
  const std::vector<std::vector<std::size_t>> groups{{0, 1}, {2}};
  const DenseTensor g = reshape_group(t, groups);
  REQUIRE(g.shape() == Shape{6, 4});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(g.at({i * 3 + j, k}) == t.at({i, j, k}));
      }
    }
  }

  const std::vector<std::vector<std::size_t>> skip{{0, 2}, {1}};
  CHECK_THROWS_AS(reshape_group(t, skip), ValidationError);
  const std::vector<std::vector<std::size_t>> partial{{0, 1}};
  CHECK_THROWS_AS(reshape_group(t, partial), ValidationError);
}

TEST_CASE("conjugate flips imaginary parts and keeps real tensors intact") {
  oracles::Rng rng(13);
  const DenseTensor c = oracles::random_complex(rng, {3, 2});
  const DenseTensor cc = conjugate(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(cc.at_flat(i) == std::conj(c.at_flat(i)));
  }
  const DenseTensor r = oracles::random_real(rng, {4});
  CHECK(oracles::bit_equal(conjugate(r), r));
}

TEST_CASE("scaled multiplies every element, promoting kind for complex factors") {
  const DenseTensor t = DenseTensor::from_real({2}, {1.0, -2.0});
  const DenseTensor s = scaled(t, 3.0);
  CHECK(s.is_real());
  CHECK(s.at({1}) == Complex(-6.0));
  const DenseTensor sc = scaled(t, Complex(0.0, 1.0));
  CHECK(!sc.is_real());
  CHECK(sc.at({1}) == Complex(0.0, -2.0));
}

TEST_CASE("ttr sums elementwise products with no conjugation") {
  const DenseTensor ones = DenseTensor::from_real({2, 2, 2}, std::vector<double>(8, 1.0));
  CHECK(ttr(ones, ones) == Complex(8.0));

  oracles::Rng rng(14);
  const DenseTensor a = oracles::random_complex(rng, {3, 4});
  const Complex self = ttr(conjugate(a), a);
  const double n = frobenius_norm(a);
  CHECK(std::abs(self.real() - n * n) <= 1e-12 * n * n);
  CHECK(std::abs(self.imag()) <= 1e-12 * n * n);

  const DenseTensor b = oracles::random_real(rng, {3, 4});
  Complex manual(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) manual += a.at_flat(i) * b.at_flat(i);
  const Complex mixed = ttr(a, b);  // real operand promotes
  CHECK(std::abs(mixed - manual) <= 1e-12 * std::abs(manual));

  CHECK_THROWS_AS(ttr(a, oracles::random_real(rng, {4, 3})), ValidationError);
}

TEST_CASE("norms measure the elementwise distance") {
  const DenseTensor ones = DenseTensor::from_real({2, 2, 2}, std::vector<double>(8, 1.0));
  CHECK(frobenius_norm(ones) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-14));

  const DenseTensor z = DenseTensor::zeros(ScalarKind::Real, {2, 2});
  const DenseTensor o = DenseTensor::from_real({2, 2}, std::vector<double>(4, 1.0));
  CHECK(difference_norm(o, z) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(difference_norm(o, o) == 0.0);
  CHECK_THROWS_AS(difference_norm(o, DenseTensor::zeros(ScalarKind::Real, {4})),
                  ValidationError);
}

TEST_CASE("squared distance expands into norms and the cross trace") {
  oracles::Rng rng(15);
  for (const bool complex_kind : {false, true}) {
    const DenseTensor a = oracles::random_tensor(rng, {3, 3, 2}, complex_kind);
    const DenseTensor b = oracles::random_tensor(rng, {3, 3, 2}, complex_kind);
    const double d = difference_norm(a, b);
    const double na = frobenius_norm(a), nb = frobenius_norm(b);
    const double cross = ttr(conjugate(a), b).real();
    const double expanded = na * na + nb * nb - 2.0 * cross;
    CHECK(std::abs(d * d - expanded) <= 1e-12 * std::max(1.0, expanded));
  }
}

TEST_CASE("identity builds either scalar kind") {
  const DenseTensor ir = DenseTensor::identity(3);
  CHECK(ir.is_real());
  CHECK(ir.at({1, 1}) == Complex(1.0));
  CHECK(ir.at({1, 2}) == Complex(0.0));
  const DenseTensor ic = DenseTensor::identity(2, ScalarKind::Complex);
  CHECK(!ic.is_real());
  CHECK(ic.at({0, 0}) == Complex(1.0));
}

TEST_CASE("bipartition validation rejects empty, repeated, and missing axes") {
  CHECK_NOTHROW(validate_bipartition({{0}, {1}}, 2));
  CHECK_THROWS_AS(validate_bipartition({{}, {0, 1}}, 2), ValidationError);
  CHECK_THROWS_AS(validate_bipartition({{0}, {}}, 2), ValidationError);
  CHECK_THROWS_AS(validate_bipartition({{0}, {0}}, 2), ValidationError);
  CHECK_THROWS_AS(validate_bipartition({{0}, {2}}, 2), ValidationError);
  CHECK_THROWS_AS(validate_bipartition({{0}, {1}}, 3), ValidationError);
}

TEST_CASE("unitary check accepts the identity and rejects off-unitary input") {
  const Bipartition p{{0}, {1}};
  CHECK(is_unitary(DenseTensor::identity(3), p));
  CHECK(is_unitary(DenseTensor::identity(3, ScalarKind::Complex), p));

  const PredicateResult scaledI = is_unitary(scaled(DenseTensor::identity(3), 2.0), p);
  CHECK(!scaledI.pass);
  CHECK(scaledI.deviation > 1.0);

  // Non-square views fail structurally, with a stated reason.
  oracles::Rng rng(16);
  const PredicateResult rect = is_unitary(oracles::random_real(rng, {3, 2}), p);
  CHECK(!rect.pass);
  CHECK(!rect.reason.empty());
}

TEST_CASE("isometry check wants tall frames with orthonormal columns") {
  // First two columns of the 3x3 identity: a textbook isometry.
  const DenseTensor w = DenseTensor::from_real({3, 2}, {1, 0, 0, 1, 0, 0});
  const Bipartition p{{0}, {1}};
  const PredicateResult ok = is_isometry(w, p);
  CHECK(ok.pass);
  CHECK(ok.deviation <= 1e-15);

  // The same matrix is not unitary: WW' projects instead of the identity.
  CHECK(!is_unitary(w, p).pass);

  // Wide views are rejected structurally.
  oracles::Rng rng(17);
  const PredicateResult wide = is_isometry(oracles::random_real(rng, {2, 3}), p);
  CHECK(!wide.pass);
  CHECK(!wide.reason.empty());

  const PredicateResult off = is_isometry(scaled(w, 1.5), p);
  CHECK(!off.pass);
  CHECK(off.deviation == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("isometry check fuses multi-axis groups before comparing") {
  // Orthonormal columns on a (2,2)x(2) unfolding built from the 4x4 identity.
  const DenseTensor id4 = DenseTensor::identity(4);
  const DenseTensor w = id4.reshaped({2, 2, 4});
  const PredicateResult r = is_isometry(w, {{0, 1}, {2}});
  CHECK(r.pass);
}

TEST_CASE("projector check demands Hermitian idempotence") {
  const DenseTensor p = DenseTensor::from_real({2, 2}, {1, 0, 0, 0});
  CHECK(is_projector(p).pass);

  const DenseTensor half = scaled(DenseTensor::identity(2), 0.5);
  const PredicateResult r = is_projector(half);
  CHECK(!r.pass);
  CHECK(r.deviation == doctest::Approx(0.25).epsilon(1e-12));

  oracles::Rng rng(18);
  const PredicateResult odd = is_projector(oracles::random_real(rng, {2, 3}));
  CHECK(!odd.pass);
  CHECK(!odd.reason.empty());
}
