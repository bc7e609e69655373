#include "doctest.h"

#include <random>

#include "conjury/planar.hpp"

using namespace conjury;
using namespace conjury::planar;

TEST_CASE("layout examples") {
  auto lay = PlanarLayout::build(1);
  const auto& e = lay.entry(2);
  CHECK((e.c_a - lay.a()).norm() == doctest::Approx(1.0 / 16));
  CHECK((e.c_b - lay.b()).norm() == doctest::Approx(1.0 / 16));
  CHECK((e.z_a - lay.a()).norm() == doctest::Approx(1.0 / 32));
  CHECK(e.radius == doctest::Approx(std::pow(2.0, -10)));
  CHECK(e.m == 9);
  CHECK((lay.a() - lay.b()).norm() == doctest::Approx(0.5));
}

TEST_CASE("rotation orders") {
  CHECK(rotation_order(2) == 9);
  CHECK(rotation_order(3) == 21);
  CHECK(rotation_order(5) == 149);
  std::int64_t prev = 0;
  for (int n = 2; n <= 13; ++n) {
    auto m = rotation_order(n);
    CHECK(m % 2 == 1);
    CHECK(static_cast<double>(m) > std::exp(n));
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("layout is disjoint at max depth") {
  auto lay = PlanarLayout::build(kMaxDepth);
  CHECK(lay.verify_disjoint());
  CHECK_THROWS_AS(PlanarLayout::build(kMaxDepth + 1), ValidationError);
}

TEST_CASE("build fractions") {
  auto lay = PlanarLayout::build(1);
  auto f0 = build(lay, BinaryCode::parse("0"));
  CHECK(f0.actuator({Family::ZA, 2}).denominator == 9);
  CHECK(f0.actuator({Family::ZB, 2}).denominator == 18);
  CHECK(f0.actuator({Family::CA, 2}).denominator == 72);
  CHECK(f0.actuator({Family::CB, 2}).denominator == 144);
  auto f1 = build(lay, BinaryCode::parse("1"));
  CHECK(f1.actuator({Family::ZA, 2}).denominator == 18);
  CHECK(f1.actuator({Family::ZB, 2}).denominator == 9);
  CHECK_THROWS_AS(build(lay, BinaryCode::parse("01")), ValidationError);
}

TEST_CASE("eval fixes centers and the complement") {
  auto lay = PlanarLayout::build(2);
  auto f = build(lay, BinaryCode::parse("01"));
  CHECK((f.eval(lay.entry(2).c_a) - lay.entry(2).c_a).norm() == 0.0);
  Point far(0.3, 0.4);
  CHECK(f.eval(far) == far);
}

TEST_CASE("inner point of z_a(2) has exact period 9") {
  auto lay = PlanarLayout::build(1);
  auto f = build(lay, BinaryCode::parse("0"));
  const auto& e = lay.entry(2);
  Point p = e.z_a + Point(e.radius / 8, 0);
  Point x = p;
  for (int k = 1; k <= 9; ++k) {
    x = f.eval(x);
    if (k < 9) CHECK((x - p).norm() > 1e-6 * e.radius);
  }
  CHECK((x - p).norm() < 1e-12);
}

TEST_CASE("spectrum examples") {
  auto lay = PlanarLayout::build(1);
  auto s0 = period_spectrum(build(lay, BinaryCode::parse("0")));
  REQUIRE(s0.size() == 4);
  CHECK(s0[0].minimal_period == 72);
  CHECK(s0[1].minimal_period == 144);
  CHECK(s0[2].minimal_period == 9);
  CHECK(s0[3].minimal_period == 18);
  auto s1 = period_spectrum(build(lay, BinaryCode::parse("1")));
  CHECK(s1[2].minimal_period == 18);
  CHECK(s1[3].minimal_period == 9);
}

TEST_CASE("periods are pairwise distinct") {
  auto lay = PlanarLayout::build(8);
  auto s = period_spectrum(build(lay, BinaryCode::parse("01101001")));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) CHECK(s[i].minimal_period != s[j].minimal_period);
  }
}

TEST_CASE("recover round trip") {
  auto lay = PlanarLayout::build(4);
  auto c = BinaryCode::parse("0110");
  CHECK(recover_code(period_spectrum(build(lay, c)), lay) == c);
  auto s = period_spectrum(build(lay, c));
  std::swap(s[2].minimal_period, s[3].minimal_period);
  CHECK(recover_code(s, lay) == BinaryCode::parse("1110"));
  auto empty = PlanarLayout::build(0);
  CHECK(recover_code({}, empty).depth() == 0);
  s[0].minimal_period = 5;
  CHECK_THROWS_AS(recover_code(s, lay), ConstructionError);
}

TEST_CASE("round trip for every depth-6 code") {
  auto lay = PlanarLayout::build(6);
  for (unsigned x = 0; x < 64; ++x) {
    std::vector<std::uint8_t> bits(6);
    for (int i = 0; i < 6; ++i) bits[i] = (x >> i) & 1u;
    BinaryCode c(bits);
    CHECK(recover_code(period_spectrum(build(lay, c)), lay) == c);
  }
}

TEST_CASE("discrimination at a single index") {
  auto lay = PlanarLayout::build(5);
  auto s1 = period_spectrum(build(lay, BinaryCode::parse("00000")));
  auto s2 = period_spectrum(build(lay, BinaryCode::parse("00100")));
  // bit 3 <-> n = 4, records at positions 4*(n-2)+2,3
  CHECK(s1[10].minimal_period != s2[10].minimal_period);
  CHECK(s1[11].minimal_period != s2[11].minimal_period);
}

TEST_CASE("inverse actuator composes to identity") {
  auto lay = PlanarLayout::build(3);
  auto f = build(lay, BinaryCode::parse("101"));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& act : f.actuators()) {
    for (int i = 0; i < 200; ++i) {
      Point p = act.center + act.radius * Point(u(rng), u(rng));
      CHECK((f.eval_inverse(f.eval(p)) - p).norm() < 1e-12);
    }
  }
}

TEST_CASE("conjugacy swaps z discs isometrically") {
  auto lay = PlanarLayout::build(4);
  auto c1 = BinaryCode::parse("0110");
  auto c2 = BinaryCode::parse("1100");
  auto f1 = build(lay, c1);
  auto f2 = build(lay, c2);
  auto h = build_conjugacy(c1, c2, lay);
  CHECK(h.swapped_indices() == std::vector<int>{2, 4});
  CHECK(build_conjugacy(c1, c1, lay).is_identity());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (const auto& act : f1.actuators()) {
    for (int i = 0; i < 300; ++i) {
      Point p = act.center + act.radius * Point(u(rng), u(rng));
      worst = std::max(worst, (h.eval(f1.eval(p)) - f2.eval(h.eval(p))).norm());
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("smoothness probe behaviour") {
  auto lay = PlanarLayout::build(10);
  auto f = build(lay, BinaryCode::parse("0110100110"));
  auto rep = smoothness_probe(f, lay.a(), {0, 1, 2});
  CHECK(rep.rows.size() == 3);
  CHECK(rep.rows[2].non_increasing);
  CHECK(rep.rows[1].non_increasing);
  // Inside a rotating disc away from its center the displacement does not vanish.
  const auto& e = lay.entry(2);
  Point off_center = e.z_a + Point(e.radius / 8, 0);
  auto bad = smoothness_probe(f, off_center, {1});
  CHECK_FALSE(bad.flat);
}
