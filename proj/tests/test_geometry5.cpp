#include <doctest.h>

#include <random>

#include "conjury/geometry5.hpp"

using namespace conjury;
using namespace conjury::g5;

namespace {

Vec5 random_normal(std::mt19937_64& rng, const Vec5& axis) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec5 e;
  for (int i = 0; i < 5; ++i) e(i) = N(rng);
  e -= e.dot(axis) * axis;
  return e.normalized();
}

// Random point of a swept set: a cigar point pushed by a time in the window.
Vec5 sample_sweep(const SweptSet& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double t = -0.999 + 1.998 * U(rng);
  const Vec5 p = s.cigar.point(t, 0.999 * U(rng), random_normal(rng, s.cigar.axis()));
  const double tau = s.t0 + (s.t1 - s.t0) * U(rng);
  return affine_flow(s.field, p, tau);
}

}  // namespace

TEST_CASE("placement invariants") {
  for (int V : {2, 3, 4, 5, 6, 8}) {
    const auto P = place_vertices(V);
    CHECK(P.count == V);
    for (int n = 1; n <= V; ++n) CHECK((P.vertex(n) - P.r).norm() < std::ldexp(1.0, -n - 1));
    for (int a = 1; a <= V; ++a)
      for (int b = a + 1; b <= V; ++b) {
        CHECK(P.alpha_of(a, b) > 0.0);
        CHECK(P.eps_of(a, b) <= std::ldexp(1.0, -a - b));
        CHECK(P.eps_of(a, b) == doctest::Approx(std::min(0.001 * P.alpha_of(a, b), std::ldexp(1.0, -a - b))));
      }
    CHECK(P.min_collinear >= 1e-9);
    CHECK(P.min_coplanar >= 1e-9);
    for (double e : P.eta) CHECK(e > 0.0);
    for (const auto& c : placement_certificates(P)) {
      INFO(c.name << " " << c.detail);
      CHECK(c.pass);
      CHECK(c.margin >= 1e-9);
    }
  }
  const auto P2 = place_vertices(2);
  CHECK(P2.eps_of(1, 2) <= 0.125);
  CHECK_THROWS_AS(place_vertices(1), ValidationError);
}

TEST_CASE("cigar Pos") {
  const Vec5 x = in_e3(0, 0, 0);
  const Vec5 y = in_e3(1, 0, 0);
  const Cigar c(x, y, 0.1);
  CHECK(c.pos(0.5 * (x + y)).value() == doctest::Approx(0.0));
  CHECK_FALSE(c.pos(x).has_value());
  CHECK_FALSE(c.pos(y).has_value());
  const Vec5 e = in_e2(0, 1);
  const Vec5 z = c.gamma(0.5) + 0.4 * 0.1 * psi(0.5) * e;
  CHECK(c.pos(z).value() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_FALSE(c.pos(c.gamma(0.5) + 1.01 * 0.1 * psi(0.5) * e).has_value());
  CHECK(c.gamma(-1.0).isApprox(x));
  CHECK(c.gamma(1.0).isApprox(y));
}

TEST_CASE("affine flow") {
  const Vec5 x = in_e3(0.1, 0.2, 0.0);
  const Vec5 y = in_e3(0.3, -0.1, 0.05);
  const Vec5 w = 0.01 * in_e2(0.6, 0.8);
  const auto f = make_affine_field(x, y, w);
  CHECK(std::abs(f.a.dot(w)) < 1e-15);
  CHECK(f.ell(y) == doctest::Approx(1.0));
  CHECK((affine_flow(f, y, 1.0) - (y + w)).norm() < 1e-16);
  // The zero set contains x and directions orthogonal to the plane of x, y, y + w.
  const Vec5 perp = in_e3(0, 0, 1) - in_e3(0, 0, 1).dot((y - x).normalized()) * (y - x).normalized();
  const Vec5 inL = x + 0.3 * (perp - perp.dot(w.normalized()) * w.normalized());
  CHECK((affine_flow(f, inL, 5.0) - inL).norm() < 1e-16);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 100; ++i) {
    Vec5 z;
    for (int k = 0; k < 5; ++k) z(k) = U(rng);
    const double s = U(rng), t = U(rng);
    CHECK((affine_flow(f, affine_flow(f, z, t), s) - affine_flow(f, z, s + t)).norm() < 1e-15);
  }
  CHECK_THROWS_AS(make_affine_field(x, x + w, w), ValidationError);
}

TEST_CASE("triangle distance against sampling") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Triangle A, B;
    for (auto* T : {&A, &B})
      for (auto& v : *T)
        for (int k = 0; k < 5; ++k) v(k) = U(rng) + (T == &B ? 0.7 : 0.0);
    const double d = triangle_distance(A, B).distance;
    double sampled = 1e9;
    for (int i = 0; i <= 30; ++i)
      for (int j = 0; i + j <= 30; ++j)
        for (int k = 0; k <= 30; ++k)
          for (int l = 0; k + l <= 30; ++l) {
            const Vec5 p = A[0] + (i / 30.0) * (A[1] - A[0]) + (j / 30.0) * (A[2] - A[0]);
            const Vec5 q = B[0] + (k / 30.0) * (B[1] - B[0]) + (l / 30.0) * (B[2] - B[0]);
            sampled = std::min(sampled, (p - q).norm());
          }
    CHECK(d <= sampled + 1e-12);
    CHECK(d >= sampled - 0.1);
  }
}

TEST_CASE("tube family certificates and sampled membership") {
  const auto P = place_vertices(6);
  const auto seq = perm::decompose(perm::Permutation::from_cycles({{1, 2, 3, 4}, {5, 6}}));
  const auto fam = build_tubes(P, seq);
  for (const auto& c : fam.clauses) {
    INFO(c.name << " " << c.detail);
    CHECK(c.pass);
  }
  CHECK(fam.sum_d() <= 2.0);
  std::mt19937_64 rng(3);
  auto pairs_of = [](const StepTubes& st, int k) { return std::set<std::set<int>>{{st.n, k}, {st.m, k}}; };
  for (const auto& si : fam.steps)
    for (const auto& sj : fam.steps) {
      if (si.index == sj.index) continue;
      for (const auto& c : si.up) {
        for (int s = 0; s < 50; ++s) {
          const Vec5 z = sample_sweep(c.sweep, rng);
          CHECK(si.in_V(c.anchor, z));
          if (c.anchor == -1) {
            CHECK_FALSE(sj.in_W(z));
            continue;
          }
          for (int l : sj.anchors()) {
            if (c.anchor == 0 || l == 0) continue;
            bool coincide = false;
            for (const auto& p : pairs_of(si, c.anchor))
              if (pairs_of(sj, l).count(p)) coincide = true;
            if (!coincide) CHECK_FALSE(sj.in_V(l, z));
          }
        }
      }
    }
  // Needle tubes are pairwise disjoint.
  for (int n = 1; n <= P.count; ++n)
    for (int s = 0; s < 200; ++s) {
      const auto& c = fam.needles[static_cast<std::size_t>(n - 1)];
      std::uniform_real_distribution<double> U(-0.999, 0.999);
      const Vec5 z = c.point(U(rng), std::abs(U(rng)), random_normal(rng, c.axis()));
      for (int m = 1; m <= P.count; ++m)
        if (m != n) CHECK_FALSE(fam.needles[static_cast<std::size_t>(m - 1)].contains(z));
    }
  // Rectangle corners lie in B_Q; cones contain their own axis only.
  for (const auto& st : fam.steps) {
    for (const auto& q : st.Q) CHECK(st.in_BQ(q));
    for (const auto& o : fam.steps) {
      const bool own = o.index == st.index;
      CHECK(fam.in_cone(st.index, o.w.tail<2>()) == own);
    }
  }
}

TEST_CASE("transport carries vertices along the rectangle") {
  const auto P = place_vertices(4);
  const auto seq = perm::decompose(perm::Permutation::from_cycles({{1, 3}}));
  const auto fam = build_tubes(P, seq);
  const auto& st = fam.steps[0];
  for (const auto& tr : st.transports) {
    CHECK((tr.apply(P.vertex(tr.a)) - P.vertex(tr.ta)).norm() < 1e-15);
    CHECK((tr.apply(P.vertex(tr.b)) - P.vertex(tr.tb)).norm() < 1e-15);
  }
  CHECK(pos_distortion(st, P, 1000, 1) < 1.0 / 1000.0);
}
