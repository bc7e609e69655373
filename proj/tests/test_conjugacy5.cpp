#include <doctest.h>

#include <cmath>
#include <random>

#include "conjury/conjugacy5.hpp"

using namespace conjury;
using namespace conjury::c5;

namespace {

Vec5 unit_normal(std::mt19937_64& rng, const Vec5& axis) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec5 v;
  for (int i = 0; i < 5; ++i) v(i) = N(rng);
  v -= v.dot(axis) * axis;
  return v.normalized();
}

AssemblyOptions quick(int samples = 800) {
  AssemblyOptions opt;
  opt.step.samples = samples;
  return opt;
}

struct Fixture {
  g5::VertexPlacement P = g5::place_vertices(4);
  GraphCode e1 = GraphCode::from_edges(4, {{1, 2}, {2, 3}, {1, 4}});
  VertexBijection phi{3, 2, 1, 4};
  GraphCode e2 = relabel(e1, phi);
};

const Assembly& shared_assembly() {
  static const Assembly a = [] {
    Fixture f;
    return assemble(f.e1, f.e2, f.phi, f.P, quick());
  }();
  return a;
}

}  // namespace

TEST_CASE("shrink is radial and exactly inverted by expand") {
  const auto P = g5::place_vertices(4);
  const g5::Cigar base = P.edge_cigar(1, 2, P.eps_base(1, 2));
  const double delta = P.eps_dyn(1, 2) / 8.0;
  const auto S = shrink_map({base}, {delta});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double t = -0.95 + 1.9 * U(rng), g = U(rng);
    const Vec5 z = base.point(t, g, unit_normal(rng, base.axis()));
    const Vec5 s = S.apply(z);
    CHECK(base.param(s) == doctest::Approx(t).epsilon(1e-9));
    const double c = delta / base.eps();
    const double expect = g <= 0.5 ? 2.0 * c * g : c + (1.0 - c) * (2.0 * g - 1.0);
    CHECK(base.gauge(s) == doctest::Approx(expect).epsilon(1e-9));
    CHECK((S.expand(s) - z).norm() <= 1e-9 * base.eps());
  }
  const Vec5 out = base.point(0.0, 1.5, g5::in_e2(1, 0));
  CHECK(S.apply(out) == out);
  CHECK_FALSE(S.in_support(out));
  CHECK_THROWS_AS(shrink_map({base}, {base.eps()}), ValidationError);
  CHECK_THROWS_AS(shrink_map({base}, {0.0}), ValidationError);
  CHECK_THROWS_AS(shrink_map({base}, {delta, delta}), ValidationError);
}

TEST_CASE("pushes move only the swapped vertices, invert, and are identity off their tubes") {
  Fixture f;
  const auto seq = perm::decompose(perm::Permutation::from_bijection(f.phi));
  const auto tubes = g5::build_tubes(f.P, seq);
  const auto& st = tubes.steps.front();
  for (auto kind : {g5::PushKind::Up, g5::PushKind::Across}) {
    const PushMap push(st, kind);
    for (int v = 1; v <= 4; ++v)
      if (v != st.n && v != st.m) CHECK((push.apply(f.P.vertex(v)) - f.P.vertex(v)).norm() < 1e-14);
    const Vec5 far = f.P.r + 10.0 * Vec5::Ones();
    CHECK(push.apply(far) == far);
    CHECK_FALSE(push.in_support(far));
    const auto samples = support_samples(st, shared_assembly().G.front(), 200, 11);
    for (const auto& z : samples) {
      const Vec5 w = push.apply(z);
      // The inverse has slope psi(z) / psi(w) along u, unbounded where the flow ends in a flat zero.
      const double cond = std::abs(push.psi(z)) / std::max(std::abs(push.psi(w)), 1e-300);
      CHECK((push.inverse(w) - z).norm() < 1e-8 * (1.0 + cond));
      const Vec5 u = push.direction().normalized();
      CHECK(((w - z) - (w - z).dot(u) * u).norm() <= 1e-15 * (1.0 + (w - z).norm()));
    }
    const auto stats = push.stats();
    CHECK(stats.closed_form + stats.integrated + stats.identity > 0);
  }
  // Lift, cross, lower: the swapped vertices trade places.
  const PushMap up(st, g5::PushKind::Up), across(st, g5::PushKind::Across);
  const Vec5 lifted = up.apply(f.P.vertex(st.n));
  CHECK((lifted - f.P.vertex(st.n)).norm() > 0.0);
  CHECK((across.apply(lifted) - lifted).norm() > 0.0);
  CHECK((up.apply(across.apply(lifted)) - f.P.vertex(st.m)).norm() < 1e-12);
}

TEST_CASE("matching a cigar with itself is the identity") {
  Fixture f;
  const auto G = std::make_shared<const r5::Diffeo5>(r5::Diffeo5::build_R(f.e1, f.P));
  const double delta = f.P.eps_dyn(1, 2) / 8.0;
  const CigarState s{G, 1, 2, delta};
  const MatchingPiece piece(s, s, AffineMap::identity());
  CHECK(piece.log_norm() < 1e-12);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const g5::Cigar tiny = s.tiny();
  for (int i = 0; i < 100; ++i) {
    const Vec5 z = tiny.point(-0.9 + 1.8 * U(rng), 0.49 * U(rng), unit_normal(rng, tiny.axis()));
    CHECK((piece.apply(z) - z).norm() < 1e-10 * delta);
  }
}

TEST_CASE("matching rejects opposite signs and large displacement") {
  Fixture f;
  const auto G = std::make_shared<const r5::Diffeo5>(r5::Diffeo5::build_R(f.e1, f.P));
  const double delta = std::min(f.P.eps_dyn(1, 2), f.P.eps_dyn(1, 3)) / 8.0;
  // (1,2) is an edge and (1,3) is not.
  const CigarState plus{G, 1, 2, delta}, minus{G, 1, 3, delta};
  CHECK_THROWS_AS(matching_map({{plus, minus}}, {AffineMap::identity()}), ValidationError);
  CHECK_THROWS_AS(matching_map({{plus, plus}}, {}), ValidationError);
  AffineMap shift = AffineMap::identity();
  shift.offset = 1e-2 * g5::in_e2(1, 0);
  CHECK_THROWS_AS(matching_map({{plus, plus}}, {shift}, 1e-12), ConstructionError);
}

TEST_CASE("a step conjugates consecutive maps and swaps its vertices") {
  const auto& a = shared_assembly();
  REQUIRE(a.size() >= 1);
  for (const auto& h : a.steps) {
    const auto& r = h.report;
    INFO("step " << h.index);
    CHECK(r.residual < 1e-6);
    CHECK(r.relative_residual < 1e-5);
    CHECK(r.vertex_error < 1e-12);
    CHECK(r.displacement <= r.displacement_bound);
    CHECK(r.affinity_deviation < 1e-5);
    CHECK(h.apply(a.tubes.placement.vertex(h.n)).isApprox(a.tubes.placement.vertex(h.m), 1e-12));
  }
}

TEST_CASE("removing the match breaks the conjugacy") {
  const auto& a = shared_assembly();
  HomeoStep h = a.steps.front();
  h.match = MatchingMap();
  const auto xs = support_samples(a.tubes.steps.front(), a.G[0], 400, 2);
  const auto& P = a.tubes.placement;
  double worst = 0.0;
  for (const auto& x : xs) {
    const Vec5 hx = h.apply(x);
    const auto loc = a.G[1].locate(hx);
    if (!loc) continue;
    worst = std::max(worst, (h.apply(a.G[0].eval(x)) - a.G[1].eval(hx)).norm() / P.eps_dyn(loc->a, loc->b));
  }
  CHECK(worst > 1e-2);
}

TEST_CASE("assembly endpoints and validation") {
  Fixture f;
  const auto same = assemble(f.e1, f.e1, VertexBijection{1, 2, 3, 4}, f.P, quick());
  CHECK(same.size() == 0);
  const Vec5 z = f.P.vertex(2) + 1e-3 * g5::in_e2(1, 1);
  CHECK(same.apply(z) == z);
  CHECK_THROWS_AS(assemble(f.e1, f.e2, VertexBijection{1, 2, 3, 4}, f.P, quick()), ValidationError);
  const auto other = GraphCode::from_edges(4, {{1, 2}});
  CHECK_THROWS_AS(assemble(f.e1, other, f.P, quick()), ConstructionError);
}

TEST_CASE("single transposition on three vertices recovers the target graph") {
  const auto P = g5::place_vertices(3);
  const auto e1 = GraphCode::from_edges(3, {{1, 2}});
  const VertexBijection swap{3, 2, 1};
  const auto e2 = relabel(e1, swap);
  for (auto profile : {r5::ProfileKind::Standard, r5::ProfileKind::Steep}) {
    auto opt = quick(1000);
    opt.profile = profile;
    const auto a = assemble(e1, e2, swap, P, opt);
    REQUIRE(a.size() == 1);
    CHECK(a.steps[0].report.residual < 1e-6);
    CHECK(r5::edge_detect(a.G.back(), 1e-8) == e2);
    CHECK(end_to_end_residual(a, 1000, 4).value < 1e-6);
  }
}

TEST_CASE("finite motion, injectivity and position drift") {
  const auto& a = shared_assembly();
  const auto& P = a.tubes.placement;
  const Vec5 far = P.r + 10.0 * Vec5::Ones();
  CHECK(finite_motion_certificate(a, far).stage == 0);
  const auto xs = support_samples(a.tubes.steps.front(), a.G[0], 50, 9);
  for (const auto& x : xs) {
    const auto c = finite_motion_certificate(a, x);
    CHECK(c.stage <= static_cast<int>(a.size()));
    CHECK(static_cast<int>(c.visited.size()) <= c.stage);
  }
  const auto inj = injectivity_probe(a, 400, 1e-9, 6);
  CHECK(inj.value > 0.0);
  const auto drift = pos_drift(a, 200, 8);
  CHECK(std::isfinite(drift.value));
  CHECK(drift.value < 1.0);
  CHECK(a.displacement_sum() <= a.displacement_bound_sum());
  CHECK(end_to_end_residual(a, 1000, 3).value < 1e-6);
}
