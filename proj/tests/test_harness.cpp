#include <doctest.h>

#include <cmath>

#include "conjury/harness.hpp"

using namespace conjury;
using namespace conjury::harness;
using g5::Vec5;

TEST_CASE("identity conjugacy of a map with itself has zero residual") {
  const auto f = build(PlanarDescriptor{BinaryCode::parse("0110")});
  const auto xs = planar_samples(f.layout(), 500, 1);
  const auto r = conjugacy_residual([&](const planar::Point& p) { return f.eval(p); },
                                    [&](const planar::Point& p) { return f.eval(p); },
                                    [](const planar::Point& p) { return p; }, xs, 0.0);
  CHECK(r.max_residual == 0.0);
  CHECK(r.pass());
  CHECK(r.samples == 500);
  REQUIRE(r.argmax.size() == 2);
  const planar::Point am(r.argmax[0], r.argmax[1]);
  CHECK(std::any_of(xs.begin(), xs.end(), [&](const planar::Point& x) { return x == am; }));
}

TEST_CASE("planar conjugacy residual stays at round-off") {
  const auto c1 = BinaryCode::parse("0110"), c2 = BinaryCode::parse("1011");
  const auto lay = planar::PlanarLayout::build(4);
  const auto r = planar_residual(planar::build(lay, c1), planar::build(lay, c2), planar::build_conjugacy(c1, c2, lay), 10000, 3);
  CHECK(r.max_residual <= 1e-12);
}

TEST_CASE("evaluation failures carry the sample index") {
  const std::vector<Vec5> xs(3, Vec5::Zero());
  int calls = 0;
  auto boom = [&](const Vec5& z) -> Vec5 {
    if (++calls == 3) throw ConstructionError("no");
    return z;
  };
  try {
    conjugacy_residual(boom, [](const Vec5& z) { return z; }, [](const Vec5& z) { return z; }, xs, 1.0);
    FAIL("expected a throw");
  } catch (const ConstructionError& e) {
    CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
  }
}

TEST_CASE("census") {
  SUBCASE("depth one, code 0") {
    const auto r = census(build(PlanarDescriptor{BinaryCode::parse("0")}));
    REQUIRE(r.records.size() == 4);
    std::vector<std::int64_t> periods;
    for (const auto& rec : r.records) {
      CHECK(rec.kind == RegionKind::PeriodicAnnulus);
      periods.push_back(rec.period);
    }
    std::sort(periods.begin(), periods.end());
    CHECK(periods == std::vector<std::int64_t>{9, 18, 72, 144});
    CHECK(std::isfinite(r.growth_proxy()));
    CHECK(r.growth.size() == 144);
  }
  SUBCASE("identity") {
    const auto r = census(build(PlanarDescriptor{BinaryCode()}));
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].kind == RegionKind::FixedSet);
    CHECK(r.growth_proxy() == 0.0);
  }
  SUBCASE("5-space maps have fixed sets only") {
    const auto f = build(Diffeo5Descriptor{GraphCode::from_edges(4, {{1, 2}}), r5::ProfileKind::Standard});
    const auto r = census(f);
    CHECK(r.records.size() == 13);
    for (const auto& rec : r.records) CHECK(rec.kind == RegionKind::FixedSet);
    CHECK(r.growth_proxy() == doctest::Approx(std::log(13.0) / 16));
  }
}

TEST_CASE("json round trips") {
  const auto code = BinaryCode::parse("10110");
  CHECK(code_from_json(json::parse(to_json(code).dump())) == code);
  const auto g = GraphCode::from_edges(5, {{1, 2}, {3, 5}});
  CHECK(graph_from_json(json::parse(to_json(g).dump())) == g);
  const auto seq = perm::decompose(perm::Permutation::from_cycles({{1, 2, 3}}));
  const auto seq2 = seq_from_json(json::parse(to_json(seq).dump()));
  CHECK(seq2.steps == seq.steps);
  const auto P = g5::place_vertices(5);
  CHECK(same_placement(placement_from_json(json::parse(to_json(P).dump())), P));
  const PlanarDescriptor pd{code};
  CHECK(planar_from_json(json::parse(to_json(pd).dump())) == pd);
  const Diffeo5Descriptor dd{g, r5::ProfileKind::Steep};
  CHECK(diffeo5_from_json(json::parse(to_json(dd).dump())) == dd);
  const ResidualReport rr{1.25e-13, {0.1, 1.0 / 3.0}, 7, 1e-12};
  CHECK(residual_from_json(json::parse(to_json(rr).dump())) == rr);
  const auto cr = census(build(pd));
  CHECK(census_from_json(json::parse(to_json(cr).dump())) == cr);

  const auto e1 = GraphCode::from_edges(3, {{1, 2}});
  const VertexBijection swap{3, 2, 1};
  c5::AssemblyOptions opt;
  opt.step.samples = 300;
  const auto a = c5::assemble(e1, relabel(e1, swap), swap, g5::place_vertices(3), opt);
  const auto ad = describe(a, assembly_residual(a, 300, 1));
  CHECK(assembly_from_json(json::parse(to_json(ad).dump())) == ad);
  CHECK(ad.residual.pass());
}

TEST_CASE("json schema errors are validation errors") {
  CHECK_THROWS_AS(code_from_json(json::parse(R"({"type":"binary_code","format_version":2,"bits":"01"})")), ValidationError);
  CHECK_THROWS_AS(code_from_json(json::parse(R"({"type":"graph","format_version":1})")), ValidationError);
  CHECK_THROWS_AS(graph_from_json(json::parse(R"({"type":"graph","format_version":1,"order":3})")), ValidationError);
  CHECK_THROWS_AS(graph_from_json(json::parse(R"({"type":"graph","format_version":1,"order":3,"edges":[[1,1]]})")), ValidationError);
  CHECK_THROWS_AS(planar_from_json(json::parse(R"({"type":"planar_diffeo","format_version":1,"depth":3,"code":"01"})")), ValidationError);
  CHECK_THROWS_AS(descriptor_type(json::parse("[1,2]")), ValidationError);
}

TEST_CASE("orbit csv") {
  const auto f = build(PlanarDescriptor{BinaryCode::parse("01")});
  const auto orbits = planar_orbits(f, 3, 20, 5);
  REQUIRE(orbits.size() == 3);
  const auto text = orbit_csv(orbits[0]);
  CHECK(text.rfind("iter,x1,x2\n", 0) == 0);
  const auto back = parse_orbit_csv(text);
  REQUIRE(back.size() == 21);
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].iter == static_cast<int>(k));
    CHECK(back[k].x == orbits[0][k].x);
  }
  const auto o5 = orbits5(build(Diffeo5Descriptor{GraphCode::from_edges(4, {{1, 2}})}), 2, 5, 1);
  CHECK(orbit_csv(o5[1]).rfind("iter,x1,x2,x3,x4,x5\n", 0) == 0);
  CHECK_THROWS_AS(parse_orbit_csv("iter,x1\n1,2\n0,3\n"), ValidationError);
  CHECK_THROWS_AS(parse_orbit_csv("step,x1\n"), ValidationError);
  CHECK_THROWS_AS(parse_orbit_csv("iter,x1\n0,nan\n"), ValidationError);
}
