#include "doctest.h"

#include "conjury/codes.hpp"

using namespace conjury;

TEST_CASE("e0_compare on examples") {
  auto r = e0_compare(BinaryCode::parse("0101"), BinaryCode::parse("1101"));
  REQUIRE(r.first_agreeing_index.has_value());
  CHECK(*r.first_agreeing_index == 1);
  CHECK_FALSE(r.equal);

  r = e0_compare(BinaryCode::parse("0110"), BinaryCode::parse("0110"));
  CHECK(*r.first_agreeing_index == 0);
  CHECK(r.equal);

  r = e0_compare(BinaryCode::parse("0001"), BinaryCode::parse("0000"));
  CHECK_FALSE(r.first_agreeing_index.has_value());
}

TEST_CASE("e0_compare is symmetric") {
  for (unsigned x = 0; x < 32; ++x) {
    for (unsigned y = 0; y < 32; ++y) {
      std::vector<std::uint8_t> a(5), b(5);
      for (int i = 0; i < 5; ++i) {
        a[i] = (x >> i) & 1u;
        b[i] = (y >> i) & 1u;
      }
      auto r1 = e0_compare(BinaryCode(a), BinaryCode(b));
      auto r2 = e0_compare(BinaryCode(b), BinaryCode(a));
      CHECK(r1.first_agreeing_index == r2.first_agreeing_index);
      CHECK(r1.equal == r2.equal);
    }
  }
}

TEST_CASE("code validation") {
  CHECK_THROWS_AS(BinaryCode::parse("012"), ValidationError);
  CHECK_THROWS_AS(e0_compare(BinaryCode::parse("01"), BinaryCode::parse("011")), ValidationError);
  CHECK(BinaryCode::parse("0110").bit(2) == 1);
  CHECK(BinaryCode::parse("0110").str() == "0110");
}

TEST_CASE("graph iso oracle") {
  auto tri = GraphCode::from_edges(3, {{1, 2}, {2, 3}, {1, 3}});
  auto path3 = GraphCode::from_edges(3, {{1, 2}, {2, 3}});
  auto phi = graph_iso(tri, tri);
  REQUIRE(phi);
  CHECK(*phi == VertexBijection{1, 2, 3});
  CHECK_FALSE(graph_iso(tri, path3));

  auto c4 = GraphCode::from_edges(4, {{1, 2}, {2, 3}, {3, 4}, {4, 1}});
  auto p4 = GraphCode::from_edges(4, {{1, 2}, {2, 3}, {3, 4}});
  CHECK_FALSE(graph_iso(c4, p4));

  auto g = GraphCode::from_edges(5, {{1, 2}, {2, 5}, {3, 4}});
  VertexBijection sigma{3, 1, 5, 2, 4};
  auto h = relabel(g, sigma);
  auto found = graph_iso(g, h);
  REQUIRE(found);
  CHECK(verify_iso(g, h, *found));
  CHECK(verify_iso(g, h, sigma));
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(GraphCode::from_adjacency({{false, true}, {false, false}}), ValidationError);
  CHECK_THROWS_AS(GraphCode::from_adjacency({{true}}), ValidationError);
  CHECK_THROWS_AS(graph_iso(GraphCode(9), GraphCode(9)), ValidationError);
}
