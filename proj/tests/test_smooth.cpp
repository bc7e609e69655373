#include "doctest.h"

#include "conjury/smooth.hpp"

using namespace conjury::smooth;

TEST_CASE("plateau invariants on a dense grid") {
  double prev = 1.0;
  for (int i = 0; i <= 20000; ++i) {
    const double x = i / 20000.0;
    const double v = plateau(x);
    if (x <= 0.25) CHECK(v == 1.0);
    if (x >= 0.75) CHECK(v == 0.0);
    CHECK(v >= -1e-12);
    CHECK(v <= 1.0 + 1e-12);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  CHECK(plateau(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  // Continuity across the junctions.
  CHECK(plateau(0.25 + 1e-6) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(plateau(0.75 - 1e-6) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("plateau is symmetric about 1/2") {
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.25 * i / 100.0;
    CHECK(plateau(0.5 - t) + plateau(0.5 + t) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("flat step and bump") {
  CHECK(flat_step(-1.0) == 0.0);
  CHECK(flat_step(0.5) == doctest::Approx(0.5));
  CHECK(flat_step(2.0) == 1.0);
  CHECK(cutoff(0.1, 0.2, 0.4) == 1.0);
  CHECK(cutoff(0.5, 0.2, 0.4) == 0.0);
  CHECK(open_bump(0.0) == 1.0);
  CHECK(open_bump(1.0) == 0.0);
  CHECK(open_bump(0.5) > 0.0);
}
