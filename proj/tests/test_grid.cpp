#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "eiklab/grid.hpp"

using namespace eiklab;

TEST_CASE("grid construction and indexing", "[grid]") {
  Grid3 grid(9, 0.5);
  CHECK(grid.center() == 4);
  CHECK(grid.half_extent() == Catch::Approx(2.0));
  CHECK(grid.size() == 9u * 9u * 9u);
  CHECK(grid.coord(4) == 0.0);
  CHECK(grid.coord(0) == Catch::Approx(-2.0));
  CHECK(grid.radius(4, 4, 4) == 0.0);
  auto p = grid.point(8, 4, 4);
  CHECK(p[0] == Catch::Approx(2.0));
  CHECK(p[1] == 0.0);

  // x runs fastest.
  CHECK(grid.idx(1, 0, 0) == grid.idx(0, 0, 0) + 1);
  CHECK(grid.idx(0, 1, 0) == grid.idx(0, 0, 0) + 9);
  CHECK(grid.idx(0, 0, 1) == grid.idx(0, 0, 0) + 81);

  CHECK(grid.interior(1, 1, 1));
  CHECK_FALSE(grid.interior(0, 4, 4));
  CHECK_FALSE(grid.interior(4, 4, 8));
}

TEST_CASE("grid validation", "[grid]") {
  CHECK_THROWS_AS(Grid3(8, 0.5), std::invalid_argument);   // even n
  CHECK_THROWS_AS(Grid3(1, 0.5), std::invalid_argument);   // too small
  CHECK_THROWS_AS(Grid3(9, -1.0), std::invalid_argument);  // bad spacing
  CHECK_THROWS_AS(Grid3::cube(2.0, 7), std::invalid_argument);  // odd cell count
}

TEST_CASE("cube factory round trip", "[grid]") {
  auto grid = Grid3::cube(3.0, 24);
  CHECK(grid.n == 25);
  CHECK(grid.h == Catch::Approx(0.25));
  CHECK(grid.half_extent() == Catch::Approx(3.0));
}

TEST_CASE("gradient is exact on affine fields everywhere", "[grid]") {
  auto grid = Grid3::cube(1.0, 10);
  RealField f(grid);
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        auto x = grid.point(i, j, k);
        f.at(i, j, k) = 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2] + 1.0;
      }
  auto g = gradient(f);
  for (std::size_t id = 0; id < grid.size(); ++id) {
    CHECK(g[0][id] == Catch::Approx(2.0).margin(1e-13));
    CHECK(g[1][id] == Catch::Approx(-3.0).margin(1e-13));
    CHECK(g[2][id] == Catch::Approx(0.5).margin(1e-13));
  }
}

TEST_CASE("one-sided boundary differences are exact on quadratics", "[grid]") {
  auto grid = Grid3::cube(1.0, 8);
  RealField f(grid);
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        auto x = grid.point(i, j, k);
        f.at(i, j, k) = x[0] * x[0];
      }
  auto g = gradient(f);
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j) {
      CHECK(g[0].at(0, j, k) == Catch::Approx(-2.0).margin(1e-12));
      CHECK(g[0].at(grid.n - 1, j, k) == Catch::Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("midpoint volume integral sums cell volumes", "[grid]") {
  auto grid = Grid3::cube(1.0, 8);
  const double vol = integrate_region(
      grid, [](int, int, int) { return true; },
      [](int, int, int) { return 1.0; });
  CHECK(vol == Catch::Approx(grid.size() * grid.h * grid.h * grid.h));

  // Restricting membership drops the excluded cells.
  const double half = integrate_region(
      grid, [&](int i, int, int) { return grid.coord(i) > 0.0; },
      [](int, int, int) { return 1.0; });
  CHECK(half == Catch::Approx(4.0 * 9.0 * 9.0 * grid.h * grid.h * grid.h));

  // Field overload applies the weight pointwise.
  RealField ones(grid, 1.0);
  const double weighted = integrate_if(
      ones, [](int, int, int) { return true; },
      [](int, int, int) { return 2.0; });
  CHECK(weighted == Catch::Approx(2.0 * vol));
}
