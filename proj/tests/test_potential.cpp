#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eiklab/potential.hpp"

using namespace eiklab;

namespace {

PotentialSpec long_range_spec() {
  PotentialSpec s;
  s.family = "long_range";
  s.mu = 0.1;
  s.delta = 0.5;
  return s;
}

}  // namespace

TEST_CASE("long-range profile matches frozen reference values", "[potential]") {
  // Reference values computed with 30-digit arithmetic for
  // p(r) = 0.1 * (1 + r^2)^(-1.25) at r = 2.
  auto pot = make_potential(long_range_spec());
  CHECK(pot.p_of_r(2.0) == Catch::Approx(0.01337480609952844).epsilon(1e-14));
  CHECK(pot.dp_of_r(2.0) == Catch::Approx(-0.01337480609952844).epsilon(1e-14));
  CHECK(pot.d2p_of_r(2.0) == Catch::Approx(0.017387247929386973).epsilon(1e-13));
  CHECK(pot.d3p_of_r(2.0) == Catch::Approx(-0.026482116077066312).epsilon(1e-13));
  CHECK(pot.p_of_r(0.0) == Catch::Approx(0.1).epsilon(1e-15));
  CHECK(pot.dp_of_r(0.0) == 0.0);
  CHECK(pot.p_infinity() == 0.0);
}

TEST_CASE("analytic radial derivatives agree with central differences", "[potential]") {
  auto pot = make_potential(long_range_spec());
  const double hh = 1e-4;
  for (double r : {0.3, 1.0, 2.7, 6.0}) {
    const double d1 = (pot.p_of_r(r + hh) - pot.p_of_r(r - hh)) / (2 * hh);
    const double d2 = (pot.p_of_r(r + hh) - 2 * pot.p_of_r(r) + pot.p_of_r(r - hh)) / (hh * hh);
    const double d3 = (pot.d2p_of_r(r + hh) - pot.d2p_of_r(r - hh)) / (2 * hh);
    CHECK(pot.dp_of_r(r) == Catch::Approx(d1).margin(1e-7));
    CHECK(pot.d2p_of_r(r) == Catch::Approx(d2).margin(1e-6));
    CHECK(pot.d3p_of_r(r) == Catch::Approx(d3).margin(1e-6));
  }
}

TEST_CASE("short-range profile matches frozen reference value", "[potential]") {
  PotentialSpec s;
  s.family = "short_range";
  s.nu = 0.2;
  s.delta = 0.5;
  auto pot = make_potential(s);
  // 0.2 * (1 + 4)^(-1.75) at r = 2, 30-digit arithmetic.
  CHECK(pot.q_of_r(2.0) == Catch::Approx(0.011962790249769764).epsilon(1e-14));
  CHECK(pot.p_of_r(2.0) == 0.0);
}

TEST_CASE("gradient of p points inward along x", "[potential]") {
  auto pot = make_potential(long_range_spec());
  const std::array<double, 3> x{1.0, 2.0, -2.0};
  auto g = pot.grad_p(x);
  const double r = 3.0, want = pot.dp_of_r(r) / r;
  CHECK(g[0] == Catch::Approx(want * 1.0));
  CHECK(g[1] == Catch::Approx(want * 2.0));
  CHECK(g[2] == Catch::Approx(want * -2.0));
  auto g0 = pot.grad_p({0.0, 0.0, 0.0});
  CHECK(g0[0] == 0.0);
}

TEST_CASE("spec validation rejects bad input", "[potential]") {
  PotentialSpec s = long_range_spec();
  s.family = "short_rnage";  // typo'd id must not silently mean anything
  CHECK_THROWS_AS(make_potential(s), std::invalid_argument);
  s = long_range_spec();
  s.dim = 2;
  CHECK_THROWS_AS(make_potential(s), std::invalid_argument);
  s = long_range_spec();
  s.delta = 0.0;
  CHECK_THROWS_AS(make_potential(s), std::invalid_argument);
  s = PotentialSpec{};
  s.family = "tabulated";
  s.table_r = {0.0, 1.0, 2.0};
  s.table_p = {1.0, 0.5, 0.2};
  CHECK_THROWS_AS(make_potential(s), std::invalid_argument);  // too few samples
  s.table_r = {0.0, 1.0, 0.5, 2.0};
  s.table_p = {1.0, 0.5, 0.7, 0.2};
  CHECK_THROWS_AS(make_potential(s), std::invalid_argument);  // radii not increasing
}

TEST_CASE("tabulated family reproduces its generator", "[potential]") {
  PotentialSpec gen = long_range_spec();
  auto exact = make_potential(gen);
  PotentialSpec s;
  s.family = "tabulated";
  s.delta = 0.5;
  for (int i = 0; i <= 400; ++i) {
    const double r = i * 0.05;
    s.table_r.push_back(r);
    s.table_p.push_back(exact.p_of_r(r));
  }
  auto tab = make_potential(s);
  for (double r : {0.12, 1.03, 4.98, 13.7, 19.9}) {
    CHECK(tab.p_of_r(r) == Catch::Approx(exact.p_of_r(r)).margin(1e-8));
  }
  // Beyond the table: power-law continuation with the declared decay rate.
  const double r_out = 40.0;
  const double want = exact.p_of_r(20.0) * std::pow(20.0 / r_out, 2.5);
  CHECK(tab.p_of_r(r_out) == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("decay audit passes an honestly declared potential", "[potential]") {
  PotentialSpec s = long_range_spec();
  s.nu = 0.05;
  s.family = "long_short";
  auto pot = make_potential(s);
  auto rep = validate_decay(pot, {0, 1, 2, 3}, {4.0, 8.0, 16.0, 32.0, 64.0, 128.0});
  CHECK_FALSE(rep.violation);
  CHECK(rep.worst_trend < 0.15);
  // The order-0 weighted sup levels off at the amplitude, never exceeding it.
  for (const auto& row : rep.p_rows)
    if (row.order == 0) CHECK(row.value <= 0.1 * (1 + 1e-9));
}

TEST_CASE("decay audit flags a potential declaring more decay than it has", "[potential]") {
  // Samples of a (2 + 0.25)-rate tail declared as delta = 0.75: the weighted
  // sup then grows like r^0.5 and the audit must notice.
  PotentialSpec gen;
  gen.family = "long_range";
  gen.mu = 0.1;
  gen.delta = 0.25;
  auto slow = make_potential(gen);
  PotentialSpec s;
  s.family = "tabulated";
  s.delta = 0.75;
  for (int i = 0; i <= 800; ++i) {
    const double r = i * 0.25;  // table reaches r = 200, past every audited radius
    s.table_r.push_back(r);
    s.table_p.push_back(slow.p_of_r(r));
  }
  auto lying = make_potential(s);
  auto rep = validate_decay(lying, {0}, {8.0, 16.0, 32.0, 64.0, 128.0});
  CHECK(rep.violation);
  CHECK(rep.worst_trend == Catch::Approx(0.5).margin(0.15));
}

TEST_CASE("decay audit input validation", "[potential]") {
  auto pot = make_potential(long_range_spec());
  CHECK_THROWS_AS(validate_decay(pot, {4}, {2.0, 4.0, 8.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_decay(pot, {0}, {2.0, -4.0}), std::invalid_argument);
}

TEST_CASE("bump source has unit peak and a hard cutoff", "[potential]") {
  BumpSource bump;
  bump.amplitude = 3.0;
  bump.radius = 0.5;
  CHECK(bump({0.0, 0.0, 0.0}) == Catch::Approx(3.0));
  CHECK(bump({bump.cutoff() + 1e-9, 0.0, 0.0}) == 0.0);
  CHECK(bump({0.5, 0.0, 0.0}) == Catch::Approx(3.0 * std::exp(-1.0)));

  auto grid = Grid3::cube(2.0, 16);
  auto f = sample_source(bump, grid);
  CHECK(f.at(grid.center(), grid.center(), grid.center()) == Catch::Approx(3.0));
  CHECK(f.at(0, 0, 0) == 0.0);  // corner is far outside the cutoff
}
