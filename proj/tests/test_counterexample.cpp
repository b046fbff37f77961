#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dpg/counterexample.hpp"

using namespace dpg;

namespace {

const SharedParamInstance kDefault{};

}  // namespace

TEST_CASE("ungated and hard-gated gradients match their closed forms") {
  for (double p = 0.05; p < 0.96; p += 0.05) {
    // Ungated: both contexts pull through, the poisoned context dominates.
    CHECK(std::abs(f_pg(kDefault, p) - (-45.0 * p * (1.0 - p))) < 1e-12);
    // Hard gate: only positive-advantage terms survive in each context.
    CHECK(std::abs(f_eg(kDefault, p) - 5.0 * p * (1.0 - p) * (1.0 - 11.0 * p)) < 1e-12);
  }
}

TEST_CASE("smooth gate values at pinned points") {
  CHECK(std::abs(f_dg(kDefault, 0.05, 1.0) - 0.16453897805545962) < 1e-12);
  CHECK(std::abs(f_dg(kDefault, 0.116, 1.0) - 0.00092643835843057041) < 1e-12);
  CHECK(std::abs(f_dg(kDefault, 0.5, 1.0) - (-5.625)) < 1e-12);
}

TEST_CASE("vanishing temperature recovers the hard gate") {
  for (double p = 0.05; p < 0.96; p += 0.05)
    CHECK(std::abs(f_dg(kDefault, p, 1e-6) - f_eg(kDefault, p)) < 1e-15);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(f_pg(kDefault, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(f_pg(kDefault, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(f_pg(kDefault, -0.5), std::invalid_argument);
  SharedParamInstance bad = kDefault;
  bad.branch = 1.5;
  CHECK_THROWS_AS(f_pg(bad, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(find_fixed_points([](double) { return 1.0; }, 1), std::invalid_argument);
  CHECK_THROWS_AS(find_fixed_points([](double) { return 1.0; }, 100, 0.5, 0.5),
                  std::invalid_argument);
}

TEST_CASE("hard gate creates a unique stable interior attractor") {
  const auto rep =
      find_fixed_points([](double p) { return f_eg(kDefault, p); });
  REQUIRE(rep.roots.size() == 1);
  const auto& root = rep.roots[0];
  CHECK(std::abs(root.p - 1.0 / 11.0) < 1e-9);
  CHECK(root.stable);
  CHECK(std::abs(root.f_value) < 1e-10);
  CHECK_FALSE(rep.negative_on_grid);

  // Slope at the attractor: d/dp of 5p(1-p)(1-11p) at p = 1/11.
  const double h = 1e-6;
  const double num =
      (f_eg(kDefault, 1.0 / 11.0 + h) - f_eg(kDefault, 1.0 / 11.0 - h)) / (2.0 * h);
  CHECK(std::abs(num - (-50.0 / 11.0)) < 1e-6);
  CHECK(std::abs(root.f_prime - (-50.0 / 11.0)) < 1e-3);
}

TEST_CASE("ungated gradient is negative everywhere") {
  const auto rep =
      find_fixed_points([](double p) { return f_pg(kDefault, p); });
  CHECK(rep.roots.empty());
  CHECK(rep.negative_on_grid);
  CHECK(rep.grid_max < 0.0);
  CHECK(std::abs(rep.grid_max - (-45.0 * 0.001 * 0.999)) < 1e-12);
  CHECK(std::abs(rep.grid_min - (-11.25)) < 1e-12);
}

TEST_CASE("smooth gate shifts the attractor slightly outward") {
  const auto rep =
      find_fixed_points([](double p) { return f_dg(kDefault, p, 1.0); });
  REQUIRE(rep.roots.size() == 1);
  const auto& root = rep.roots[0];
  CHECK(std::abs(root.p - 0.11613604562185937) < 1e-9);
  CHECK(root.stable);
  CHECK(std::abs(root.f_prime - (-6.8185405047835375)) < 1e-4);
}

TEST_CASE("flipping the poisoned reward removes the attractor") {
  SharedParamInstance flipped = kDefault;
  flipped.r_bad = 100.0;
  for (double p = 0.05; p < 0.96; p += 0.05)
    CHECK(std::abs(f_eg(flipped, p) - 55.0 * p * (1.0 - p) * (1.0 - p)) < 1e-12);
  CHECK(std::abs(f_eg(flipped, 0.3) - 8.085) < 1e-12);
  const auto rep =
      find_fixed_points([&](double p) { return f_eg(flipped, p); });
  CHECK(rep.roots.empty());
  CHECK_FALSE(rep.negative_on_grid);
  CHECK(rep.grid_min > 0.0);
}

TEST_CASE("grid zeros and bisection both locate synthetic roots") {
  const auto rep = find_fixed_points(
      [](double x) { return (x - 0.3) * (0.7 - x); }, 1000, 0.0, 1.0);
  REQUIRE(rep.roots.size() == 2);
  CHECK(rep.roots[0].p == 0.3);  // exact grid hit
  CHECK_FALSE(rep.roots[0].stable);
  CHECK(rep.roots[1].p == 0.7);
  CHECK(rep.roots[1].stable);
  CHECK(std::abs(rep.roots[0].f_prime - 0.4) < 1e-6);
  CHECK(std::abs(rep.roots[1].f_prime - (-0.4)) < 1e-6);
}
