#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dpg/verify.hpp"

using namespace dpg;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

PolicySimplex sector_spot(double eps) {
  return PolicySimplex::from_probabilities({eps / 3.0, 2.0 * eps / 3.0, 1.0 - eps});
}

}  // namespace

TEST_CASE("sector margins at pinned slice points") {
  const BanditInstance b({1.0, 0.9, 0.1});

  // Hard gate, eps = 0.01, corner 2: gap clears the bound by 14x.
  {
    const auto pi = sector_spot(0.01);
    const auto terms = logit_gap(b, pi, GateSpec::eg(), 0, 2);
    CHECK(std::abs(terms.total - 0.011112222222222222) < 1e-14);
    const double eps = 1.0 - pi[2];
    const double expected = terms.total - b.gap(0, 2) / 12.0 * eps;
    const double margin = sector_margin(b, 2, GateSpec::eg(), pi);
    CHECK(std::abs(margin - expected) < 1e-15);
    CHECK(margin > 0.0);
  }

  // Smooth gate, eps = 0.001, corner 2.
  {
    const auto pi = sector_spot(0.001);
    const auto terms = logit_gap(b, pi, GateSpec::dg(1.0), 0, 2);
    CHECK(std::abs(terms.total - 0.0011296835666043839) < 1e-14);
    const double eps = 1.0 - pi[2];
    const double expected = terms.total - b.gap(0, 2) / 24.0 * eps;
    const double margin = sector_margin(b, 2, GateSpec::dg(1.0), pi);
    CHECK(std::abs(margin - expected) < 1e-15);
    CHECK(margin > 0.0);
  }

  CHECK_THROWS_AS(sector_margin(b, 2, GateSpec::pg(), sector_spot(0.01)), std::invalid_argument);
  CHECK_THROWS_AS(sector_margin(b, 0, GateSpec::eg(), sector_spot(0.01)), std::invalid_argument);
}

TEST_CASE("sector slice sampling respects the floor and the slice") {
  const BanditInstance b({1.0, 0.9, 0.1});
  Rng rng(31);
  const double eps = 0.05;
  for (int i = 0; i < 200; ++i) {
    const auto pi = sample_sector_point(b, 2, eps, rng);
    CHECK(pi[2] == 1.0 - eps);
    CHECK(std::abs(pi[0] + pi[1] - eps) < 1e-15);
    CHECK(pi[0] >= eps / 3.0);
  }
  CHECK_THROWS_AS(sample_sector_point(b, 0, 0.05, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_sector_point(b, 2, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_sector_point(b, 2, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_sector_point(b, 3, 0.05, rng), std::invalid_argument);
}

TEST_CASE("shell checks on a clean corner find no violations") {
  const BanditInstance b({1.0, 0.9, 0.1});
  Rng rng(4242);
  const auto rep = check_sector_bound(b, 2, GateSpec::eg(), {0.01, 0.1, 0.005}, 400, rng);
  CHECK(rep.gate == "eg");
  CHECK(rep.corner == 2);
  CHECK(std::abs(rep.bound_coeff - 0.9 / 12.0) < 1e-16);
  REQUIRE(rep.shells.size() == 3);
  CHECK(rep.shells[0].eps == 0.1);  // sorted descending
  CHECK(rep.shells[1].eps == 0.01);
  CHECK(rep.shells[2].eps == 0.005);
  for (const auto& shell : rep.shells) {
    CHECK(shell.samples == 400);
    CHECK(shell.violations == 0);
    CHECK(shell.worst_margin > 0.0);
    CHECK(shell.witness.size() == 3);
  }
  CHECK(rep.eps0_lower == 0.1);
  CHECK(rep.eps0_upper == kInf);
  CHECK(rep.bracket_found);

  CHECK_THROWS_AS(check_sector_bound(b, 2, GateSpec::eg(), {}, 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(check_sector_bound(b, 2, GateSpec::eg(), {0.1}, 0, rng), std::invalid_argument);
}

TEST_CASE("adaptive bracketing walks the geometric ladder") {
  const BanditInstance b({1.0, 0.9, 0.1});
  Rng rng(99);
  // Corner 1 of this instance satisfies the hard-gate bound on every
  // ladder shell from 0.2 down, so the ladder stops at its minimum depth.
  const auto rep = bracket_sector_bound(b, 1, GateSpec::eg(), 600, rng);
  REQUIRE(rep.shells.size() == 6);
  double eps = 0.2;
  for (const auto& shell : rep.shells) {
    CHECK(shell.eps == eps);
    CHECK(shell.violations == 0);
    CHECK(shell.samples == 600);
    eps *= 0.4;
  }
  CHECK(rep.eps0_lower == 0.2);
  CHECK(rep.eps0_upper == kInf);
  CHECK(rep.bracket_found);

  CHECK_THROWS_AS(bracket_sector_bound(b, 1, GateSpec::eg(), 10, rng, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bracket_sector_bound(b, 1, GateSpec::eg(), 10, rng, 0.2, 0.5),
                  std::invalid_argument);
}

TEST_CASE("vanishing temperature reduces the smooth gate to the hard one") {
  const BanditInstance b({1.0, 0.9, 0.1});
  const GateSpec cold = GateSpec::dg(1e-8);
  for (const Vec& pv : {Vec{0.2, 0.3, 0.5}, Vec{0.05, 0.05, 0.9}, Vec{0.6, 0.3, 0.1}}) {
    const auto pi = PolicySimplex::from_probabilities(pv);
    const auto d_cold = drift_at(b, pi, cold);
    const auto d_hard = drift_at(b, pi, GateSpec::eg());
    for (std::size_t a = 0; a < 3; ++a) CHECK(std::abs(d_cold[a] - d_hard[a]) < 1e-15);
    // Equal gap totals with a coefficient half as large: the smooth-gate
    // margin can only be wider here.
    CHECK(sector_margin(b, 2, cold, pi) >= sector_margin(b, 2, GateSpec::eg(), pi));
  }
}

TEST_CASE("harmful-arm gate weights stay below the polynomial envelope") {
  Rng rng(606);
  const auto rep = check_poly_suppression(2000, rng);
  CHECK(rep.samples == 2000);
  CHECK(rep.violations == 0);
  CHECK(rep.worst_margin >= 0.0);
  CHECK(rep.product_samples > 0);
  CHECK(rep.product_violations == 0);
  CHECK(rep.product_worst_margin >= 0.0);
  CHECK_THROWS_AS(check_poly_suppression(0, rng), std::invalid_argument);
}

TEST_CASE("grid region map structure") {
  const BanditInstance b({1.0, 0.9, 0.1});
  const auto map = map_bad_region(b, GateSpec::pg(), 1, 10, {0.001});
  CHECK(map.resolution == 10);
  CHECK(map.cells == 45);
  REQUIRE(map.shells.size() == 1);
  CHECK(map.shells[0].cells == 1);  // only the innermost cell reaches 0.001

  CHECK_THROWS_AS(map_bad_region(BanditInstance({1.0, 0.0}), GateSpec::pg(), 1, 10, {0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(map_bad_region(b, GateSpec::pg(), 0, 10, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(map_bad_region(b, GateSpec::pg(), 1, 1, {0.1}), std::invalid_argument);
}

TEST_CASE("gating shrinks the adverse region near the second-best corner") {
  const BanditInstance b({1.0, 0.9, 0.1});
  const std::vector<double> shells{0.1, 0.01, 0.001};

  const auto pg = map_bad_region(b, GateSpec::pg(), 1, 100, shells);
  CHECK(pg.cells == 4950);
  CHECK(pg.bad == 1781);
  REQUIRE(pg.shells.size() == 3);
  CHECK(pg.shells[0].cells == 55);
  CHECK(pg.shells[0].bad == 44);  // the leading-order 4:1 frontier gives 0.8
  CHECK(pg.shells[1].cells == 1);
  CHECK(pg.shells[1].bad == 1);
  CHECK(pg.shells[2].bad == 1);

  const auto eg = map_bad_region(b, GateSpec::eg(), 1, 100, shells);
  CHECK(eg.bad == 1155);
  CHECK(eg.shells[0].bad == 9);
  CHECK(eg.shells[1].bad == 0);
  CHECK(eg.shells[2].bad == 0);

  const auto dg = map_bad_region(b, GateSpec::dg(1.0), 1, 100, shells);
  CHECK(dg.bad == 1378);
  CHECK(dg.shells[0].bad == 20);
  CHECK(dg.shells[1].bad == 0);
  CHECK(dg.shells[2].bad == 0);

  // Both gates clear the deep shells that keep the ungated flow trapped.
  CHECK(eg.shells[0].fraction < pg.shells[0].fraction);
  CHECK(dg.shells[0].fraction < pg.shells[0].fraction);
}

TEST_CASE("sampled region map shows the smooth gate lagging the hard one") {
  const BanditInstance b({1.0, 0.9, 0.1});
  Rng rng_eg(7171);
  Rng rng_dg(7171);
  const std::vector<double> shells{0.1, 0.01};
  const auto eg = map_bad_region_sampled(b, GateSpec::eg(), 1, shells, 20000, rng_eg);
  const auto dg = map_bad_region_sampled(b, GateSpec::dg(1.0), 1, shells, 20000, rng_dg);
  REQUIRE(eg.shells.size() == 2);
  REQUIRE(dg.shells.size() == 2);
  for (const auto& m : {eg, dg})
    for (const auto& shell : m.shells) {
      CHECK(shell.cells == 20000);
      CHECK(shell.fraction > 0.0);
    }
  // The hard gate's adverse fraction shrinks faster as the shell tightens.
  const double ratio_wide = dg.shells[0].fraction / eg.shells[0].fraction;
  const double ratio_tight = dg.shells[1].fraction / eg.shells[1].fraction;
  CHECK(ratio_wide > 1.0);
  CHECK(ratio_tight >= 1.3 * ratio_wide);
  CHECK(eg.shells[1].fraction < eg.shells[0].fraction);

  CHECK_THROWS_AS(map_bad_region_sampled(b, GateSpec::eg(), 0, shells, 10, rng_eg),
                  std::invalid_argument);
  CHECK_THROWS_AS(map_bad_region_sampled(b, GateSpec::eg(), 1, shells, 0, rng_eg),
                  std::invalid_argument);
}

TEST_CASE("straight-line fits recover exact coefficients") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> y;
  for (double xi : x) y.push_back(3.0 * xi + 7.0);
  const auto fit = linear_fit(x, y);
  CHECK(std::abs(fit.slope - 3.0) < 1e-12);
  CHECK(std::abs(fit.intercept - 7.0) < 1e-12);
  CHECK(fit.r_squared >= 1.0 - 1e-12);

  std::vector<double> p;
  for (double xi : x) p.push_back(5.0 * xi * xi);
  const auto ll = loglog_fit(x, p);
  CHECK(std::abs(ll.slope - 2.0) < 1e-12);
  CHECK(std::abs(ll.intercept - std::log(5.0)) < 1e-12);

  CHECK_THROWS_AS(linear_fit({1.0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(linear_fit({1.0, 2.0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(linear_fit({2.0, 2.0}, {1.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(loglog_fit({-1.0, 2.0}, {1.0, 3.0}), std::invalid_argument);
}

TEST_CASE("rate fits separate reciprocal from exponential decay") {
  std::vector<double> reciprocal, exponential;
  for (int t = 0; t < 100; ++t) {
    reciprocal.push_back(1.0 / (3.0 * t + 7.0));
    exponential.push_back(std::exp(-0.1 * t));
  }
  const auto rec = fit_rate(reciprocal);
  CHECK(std::abs(rec.slope - 3.0) < 1e-9);
  CHECK(std::abs(rec.intercept - 7.0) < 1e-6);
  CHECK(rec.r_squared >= 1.0 - 1e-12);
  CHECK(rec.t0 == 50);
  CHECK_FALSE(rec.super_reciprocal);

  const auto exp_fit = fit_rate(exponential);
  CHECK(exp_fit.super_reciprocal);

  CHECK_THROWS_AS(fit_rate(std::vector<double>(10, 1.0)), std::invalid_argument);
  std::vector<double> dies(100, 1.0);
  dies[80] = 0.0;
  CHECK_THROWS_AS(fit_rate(dies), std::invalid_argument);
}
