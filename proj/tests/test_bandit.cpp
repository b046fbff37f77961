#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dpg/bandit.hpp"
#include "dpg/rng.hpp"

using namespace dpg;

TEST_CASE("bandit instance validation and basic queries") {
  CHECK_THROWS_AS(BanditInstance({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(BanditInstance({1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(BanditInstance({1.0, std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
  // Out-of-range rewards are accepted (with a warning), not rejected.
  CHECK_NOTHROW(BanditInstance({1.5, -0.5}));

  const BanditInstance b({0.1, 0.9, 1.0});
  CHECK(b.arms() == 3);
  CHECK(b.optimal_arm() == 2);
  CHECK(b.rewards_distinct());
  CHECK(b.gap(2, 0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(b.descending_order() == std::vector<int>{2, 1, 0});
  CHECK_THROWS_AS(b.reward(3), std::out_of_range);

  const BanditInstance ties({0.5, 0.5, 0.1});
  CHECK_FALSE(ties.rewards_distinct());
  CHECK(ties.optimal_arm() == 0);
  CHECK(ties.descending_order() == std::vector<int>{0, 1, 2});
}

TEST_CASE("softmax matches high-precision reference and is overflow-safe") {
  const auto pi = softmax(Logits({-1.0, 5.0, 1.0}));
  CHECK(pi[0] == doctest::Approx(0.0024282580295913372).epsilon(1e-14));
  CHECK(pi[1] == doctest::Approx(0.97962920716707947).epsilon(1e-14));
  CHECK(pi[2] == doctest::Approx(0.017942534803329194).epsilon(1e-14));

  const auto extreme = softmax(Logits({1000.0, -1000.0, 0.0}));
  CHECK(extreme[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(extreme[1] == 0.0);  // underflow is tolerated
  double sum = 0.0;
  for (int a = 0; a < 3; ++a) sum += extreme[a];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  // The floor keeps surprisal finite even for underflowed entries.
  CHECK(extreme.surprisal(1) == doctest::Approx(-std::log(1e-30)).epsilon(1e-12));
  CHECK(extreme.floored(1) == 1e-30);
}

TEST_CASE("policy simplex validation") {
  CHECK_THROWS_AS(PolicySimplex::from_probabilities({}), std::invalid_argument);
  CHECK_THROWS_AS(PolicySimplex::from_probabilities({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(PolicySimplex::from_probabilities({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(PolicySimplex::from_probabilities({0.5, 0.5 + 1e-10}), std::invalid_argument);
  CHECK_NOTHROW(PolicySimplex::from_probabilities({0.0, 1.0}));  // exact zero allowed
  const auto u = PolicySimplex::uniform(4);
  CHECK(u.arms() == 4);
  CHECK(u[3] == doctest::Approx(0.25).epsilon(1e-16));
}

TEST_CASE("value and advantages at the reference point") {
  const BanditInstance b({1.0, 0.9, 0.1});
  const auto pi = PolicySimplex::from_probabilities({0.01, 0.05, 0.94});
  CHECK(value(b, pi) == doctest::Approx(0.149).epsilon(1e-15));
  const auto u = advantages(b, pi);
  CHECK(u[0] == doctest::Approx(0.851).epsilon(1e-14));
  CHECK(u[1] == doctest::Approx(0.751).epsilon(1e-14));
  CHECK(u[2] == doctest::Approx(-0.049).epsilon(1e-13));
}

TEST_CASE("advantages are policy-centered for random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Rng r = rng.split(static_cast<std::uint64_t>(trial));
    const int k = r.uniform_int(2, 8);
    Vec rewards(static_cast<std::size_t>(k));
    for (auto& v : rewards) v = r.uniform();
    const BanditInstance b(rewards);
    const auto pi = PolicySimplex::from_probabilities(r.dirichlet_uniform(k));
    const auto u = advantages(b, pi);
    double s = 0.0;
    for (int a = 0; a < k; ++a) s += pi[a] * u[static_cast<std::size_t>(a)];
    CHECK(std::abs(s) < 1e-15);
  }
}

TEST_CASE("arm classification around a corner") {
  const BanditInstance b({1.0, 0.9, 0.1});
  const auto pi = PolicySimplex::from_probabilities({0.01, 0.05, 0.94});
  const auto c = classify_arms(b, pi, 2);
  CHECK(c.corner == 2);
  CHECK(c.epsilon == doctest::Approx(0.06).epsilon(1e-13));
  CHECK(c.allies == std::vector<int>{0, 1});
  CHECK(c.harmful.empty());

  const auto c1 = classify_arms(b, pi, 1);
  CHECK(c1.allies == std::vector<int>{0});
  CHECK(c1.harmful == std::vector<int>{2});

  // An arm tied with the corner arm lands in neither list.
  const BanditInstance tie({1.0, 0.5, 0.5});
  const auto ct = classify_arms(tie, PolicySimplex::uniform(3), 1);
  CHECK(ct.allies == std::vector<int>{0});
  CHECK(ct.harmful.empty());

  CHECK_THROWS_AS(classify_arms(b, pi, 3), std::invalid_argument);
  CHECK_THROWS_AS(classify_arms(b, PolicySimplex::uniform(2), 1), std::invalid_argument);
}

TEST_CASE("rng determinism and distribution sanity") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(7);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));

  const auto d = r.dirichlet_uniform(5);
  double ds = 0.0;
  for (double x : d) {
    CHECK(x > 0.0);
    ds += x;
  }
  CHECK(ds == doctest::Approx(1.0).epsilon(1e-12));

  // split() is pure: repeated splits agree, and child draws leave the
  // parent untouched.
  Rng parent(9);
  Rng c1 = parent.split(3);
  Rng c2 = parent.split(3);
  CHECK(c1.next_u64() == c2.next_u64());
  CHECK(parent.split(4).next_u64() != parent.split(5).next_u64());
  Rng fresh(9);
  (void)parent.split(6).next_u64();
  CHECK(parent.next_u64() == fresh.next_u64());
}
