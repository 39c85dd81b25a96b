#include "isomarket/onep.hpp"

#include <cmath>
#include <doctest.h>

#include "oracles.hpp"

using namespace isomarket;
using finprob::FiniteSpace;
using finprob::MultiMeasureSpace;
using finprob::Payoff;
using onep::CompleteMarket1P;

namespace {

CompleteMarket1P make_market(std::vector<double> p0, std::vector<double> q,
                             double scale_c = 1.0) {
  CompleteMarket1P market;
  market.space.base = FiniteSpace::from_weights(std::move(p0));
  market.space.extra_measures = {std::move(q)};
  market.scale_c = scale_c;
  return market;
}

}  // namespace

TEST_CASE("price is scale_C times the Q expectation") {
  const auto market = make_market({0.5, 0.5}, {0.25, 0.75}, 1.25);
  CHECK(onep::price(market, Payoff{{1.0, 1.0}}) ==
        doctest::Approx(1.25).epsilon(1e-15));

  const auto unit = make_market({0.5, 0.5}, {0.25, 0.75}, 1.0);
  CHECK(onep::price(unit, Payoff{{4.0, 0.0}}) ==
        doctest::Approx(1.0).epsilon(1e-15));

  // Arbitrage-free sign: nonnegative nonzero payoffs cost something.
  CHECK(onep::price(unit, Payoff{{0.0, 0.5}}) > 0.0);

  CHECK_THROWS_AS(onep::price(unit, Payoff{{1.0}}), InvalidInput);
}

TEST_CASE("classification invariant merges rn classes") {
  const auto casino = make_market({0.4, 0.6}, {0.4, 0.6});
  const auto invariant = onep::classification_invariant(casino.space);
  REQUIRE(invariant.entries.size() == 1);
  CHECK(invariant.entries[0].rn_vector[0] == doctest::Approx(1.0));
  CHECK(invariant.entries[0].mass == doctest::Approx(1.0));
  CHECK(invariant.entries[0].profile.atom_masses ==
        std::vector<double>{0.6, 0.4});
  CHECK(invariant.entries[0].profile.continuous_mass == 0.0);
}

TEST_CASE("invariants are relabeling invariant and separate distinct markets") {
  testing::TestRng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const auto space = testing::random_space(rng, 2 + rng.index(6), 1);
    const auto twin = testing::permuted_copy(rng, space);
    CHECK(onep::invariants_equal(onep::classification_invariant(space),
                                 onep::classification_invariant(twin)));
  }

  const auto a = make_market({0.5, 0.5}, {0.25, 0.75});
  const auto b = make_market({0.5, 0.5}, {0.3, 0.7});
  CHECK_FALSE(onep::invariants_equal(onep::classification_invariant(a.space),
                                     onep::classification_invariant(b.space)));
  CHECK_FALSE(
      testing::exhaustive_jointly_isomorphic(a.space, b.space).has_value());
}

TEST_CASE("jointly_isomorphic returns a measure-preserving bijection") {
  const auto a = make_market({0.5, 0.5}, {0.25, 0.75});
  const auto b = make_market({0.5, 0.5}, {0.75, 0.25});
  const auto bijection = onep::jointly_isomorphic(a.space, b.space);
  REQUIRE(bijection.has_value());
  for (const auto& [i, j] : *bijection) {
    CHECK(a.space.base.weights[i] == doctest::Approx(b.space.base.weights[j]));
    CHECK(a.space.extra_measures[0][i] ==
          doctest::Approx(b.space.extra_measures[0][j]));
  }

  const auto self = onep::jointly_isomorphic(a.space, a.space);
  REQUIRE(self.has_value());
  for (const auto& [i, j] : *self) CHECK(i == j);

  CHECK_FALSE(onep::jointly_isomorphic(
                  a.space, make_market({0.5, 0.5}, {0.3, 0.7}).space)
                  .has_value());
}

TEST_CASE("jointly_isomorphic agrees with the exhaustive oracle") {
  testing::TestRng rng(47);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 2 + rng.index(7);
    const auto a = testing::random_space(rng, n, 1 + rng.index(2), true);
    MultiMeasureSpace b;
    if (rep % 2 == 0) {
      b = testing::permuted_copy(rng, a);
    } else {
      b = testing::random_space(rng, n, a.measure_count(), true);
    }
    const bool fast = onep::jointly_isomorphic(a, b).has_value();
    const bool brute = testing::exhaustive_jointly_isomorphic(a, b).has_value();
    CHECK(fast == brute);
  }
}

TEST_CASE("quantile_market sorts the density into a step function") {
  const auto market = make_market({0.5, 0.5}, {0.25, 0.75}, 1.0);
  const auto quantile = onep::quantile_market(market);
  REQUIRE(quantile.step_count() == 2);
  CHECK(quantile.breakpoints == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(quantile.rn_values[0] == doctest::Approx(0.5));
  CHECK(quantile.rn_values[1] == doctest::Approx(1.5));

  const auto casino = make_market({0.3, 0.7}, {0.3, 0.7}, 2.0);
  const auto flat = onep::quantile_market(casino);
  REQUIRE(flat.step_count() == 1);
  CHECK(flat.rn_values[0] == doctest::Approx(1.0));

  // price of the constant payoff is scale_C in both pictures
  const std::vector<double> unit(quantile.step_count(), 1.0);
  CHECK(quantile.price_step_payoff(unit) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(flat.price_step_payoff({1.0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(flat.price_function([](double) { return 1.0; }) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("quantile market preserves prices of step payoffs") {
  testing::TestRng rng(53);
  for (int rep = 0; rep < 100; ++rep) {
    CompleteMarket1P market;
    market.space = testing::random_space(rng, 2 + rng.index(9), 1);
    market.scale_c = rng.uniform(0.5, 1.5);
    const auto quantile = onep::quantile_market(market);

    std::vector<double> step_values(quantile.step_count());
    for (double& v : step_values) v = rng.uniform(-2.0, 2.0);

    // Map the step payoff back to atoms through the atom's quantile position.
    const auto q = finprob::rn_derivative(market.space, 1);
    Payoff payoff;
    payoff.values.resize(market.space.atom_count(), 0.0);
    for (std::size_t a = 0; a < market.space.atom_count(); ++a) {
      if (market.space.base.weights[a] <= 0.0) continue;
      for (std::size_t s = 0; s < quantile.step_count(); ++s)
        if (std::fabs(quantile.rn_values[s] - q[a]) <= 1e-9) {
          payoff.values[a] = step_values[s];
          break;
        }
    }
    const double direct = onep::price(market, payoff);
    const double via_quantile = quantile.price_step_payoff(step_values);
    CHECK(std::fabs(direct - via_quantile) <= 1e-10);
  }
}

TEST_CASE("casino equivalence identifies refinements and separates laws") {
  const auto coarse = make_market({0.5, 0.5}, {0.25, 0.75}, 1.0);
  const auto refined = make_market({0.25, 0.25, 0.25, 0.25},
                                   {0.125, 0.125, 0.375, 0.375}, 1.0);
  CHECK(onep::isomorphic_up_to_casino(coarse, refined));

  const auto other_scale = make_market({0.5, 0.5}, {0.25, 0.75}, 2.0);
  CHECK_FALSE(onep::isomorphic_up_to_casino(coarse, other_scale));

  const auto other_law = make_market({0.5, 0.5}, {0.3, 0.7}, 1.0);
  CHECK_FALSE(onep::isomorphic_up_to_casino(coarse, other_law));
  CHECK(onep::casino_equivalence(coarse, other_law) ==
        onep::CasinoEquivalence::distinct);
}

TEST_CASE("near-tolerance law gaps are flagged indeterminate, not guessed") {
  const auto market = make_market({0.5, 0.5}, {0.25, 0.75}, 1.0);
  const double nudge = 2.5e-10;  // L1 gap lands between tol and 10 tol
  const auto nudged =
      make_market({0.5, 0.5}, {0.25 + nudge, 0.75 - nudge}, 1.0);
  CHECK(onep::casino_equivalence(market, nudged) ==
        onep::CasinoEquivalence::indeterminate);
  CHECK_FALSE(onep::isomorphic_up_to_casino(market, nudged));
}

TEST_CASE("casino equivalence is stable under product_with_casino") {
  testing::TestRng rng(59);
  for (int rep = 0; rep < 10; ++rep) {
    CompleteMarket1P market;
    market.space = testing::random_space(rng, 2 + rng.index(5), 1);
    market.scale_c = rng.uniform(0.5, 1.5);
    for (std::size_t grid : {2, 5, 16}) {
      CompleteMarket1P product{
          finprob::product_with_casino(market.space, grid), market.scale_c};
      CHECK(onep::isomorphic_up_to_casino(market, product));
    }
  }
}

TEST_CASE("casino product refines the invariant profile by K") {
  testing::TestRng rng(61);
  const auto space = testing::random_space(rng, 5, 1);
  const std::size_t grid = 3;
  const auto refined_inv =
      onep::classification_invariant(finprob::product_with_casino(space, grid));
  const auto base_inv = onep::classification_invariant(space);
  REQUIRE(refined_inv.entries.size() == base_inv.entries.size());
  onep::ClassificationInvariant expected = base_inv;
  for (auto& entry : expected.entries) entry.profile = entry.profile.refined(grid);
  CHECK(onep::invariants_equal(refined_inv, expected));
}

TEST_CASE("project_onto_q is the conditional mean over rn classes") {
  const auto injective = make_market({0.5, 0.5}, {0.25, 0.75});
  const Payoff payoff{{3.0, -1.0}};
  CHECK(onep::project_onto_q(injective.space, payoff).values == payoff.values);

  const auto tied = make_market({0.5, 0.5}, {0.5, 0.5});
  const auto projected = onep::project_onto_q(tied.space, Payoff{{0.0, 2.0}});
  CHECK(projected.values[0] == doctest::Approx(1.0));
  CHECK(projected.values[1] == doctest::Approx(1.0));
}

TEST_CASE("project_onto_q preserves every measure's expectation") {
  MultiMeasureSpace space;
  space.base = FiniteSpace::from_weights({0.25, 0.25, 0.25, 0.25});
  space.extra_measures = {{0.125, 0.125, 0.375, 0.375}};
  const Payoff payoff{{1.0, 3.0, -2.0, 4.0}};
  const auto projected = onep::project_onto_q(space, payoff);

  for (std::size_t m = 0; m <= 1; ++m) {
    double before = 0.0, after = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      before += space.measure(m)[a] * payoff.values[a];
      after += space.measure(m)[a] * projected.values[a];
    }
    CHECK(std::fabs(before - after) <= 1e-12);
  }

  const auto twice = onep::project_onto_q(space, projected);
  for (std::size_t a = 0; a < 4; ++a)
    CHECK(std::fabs(twice.values[a] - projected.values[a]) <= 1e-12);
}
