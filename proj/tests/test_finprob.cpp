#include "isomarket/finprob.hpp"

#include <algorithm>
#include <doctest.h>
#include <numeric>

#include "oracles.hpp"

using namespace isomarket;
using finprob::FiniteSpace;
using finprob::MultiMeasureSpace;
using finprob::Payoff;
using finprob::Permutation;

namespace {

MultiMeasureSpace make_space(std::vector<double> p0,
                             std::vector<std::vector<double>> extras = {}) {
  MultiMeasureSpace space;
  space.base = FiniteSpace::from_weights(std::move(p0));
  space.extra_measures = std::move(extras);
  return space;
}

}  // namespace

TEST_CASE("validate_space accepts and rejects per the invariants") {
  CHECK(finprob::validate_space(make_space({0.5, 0.5})).pass);

  const auto bad_mass = finprob::validate_space(make_space({0.5, 0.6}));
  CHECK_FALSE(bad_mass.pass);
  REQUIRE_FALSE(bad_mass.violations.empty());
  CHECK(bad_mass.violations.front().find("mass") != std::string::npos);

  const auto bad_equiv =
      finprob::validate_space(make_space({0.0, 1.0}, {{0.5, 0.5}}));
  CHECK_FALSE(bad_equiv.pass);
  CHECK(bad_equiv.violations.front().find("equivalence violated at atom 0") !=
        std::string::npos);

  // Jointly null atoms are allowed.
  CHECK(finprob::validate_space(make_space({0.0, 1.0}, {{0.0, 1.0}})).pass);
}

TEST_CASE("rn_derivative computes per-atom ratios") {
  const auto space = make_space({0.5, 0.5}, {{0.25, 0.75}});
  const auto q = finprob::rn_derivative(space, 1);
  CHECK(q[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(1.5).epsilon(1e-14));

  const auto identity = make_space({0.3, 0.7}, {{0.3, 0.7}});
  const auto q_id = finprob::rn_derivative(identity, 1);
  CHECK(q_id[0] == 1.0);
  CHECK(q_id[1] == 1.0);

  const auto three = make_space({0.2, 0.3, 0.5}, {{0.1, 0.3, 0.6}});
  const auto q3 = finprob::rn_derivative(three, 1);
  CHECK(q3[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(q3[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q3[2] == doctest::Approx(1.2).epsilon(1e-14));
  double expectation = 0.0;
  for (std::size_t a = 0; a < 3; ++a)
    expectation += three.base.weights[a] * q3[a];
  CHECK(std::fabs(expectation - 1.0) <= 1e-10);

  CHECK_THROWS_AS(finprob::rn_derivative(three, 2), InvalidInput);
  CHECK_THROWS_AS(finprob::rn_derivative(three, 0), InvalidInput);
}

TEST_CASE("rn expectation identity holds on random spaces") {
  testing::TestRng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto space = testing::random_space(rng, 2 + rng.index(7), 2, true);
    for (std::size_t m = 1; m <= 2; ++m) {
      const auto q = finprob::rn_derivative(space, m);
      double expectation = 0.0;
      for (std::size_t a = 0; a < space.atom_count(); ++a)
        expectation += space.base.weights[a] * q[a];
      CHECK(std::fabs(expectation - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("mod0_isomorphic matches weight multisets and ignores null atoms") {
  const auto a = FiniteSpace::from_weights({0.3, 0.7});
  const auto b = FiniteSpace::from_weights({0.7, 0.3});
  const auto swap = finprob::mod0_isomorphic(a, b);
  REQUIRE(swap.has_value());
  CHECK(swap->size() == 2);
  for (const auto& [i, j] : *swap) CHECK(a.weights[i] == b.weights[j]);

  const auto mod0 = finprob::mod0_isomorphic(
      FiniteSpace::from_weights({0.3, 0.7, 0.0}), FiniteSpace::from_weights({0.3, 0.7}));
  REQUIRE(mod0.has_value());
  CHECK(mod0->size() == 2);

  CHECK_FALSE(finprob::mod0_isomorphic(FiniteSpace::from_weights({0.3, 0.7}),
                                       FiniteSpace::from_weights({0.4, 0.6}))
                  .has_value());
}

TEST_CASE("mod0_isomorphic is an equivalence relation on random batches") {
  testing::TestRng rng(23);
  std::vector<FiniteSpace> batch;
  for (int i = 0; i < 12; ++i)
    batch.push_back(testing::random_space(rng, 2 + rng.index(7), 0, true).base);
  // include a permuted twin so symmetry/transitivity bites
  batch.push_back(
      testing::permuted_copy(rng, make_space(batch.front().weights)).base);

  auto related = [](const FiniteSpace& x, const FiniteSpace& y) {
    return finprob::mod0_isomorphic(x, y).has_value();
  };
  for (const auto& s : batch) CHECK(related(s, s));
  for (const auto& x : batch)
    for (const auto& y : batch) CHECK(related(x, y) == related(y, x));
  for (const auto& x : batch)
    for (const auto& y : batch)
      for (const auto& z : batch)
        if (related(x, y) && related(y, z)) CHECK(related(x, z));
}

TEST_CASE("automorphisms generate the stabilizer of all measures") {
  // Two atoms share the full profile, the third differs.
  const auto space = make_space({0.25, 0.25, 0.5}, {{0.25, 0.25, 0.5}});
  const auto group = finprob::automorphisms(space);
  CHECK(group.generators().size() == 1);
  CHECK(finprob::automorphism_order(space) == 2);
  const auto elements = group.enumerate();
  CHECK(elements.size() == 2);

  // Brute force over all 6 permutations.
  std::vector<std::size_t> perm{0, 1, 2};
  std::size_t stabilizer = 0;
  do {
    bool preserves = true;
    for (std::size_t m = 0; m <= 1 && preserves; ++m)
      for (std::size_t atom = 0; atom < 3; ++atom)
        if (space.measure(m)[atom] != space.measure(m)[perm[atom]]) {
          preserves = false;
          break;
        }
    if (preserves) ++stabilizer;
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(stabilizer == elements.size());

  const auto distinct = make_space({0.2, 0.3, 0.5});
  CHECK(finprob::automorphism_order(distinct) == 1);
  CHECK(finprob::automorphisms(distinct).enumerate().size() == 1);

  const auto uniform = make_space({1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(finprob::automorphism_order(uniform) == 6);
  CHECK(finprob::automorphisms(uniform).enumerate().size() == 6);
}

TEST_CASE("group enumeration respects the cap") {
  MultiMeasureSpace big;
  big.base = FiniteSpace::uniform(11);
  const auto group = finprob::automorphisms(big);
  CHECK_THROWS_AS(group.enumerate(1000), InvalidInput);
  CHECK(finprob::automorphism_order(big, 1000) == 1000);  // saturated
}

TEST_CASE("group_average on hand-worked cases") {
  const auto two = make_space({0.5, 0.5});
  const auto group2 = finprob::automorphisms(two);
  const auto averaged = finprob::group_average(two, group2, Payoff{{1.0, 2.0}});
  CHECK(averaged.values[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(averaged.values[1] == doctest::Approx(1.5).epsilon(1e-15));

  const finprob::PermutationGroup trivial({}, 2);
  const auto unchanged = finprob::group_average(two, trivial, Payoff{{1.0, 2.0}});
  CHECK(unchanged.values == std::vector<double>{1.0, 2.0});

  // Generators must preserve every measure.
  const auto lopsided = make_space({0.3, 0.7});
  Permutation bad_swap = Permutation::identity(2);
  std::swap(bad_swap.image[0], bad_swap.image[1]);
  CHECK_THROWS_AS(finprob::group_average(
                      lopsided, finprob::PermutationGroup({bad_swap}, 2),
                      Payoff{{1.0, 2.0}}),
                  InvalidInput);

  const auto three = make_space({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto group6 = finprob::automorphisms(three);
  const auto flat = finprob::group_average(three, group6, Payoff{{1.0, 2.0, 3.0}});
  for (double v : flat.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
  for (const auto& g : group6.enumerate()) {
    const auto inv = g.inverse();
    for (std::size_t atom = 0; atom < 3; ++atom)
      CHECK(flat.values[inv(atom)] == doctest::Approx(flat.values[atom]).epsilon(1e-14));
  }
}

TEST_CASE("group_average is an idempotent price-preserving contraction") {
  testing::TestRng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    auto space = testing::random_space(rng, 2 + rng.index(5), 1);
    // force some equal profiles by duplicating an atom's weights
    if (space.atom_count() >= 3) {
      space.base.weights[1] = space.base.weights[0];
      space.extra_measures[0][1] = space.extra_measures[0][0];
      double base_sum = std::accumulate(space.base.weights.begin(),
                                        space.base.weights.end() - 1, 0.0);
      space.base.weights.back() = 1.0 - base_sum;
      double extra_sum = std::accumulate(space.extra_measures[0].begin(),
                                         space.extra_measures[0].end() - 1, 0.0);
      space.extra_measures[0].back() = 1.0 - extra_sum;
      if (space.base.weights.back() <= 0.0 || space.extra_measures[0].back() <= 0.0)
        continue;
    }
    const auto group = finprob::automorphisms(space);
    Payoff payoff;
    for (std::size_t a = 0; a < space.atom_count(); ++a)
      payoff.values.push_back(rng.uniform(-3.0, 3.0));

    const auto once = finprob::group_average(space, group, payoff);
    const auto twice = finprob::group_average(space, group, once);
    for (std::size_t a = 0; a < once.size(); ++a)
      CHECK(std::fabs(once.values[a] - twice.values[a]) <= 1e-12);

    // Linearity: averaging 2X + 1 equals 2 avg(X) + 1.
    Payoff affine;
    for (double v : payoff.values) affine.values.push_back(2.0 * v + 1.0);
    const auto averaged_affine = finprob::group_average(space, group, affine);
    for (std::size_t a = 0; a < once.size(); ++a)
      CHECK(std::fabs(averaged_affine.values[a] - (2.0 * once.values[a] + 1.0)) <=
            1e-12);

    double before = 0.0, after = 0.0;
    for (std::size_t a = 0; a < once.size(); ++a) {
      before += space.base.weights[a] * payoff.values[a];
      after += space.base.weights[a] * once.values[a];
    }
    CHECK(std::fabs(before - after) <= 1e-12);

    // Convex hull of the orbit, coordinatewise.
    const auto elements = group.enumerate();
    for (std::size_t a = 0; a < once.size(); ++a) {
      double lo = payoff.values[a], hi = payoff.values[a];
      for (const auto& g : elements) {
        const double v = payoff.values[g.inverse()(a)];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(once.values[a] >= lo - 1e-12);
      CHECK(once.values[a] <= hi + 1e-12);
    }
  }
}

TEST_CASE("product_with_casino splits every atom uniformly") {
  const auto space = make_space({0.4, 0.6}, {{0.2, 0.8}});
  const auto product = finprob::product_with_casino(space, 4);
  REQUIRE(product.atom_count() == 8);
  for (std::size_t a = 0; a < 8; ++a)
    CHECK(product.base.weights[a] ==
          doctest::Approx(space.base.weights[a / 4] / 4).epsilon(1e-15));
  CHECK(finprob::validate_space(product).pass);

  const auto q_orig = finprob::rn_derivative(space, 1);
  const auto q_prod = finprob::rn_derivative(product, 1);
  for (std::size_t a = 0; a < 8; ++a)
    CHECK(q_prod[a] == doctest::Approx(q_orig[a / 4]).epsilon(1e-14));

  CHECK_THROWS_AS(finprob::product_with_casino(space, 0), InvalidInput);
}
