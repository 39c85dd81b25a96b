#pragma once

// Complete one-period markets: pricing under the Q measure, the joint
// classification invariant, canonical quantile markets, casino equivalence
// and projection of payoffs onto functions of the Radon-Nikodym vector.

#include <functional>
#include <optional>
#include <vector>

#include "isomarket/common.hpp"
#include "isomarket/finprob.hpp"

namespace isomarket::onep {

// A multi-measure space with exactly one extra measure Q plus the price of
// the constant payoff 1.
struct CompleteMarket1P {
  finprob::MultiMeasureSpace space;
  double scale_c = 1.0;

  const std::vector<double>& q_measure() const {
    return space.extra_measures.front();
  }
};

void require_valid(const CompleteMarket1P& market);

// Conditional law of the atoms inside one rn-class: conditional masses sorted
// descending plus the mass of a continuous component (zero for genuinely
// finite spaces, used when reasoning about casino products).
struct ConditionalProfile {
  std::vector<double> atom_masses;
  double continuous_mass = 0.0;

  // Profile after refining every atom into `grid` equal parts.
  ConditionalProfile refined(std::size_t grid) const;
};

struct InvariantEntry {
  std::vector<double> rn_vector;
  double mass = 0.0;
  ConditionalProfile profile;
};

// Discrete form of the (mu_q, m_q) classification data: one entry per
// rn-vector class, masses summing to 1 and E[rn_i] = 1 for every coordinate.
struct ClassificationInvariant {
  std::vector<InvariantEntry> entries;
  std::optional<double> scale_c;
};

ClassificationInvariant classification_invariant(
    const finprob::MultiMeasureSpace& space);

bool invariants_equal(const ClassificationInvariant& a,
                      const ClassificationInvariant& b,
                      double tol = kDerivedTol);

// Measure-preserving bijection of non-null atoms, present exactly when the
// classification invariants agree. Both spaces must carry the same number of
// measures.
std::optional<finprob::AtomBijection> jointly_isomorphic(
    const finprob::MultiMeasureSpace& a, const finprob::MultiMeasureSpace& b);

// scale_c * E_Q[payoff].
double price(const CompleteMarket1P& market, const finprob::Payoff& payoff);

// The canonical market on [0,1): dQ/dP laid out as its non-decreasing
// quantile function over Lebesgue measure.
struct QuantileMarket {
  std::vector<double> breakpoints;  // size steps+1, starts at 0, ends at 1
  std::vector<double> rn_values;    // size steps, non-decreasing
  double scale_c = 1.0;

  std::size_t step_count() const { return rn_values.size(); }

  // Price of a payoff that is constant on each quantile step.
  double price_step_payoff(const std::vector<double>& step_values) const;

  // Price of an arbitrary payoff u -> value by midpoint sampling.
  double price_function(const std::function<double(double)>& payoff,
                        std::size_t samples = 10'000) const;

  // L1 distance between the two step functions on the merged breakpoint grid.
  double l1_distance(const QuantileMarket& other) const;
};

QuantileMarket quantile_market(const CompleteMarket1P& market);

enum class CasinoEquivalence { equivalent, distinct, indeterminate };

// Two markets are casino-equivalent when their scale constants agree and the
// P-laws of dQ/dP coincide. Comparisons landing between tol and 10*tol are
// reported as indeterminate rather than guessed.
CasinoEquivalence casino_equivalence(const CompleteMarket1P& a,
                                     const CompleteMarket1P& b,
                                     double tol = kDerivedTol);

inline bool isomorphic_up_to_casino(const CompleteMarket1P& a,
                                    const CompleteMarket1P& b) {
  return casino_equivalence(a, b) == CasinoEquivalence::equivalent;
}

// Conditional expectation of the payoff given the rn-vector: constant on each
// rn-class and preserving E_{Pi} for every measure. Null atoms pass through.
finprob::Payoff project_onto_q(const finprob::MultiMeasureSpace& space,
                               const finprob::Payoff& payoff);

}  // namespace isomarket::onep
