#include "isomarket/onep.hpp"

#include <algorithm>
#include <cmath>

namespace isomarket::onep {

using finprob::AtomBijection;
using finprob::MultiMeasureSpace;
using finprob::Payoff;

void require_valid(const CompleteMarket1P& market) {
  if (market.space.measure_count() != 1)
    throw InvalidInput("complete market needs exactly one extra measure Q");
  if (!(market.scale_c > 0.0))
    throw InvalidInput("scale_C must be positive");
  finprob::require_valid(market.space);
}

ConditionalProfile ConditionalProfile::refined(std::size_t grid) const {
  if (grid == 0) throw InvalidInput("refinement grid must be positive");
  ConditionalProfile out;
  out.continuous_mass = continuous_mass;
  out.atom_masses.reserve(atom_masses.size() * grid);
  for (double m : atom_masses)
    for (std::size_t c = 0; c < grid; ++c)
      out.atom_masses.push_back(m / static_cast<double>(grid));
  std::sort(out.atom_masses.begin(), out.atom_masses.end(), std::greater<>());
  return out;
}

namespace {

// Non-null atoms grouped by rn-vector (coordinatewise within kMassTol),
// groups ordered lexicographically by the vector.
std::vector<std::vector<std::size_t>> rn_classes(const MultiMeasureSpace& space) {
  std::vector<std::size_t> order;
  for (std::size_t a = 0; a < space.atom_count(); ++a)
    if (space.base.weights[a] > 0.0) order.push_back(a);

  std::vector<std::vector<double>> q(space.atom_count());
  for (std::size_t a : order) q[a] = finprob::rn_vector(space, a);

  auto less = [&](std::size_t l, std::size_t r) {
    for (std::size_t m = 0; m < space.measure_count(); ++m)
      if (std::fabs(q[l][m] - q[r][m]) > kMassTol) return q[l][m] < q[r][m];
    return space.base.atom_labels[l] < space.base.atom_labels[r];
  };
  auto equal = [&](std::size_t l, std::size_t r) {
    for (std::size_t m = 0; m < space.measure_count(); ++m)
      if (std::fabs(q[l][m] - q[r][m]) > kMassTol) return false;
    return true;
  };
  std::sort(order.begin(), order.end(), less);

  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t a : order) {
    if (!classes.empty() && equal(classes.back().front(), a))
      classes.back().push_back(a);
    else
      classes.push_back({a});
  }
  return classes;
}

bool profile_equal(const ConditionalProfile& a, const ConditionalProfile& b,
                   double tol) {
  if (a.atom_masses.size() != b.atom_masses.size()) return false;
  if (std::fabs(a.continuous_mass - b.continuous_mass) > tol) return false;
  for (std::size_t i = 0; i < a.atom_masses.size(); ++i)
    if (std::fabs(a.atom_masses[i] - b.atom_masses[i]) > tol) return false;
  return true;
}

bool entry_equal(const InvariantEntry& a, const InvariantEntry& b, double tol) {
  if (a.rn_vector.size() != b.rn_vector.size()) return false;
  for (std::size_t i = 0; i < a.rn_vector.size(); ++i)
    if (std::fabs(a.rn_vector[i] - b.rn_vector[i]) > tol) return false;
  if (std::fabs(a.mass - b.mass) > tol) return false;
  return profile_equal(a.profile, b.profile, tol);
}

}  // namespace

ClassificationInvariant classification_invariant(const MultiMeasureSpace& space) {
  finprob::require_valid(space);
  ClassificationInvariant inv;
  for (const auto& cls : rn_classes(space)) {
    InvariantEntry entry;
    entry.rn_vector = finprob::rn_vector(space, cls.front());
    double mass = 0.0;
    for (std::size_t a : cls) mass += space.base.weights[a];
    entry.mass = mass;
    entry.profile.atom_masses.reserve(cls.size());
    for (std::size_t a : cls)
      entry.profile.atom_masses.push_back(space.base.weights[a] / mass);
    std::sort(entry.profile.atom_masses.begin(), entry.profile.atom_masses.end(),
              std::greater<>());
    inv.entries.push_back(std::move(entry));
  }
  return inv;
}

bool invariants_equal(const ClassificationInvariant& a,
                      const ClassificationInvariant& b, double tol) {
  if (a.entries.size() != b.entries.size()) return false;
  if (a.scale_c.has_value() != b.scale_c.has_value()) return false;
  if (a.scale_c && std::fabs(*a.scale_c - *b.scale_c) > tol) return false;
  std::vector<bool> used(b.entries.size(), false);
  for (const auto& ea : a.entries) {
    bool matched = false;
    for (std::size_t j = 0; j < b.entries.size(); ++j) {
      if (used[j]) continue;
      if (entry_equal(ea, b.entries[j], tol)) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

std::optional<AtomBijection> jointly_isomorphic(const MultiMeasureSpace& a,
                                                const MultiMeasureSpace& b) {
  if (a.measure_count() != b.measure_count())
    throw InvalidInput("jointly_isomorphic: measure counts differ");
  finprob::require_valid(a);
  finprob::require_valid(b);

  const auto classes_a = rn_classes(a);
  const auto classes_b = rn_classes(b);
  if (classes_a.size() != classes_b.size()) return std::nullopt;

  const ClassificationInvariant inv_a = classification_invariant(a);
  const ClassificationInvariant inv_b = classification_invariant(b);

  // Greedy entry matching mirrors invariants_equal; class order of
  // rn_classes matches the entry order of classification_invariant.
  std::vector<bool> used(inv_b.entries.size(), false);
  AtomBijection bij;
  for (std::size_t i = 0; i < inv_a.entries.size(); ++i) {
    bool matched = false;
    for (std::size_t j = 0; j < inv_b.entries.size(); ++j) {
      if (used[j]) continue;
      if (!entry_equal(inv_a.entries[i], inv_b.entries[j], kDerivedTol)) continue;
      used[j] = true;
      matched = true;
      // Pair atoms by descending P0 mass, ties by label.
      auto ranked = [](const MultiMeasureSpace& s, std::vector<std::size_t> atoms) {
        std::sort(atoms.begin(), atoms.end(), [&s](std::size_t l, std::size_t r) {
          if (s.base.weights[l] != s.base.weights[r])
            return s.base.weights[l] > s.base.weights[r];
          return s.base.atom_labels[l] < s.base.atom_labels[r];
        });
        return atoms;
      };
      const auto atoms_a = ranked(a, classes_a[i]);
      const auto atoms_b = ranked(b, classes_b[j]);
      for (std::size_t k = 0; k < atoms_a.size(); ++k)
        bij.emplace_back(atoms_a[k], atoms_b[k]);
      break;
    }
    if (!matched) return std::nullopt;
  }
  std::sort(bij.begin(), bij.end());
  return bij;
}

double price(const CompleteMarket1P& market, const Payoff& payoff) {
  require_valid(market);
  if (payoff.size() != market.space.atom_count())
    throw InvalidInput("price: payoff misaligned");
  const auto& q = market.q_measure();
  double expectation = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a)
    expectation += q[a] * payoff.values[a];
  return market.scale_c * expectation;
}

QuantileMarket quantile_market(const CompleteMarket1P& market) {
  require_valid(market);
  const auto& space = market.space;
  std::vector<std::size_t> order;
  for (std::size_t a = 0; a < space.atom_count(); ++a)
    if (space.base.weights[a] > 0.0) order.push_back(a);
  const std::vector<double> q = finprob::rn_derivative(space, 1);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    if (std::fabs(q[l] - q[r]) > kMassTol) return q[l] < q[r];
    return space.base.atom_labels[l] < space.base.atom_labels[r];
  });

  QuantileMarket out;
  out.scale_c = market.scale_c;
  out.breakpoints.push_back(0.0);
  double cum = 0.0;
  for (std::size_t a : order) {
    const double w = space.base.weights[a];
    // Ties in the derivative merge into a single step: the law of dQ/dP is
    // the invariant, not the atom identity.
    if (!out.rn_values.empty() && std::fabs(out.rn_values.back() - q[a]) <= kMassTol) {
      cum += w;
      out.breakpoints.back() = cum;
    } else {
      cum += w;
      out.rn_values.push_back(q[a]);
      out.breakpoints.push_back(cum);
    }
  }
  if (!out.breakpoints.empty()) out.breakpoints.back() = 1.0;
  return out;
}

double QuantileMarket::price_step_payoff(const std::vector<double>& step_values) const {
  if (step_values.size() != rn_values.size())
    throw InvalidInput("step payoff misaligned with quantile steps");
  double total = 0.0;
  for (std::size_t s = 0; s < rn_values.size(); ++s)
    total += rn_values[s] * step_values[s] * (breakpoints[s + 1] - breakpoints[s]);
  return scale_c * total;
}

double QuantileMarket::price_function(const std::function<double(double)>& payoff,
                                      std::size_t samples) const {
  if (samples == 0) throw InvalidInput("need at least one sample");
  double total = 0.0;
  std::size_t step = 0;
  const double h = 1.0 / static_cast<double>(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double u = (static_cast<double>(k) + 0.5) * h;
    while (step + 1 < rn_values.size() && u >= breakpoints[step + 1]) ++step;
    total += rn_values[step] * payoff(u);
  }
  return scale_c * total * h;
}

double QuantileMarket::l1_distance(const QuantileMarket& other) const {
  double dist = 0.0;
  std::size_t i = 0, j = 0;
  double u = 0.0;
  while (i < rn_values.size() && j < other.rn_values.size()) {
    const double edge = std::min(breakpoints[i + 1], other.breakpoints[j + 1]);
    if (edge > u) dist += std::fabs(rn_values[i] - other.rn_values[j]) * (edge - u);
    if (breakpoints[i + 1] <= edge) ++i;
    if (other.breakpoints[j + 1] <= edge) ++j;
    u = edge;
  }
  return dist;
}

CasinoEquivalence casino_equivalence(const CompleteMarket1P& a,
                                     const CompleteMarket1P& b, double tol) {
  const double c_gap = std::fabs(a.scale_c - b.scale_c);
  const double law_gap = quantile_market(a).l1_distance(quantile_market(b));
  const double gap = std::max(c_gap, law_gap);
  if (gap <= tol) return CasinoEquivalence::equivalent;
  if (gap > 10.0 * tol) return CasinoEquivalence::distinct;
  return CasinoEquivalence::indeterminate;
}

Payoff project_onto_q(const MultiMeasureSpace& space, const Payoff& payoff) {
  finprob::require_valid(space);
  if (payoff.size() != space.atom_count())
    throw InvalidInput("project_onto_q: payoff misaligned");
  Payoff out = payoff;
  for (const auto& cls : rn_classes(space)) {
    double mass = 0.0;
    double weighted = 0.0;
    for (std::size_t a : cls) {
      mass += space.base.weights[a];
      weighted += space.base.weights[a] * payoff.values[a];
    }
    const double mean = weighted / mass;
    for (std::size_t a : cls) out.values[a] = mean;
  }
  return out;
}

}  // namespace isomarket::onep
