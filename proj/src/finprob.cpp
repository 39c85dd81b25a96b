#include "isomarket/finprob.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace isomarket::finprob {

FiniteSpace FiniteSpace::uniform(std::size_t n) {
  FiniteSpace s;
  s.weights.assign(n, 1.0 / static_cast<double>(n));
  s.atom_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.atom_labels[i] = "a" + std::to_string(i);
  return s;
}

FiniteSpace FiniteSpace::from_weights(std::vector<double> weights) {
  FiniteSpace s;
  s.atom_labels.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    s.atom_labels[i] = "a" + std::to_string(i);
  s.weights = std::move(weights);
  return s;
}

const std::vector<double>& MultiMeasureSpace::measure(std::size_t index) const {
  if (index == 0) return base.weights;
  if (index > extra_measures.size())
    throw InvalidInput("measure index out of range");
  return extra_measures[index - 1];
}

Permutation Permutation::inverse() const {
  Permutation inv;
  inv.image.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) inv.image[image[i]] = i;
  return inv;
}

Permutation Permutation::after(const Permutation& first) const {
  Permutation out;
  out.image.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) out.image[i] = image[first.image[i]];
  return out;
}

Permutation Permutation::identity(std::size_t n) {
  Permutation p;
  p.image.resize(n);
  std::iota(p.image.begin(), p.image.end(), 0);
  return p;
}

PermutationGroup::PermutationGroup(std::vector<Permutation> generators,
                                   std::size_t degree)
    : generators_(std::move(generators)), degree_(degree) {
  for (const auto& g : generators_)
    if (g.size() != degree_)
      throw InvalidInput("group generator degree mismatch");
}

std::vector<Permutation> PermutationGroup::enumerate(std::size_t cap) const {
  std::vector<Permutation> elements{Permutation::identity(degree_)};
  std::set<std::vector<std::size_t>> seen{elements.front().image};
  std::size_t frontier = 0;
  while (frontier < elements.size()) {
    const Permutation current = elements[frontier++];
    for (const auto& g : generators_) {
      Permutation next = g.after(current);
      if (seen.insert(next.image).second) {
        if (elements.size() >= cap)
          throw InvalidInput("group too large to enumerate");
        elements.push_back(std::move(next));
      }
    }
  }
  return elements;
}

ValidationReport validate_space(const MultiMeasureSpace& space) {
  ValidationReport report;
  auto fail = [&report](const std::string& msg) {
    report.pass = false;
    report.violations.push_back(msg);
  };

  const auto& w = space.base.weights;
  if (space.base.atom_labels.size() != w.size())
    fail("label/weight length mismatch");
  std::set<std::string> labels(space.base.atom_labels.begin(),
                               space.base.atom_labels.end());
  if (labels.size() != space.base.atom_labels.size())
    fail("atom labels not distinct");

  for (double x : w)
    if (x < 0.0 || !std::isfinite(x)) fail("negative or non-finite base weight");
  const double mass = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::fabs(mass - 1.0) > kMassTol) {
    std::ostringstream os;
    os << "mass " << mass;
    fail(os.str());
  }

  for (std::size_t m = 0; m < space.extra_measures.size(); ++m) {
    const auto& pm = space.extra_measures[m];
    if (pm.size() != w.size()) {
      fail("measure " + std::to_string(m + 1) + " misaligned");
      continue;
    }
    double extra_mass = 0.0;
    for (std::size_t a = 0; a < pm.size(); ++a) {
      if (pm[a] < 0.0 || !std::isfinite(pm[a]))
        fail("negative or non-finite weight in measure " + std::to_string(m + 1));
      extra_mass += pm[a];
      const bool base_null = w[a] <= 0.0;
      const bool extra_null = pm[a] <= 0.0;
      if (base_null != extra_null)
        fail("equivalence violated at atom " + std::to_string(a));
    }
    if (std::fabs(extra_mass - 1.0) > kMassTol)
      fail("measure " + std::to_string(m + 1) + " mass " +
           std::to_string(extra_mass));
  }
  return report;
}

void require_valid(const MultiMeasureSpace& space) {
  const ValidationReport report = validate_space(space);
  if (!report.pass) {
    std::string msg = "invalid space:";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw InvalidInput(msg);
  }
}

std::vector<double> rn_derivative(const MultiMeasureSpace& space,
                                  std::size_t measure_index) {
  if (measure_index < 1 || measure_index > space.measure_count())
    throw InvalidInput("rn_derivative: measure index out of range");
  const auto& p0 = space.base.weights;
  const auto& pi = space.extra_measures[measure_index - 1];
  std::vector<double> q(p0.size(), 1.0);
  for (std::size_t a = 0; a < p0.size(); ++a)
    if (p0[a] > 0.0) q[a] = pi[a] / p0[a];
  return q;
}

std::vector<double> rn_vector(const MultiMeasureSpace& space, std::size_t atom) {
  std::vector<double> q(space.measure_count(), 1.0);
  const double p0 = space.base.weights[atom];
  if (p0 > 0.0)
    for (std::size_t m = 0; m < space.measure_count(); ++m)
      q[m] = space.extra_measures[m][atom] / p0;
  return q;
}

std::optional<AtomBijection> mod0_isomorphic(const FiniteSpace& a,
                                             const FiniteSpace& b) {
  std::vector<std::size_t> ia, ib;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.weights[i] > 0.0) ia.push_back(i);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.weights[i] > 0.0) ib.push_back(i);
  if (ia.size() != ib.size()) return std::nullopt;

  auto by_weight = [](const FiniteSpace& s) {
    return [&s](std::size_t l, std::size_t r) {
      if (s.weights[l] != s.weights[r]) return s.weights[l] < s.weights[r];
      return s.atom_labels[l] < s.atom_labels[r];
    };
  };
  std::sort(ia.begin(), ia.end(), by_weight(a));
  std::sort(ib.begin(), ib.end(), by_weight(b));

  AtomBijection bij;
  bij.reserve(ia.size());
  for (std::size_t k = 0; k < ia.size(); ++k) {
    if (std::fabs(a.weights[ia[k]] - b.weights[ib[k]]) > kMassTol)
      return std::nullopt;
    bij.emplace_back(ia[k], ib[k]);
  }
  return bij;
}

namespace {

// Atoms grouped by identical (P0..Pn) profile, classes ordered by profile and
// atoms inside a class by label. Null atoms form their own classes and are
// excluded.
std::vector<std::vector<std::size_t>> measure_profile_classes(
    const MultiMeasureSpace& space) {
  const std::size_t n_atoms = space.atom_count();
  std::vector<std::size_t> order;
  for (std::size_t a = 0; a < n_atoms; ++a)
    if (space.base.weights[a] > 0.0) order.push_back(a);

  auto profile_less = [&space](std::size_t l, std::size_t r) {
    for (std::size_t m = 0; m <= space.measure_count(); ++m) {
      const double x = space.measure(m)[l];
      const double y = space.measure(m)[r];
      if (std::fabs(x - y) > kMassTol) return x < y;
    }
    return space.base.atom_labels[l] < space.base.atom_labels[r];
  };
  auto profile_equal = [&space](std::size_t l, std::size_t r) {
    for (std::size_t m = 0; m <= space.measure_count(); ++m)
      if (std::fabs(space.measure(m)[l] - space.measure(m)[r]) > kMassTol)
        return false;
    return true;
  };
  std::sort(order.begin(), order.end(), profile_less);

  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t a : order) {
    if (!classes.empty() && profile_equal(classes.back().front(), a))
      classes.back().push_back(a);
    else
      classes.push_back({a});
  }
  return classes;
}

}  // namespace

PermutationGroup automorphisms(const MultiMeasureSpace& space) {
  require_valid(space);
  std::vector<Permutation> generators;
  for (const auto& cls : measure_profile_classes(space)) {
    for (std::size_t k = 0; k + 1 < cls.size(); ++k) {
      Permutation t = Permutation::identity(space.atom_count());
      std::swap(t.image[cls[k]], t.image[cls[k + 1]]);
      generators.push_back(std::move(t));
    }
  }
  return PermutationGroup(std::move(generators), space.atom_count());
}

std::size_t automorphism_order(const MultiMeasureSpace& space, std::size_t cap) {
  std::size_t order = 1;
  for (const auto& cls : measure_profile_classes(space)) {
    for (std::size_t k = 2; k <= cls.size(); ++k) {
      if (order > cap / k) return cap;
      order *= k;
    }
  }
  return order;
}

Payoff group_average(const MultiMeasureSpace& space,
                     const PermutationGroup& group, const Payoff& payoff,
                     std::size_t cap) {
  if (payoff.size() != space.atom_count())
    throw InvalidInput("group_average: payoff misaligned");
  if (group.degree() != space.atom_count())
    throw InvalidInput("group_average: group degree mismatch");
  for (const auto& g : group.generators())
    for (std::size_t m = 0; m <= space.measure_count(); ++m)
      for (std::size_t a = 0; a < space.atom_count(); ++a)
        if (std::fabs(space.measure(m)[a] - space.measure(m)[g(a)]) > kMassTol)
          throw InvalidInput("group_average: generator does not preserve the measures");
  const auto elements = group.enumerate(cap);
  Payoff out;
  out.values.assign(payoff.size(), 0.0);
  for (const auto& g : elements) {
    const Permutation inv = g.inverse();
    for (std::size_t a = 0; a < payoff.size(); ++a)
      out.values[a] += payoff.values[inv(a)];
  }
  const double scale = 1.0 / static_cast<double>(elements.size());
  for (double& v : out.values) v *= scale;
  return out;
}

MultiMeasureSpace product_with_casino(const MultiMeasureSpace& space,
                                      std::size_t grid) {
  if (grid == 0) throw InvalidInput("casino grid must be positive");
  MultiMeasureSpace out;
  const std::size_t n_atoms = space.atom_count();
  const double inv_k = 1.0 / static_cast<double>(grid);
  out.base.atom_labels.reserve(n_atoms * grid);
  out.base.weights.reserve(n_atoms * grid);
  for (std::size_t a = 0; a < n_atoms; ++a) {
    for (std::size_t c = 0; c < grid; ++c) {
      out.base.atom_labels.push_back(space.base.atom_labels[a] + "#" +
                                     std::to_string(c));
      out.base.weights.push_back(space.base.weights[a] * inv_k);
    }
  }
  out.extra_measures.resize(space.measure_count());
  for (std::size_t m = 0; m < space.measure_count(); ++m) {
    out.extra_measures[m].reserve(n_atoms * grid);
    for (std::size_t a = 0; a < n_atoms; ++a)
      for (std::size_t c = 0; c < grid; ++c)
        out.extra_measures[m].push_back(space.extra_measures[m][a] * inv_k);
  }
  return out;
}

}  // namespace isomarket::finprob
