#pragma once

// Finite probability spaces carrying several equivalent measures, mod-0
// isomorphism testing, measure-preserving automorphism groups and group
// averaging of payoffs. All values are immutable after construction and all
// operations are pure, so concurrent readers need no synchronization.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isomarket/common.hpp"

namespace isomarket::finprob {

// Atoms with probability weights. Weights must sum to 1 within kMassTol and
// labels must be distinct; atoms of weight zero are allowed and are ignored
// by all mod-0 logic.
struct FiniteSpace {
  std::vector<std::string> atom_labels;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }

  static FiniteSpace uniform(std::size_t n);
  static FiniteSpace from_weights(std::vector<double> weights);
};

// A base measure P0 plus n extra measures P1..Pn on the same atoms. The extra
// measures must be equivalent to P0: an atom is null for all measures or for
// none.
struct MultiMeasureSpace {
  FiniteSpace base;
  std::vector<std::vector<double>> extra_measures;

  std::size_t atom_count() const { return base.size(); }
  std::size_t measure_count() const { return extra_measures.size(); }

  // Measure by index: 0 is the base, 1..n the extras.
  const std::vector<double>& measure(std::size_t index) const;
};

// Terminal payoff amounts aligned with the atoms of a space.
struct Payoff {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

// Permutation of atom indices, stored as the forward image.
struct Permutation {
  std::vector<std::size_t> image;

  std::size_t size() const { return image.size(); }
  std::size_t operator()(std::size_t i) const { return image[i]; }
  Permutation inverse() const;
  Permutation after(const Permutation& first) const;  // this ∘ first
  static Permutation identity(std::size_t n);
  bool operator==(const Permutation& other) const = default;
};

// Group generated by atom permutations. Generators are expected to preserve
// every measure of the space they were built from; enumeration is lazy and
// capped.
class PermutationGroup {
 public:
  PermutationGroup() = default;
  explicit PermutationGroup(std::vector<Permutation> generators,
                            std::size_t degree);

  const std::vector<Permutation>& generators() const { return generators_; }
  std::size_t degree() const { return degree_; }

  // Breadth-first closure of the generators. Throws InvalidInput if the group
  // has more than `cap` elements.
  std::vector<Permutation> enumerate(std::size_t cap = kDefaultGroupCap) const;

 private:
  std::vector<Permutation> generators_;
  std::size_t degree_ = 0;
};

struct ValidationReport {
  bool pass = true;
  std::vector<std::string> violations;
};

// Pairs (index in first space, index in second space) over non-null atoms.
using AtomBijection = std::vector<std::pair<std::size_t, std::size_t>>;

// Checks normalization, label distinctness, measure alignment and the
// equivalence of every extra measure with the base.
ValidationReport validate_space(const MultiMeasureSpace& space);

void require_valid(const MultiMeasureSpace& space);

// Per-atom Radon-Nikodym derivative dPi/dP0 for measure_index in 1..n.
// Null atoms carry the marker value 1.
std::vector<double> rn_derivative(const MultiMeasureSpace& space,
                                  std::size_t measure_index);

// Full derivative vector (q_1..q_n) of one atom.
std::vector<double> rn_vector(const MultiMeasureSpace& space, std::size_t atom);

// Measure-preserving bijection between the non-null atoms of two spaces, if
// the positive weight multisets agree entrywise within kMassTol.
std::optional<AtomBijection> mod0_isomorphic(const FiniteSpace& a,
                                             const FiniteSpace& b);

// The stabilizer of all measures, generated by transpositions inside classes
// of atoms with identical (P0..Pn) profiles.
PermutationGroup automorphisms(const MultiMeasureSpace& space);

// Number of elements of the automorphism group (product of class factorials),
// saturating at the cap.
std::size_t automorphism_order(const MultiMeasureSpace& space,
                               std::size_t cap = kDefaultGroupCap);

// (1/|G|) sum over g of payoff(g^{-1} omega). The result is fixed by every
// element of the group.
Payoff group_average(const MultiMeasureSpace& space,
                     const PermutationGroup& group, const Payoff& payoff,
                     std::size_t cap = kDefaultGroupCap);

// Product with a K-cell casino: every atom splits into K cells of equal
// weight under every measure. Labels become "label#cell".
MultiMeasureSpace product_with_casino(const MultiMeasureSpace& space,
                                      std::size_t grid);

}  // namespace isomarket::finprob
