#pragma once

// Increasing/decreasing rearrangement of payoffs over a market-with-casino.
// A payoff is rearranged into a monotone function of the density coordinate
// without changing its base-measure law; conditional and composite variants
// handle several equivalent measures at once.
//
// The casino coordinate is discretized at the midpoints of a K-cell grid.
// With equal-weight rows the discrete operator is an exact permutation of the
// weighted value multiset; for general weights it converges to the continuum
// operator at rate 1/K.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "isomarket/common.hpp"
#include "isomarket/finprob.hpp"

namespace isomarket::rearrange {

struct SampleRow {
  std::vector<double> x;  // rn coordinates; scalar samples have one entry
  double y = 0.0;         // casino coordinate in [0,1)
  double weight = 0.0;
  double value = 0.0;
};

struct CasinoSample {
  std::vector<SampleRow> rows;
  std::size_t dim = 1;
  std::size_t grid = kDefaultCasinoGrid;
};

// Rows for every non-null atom: K cells with y at (j+0.5)/K, weight split
// evenly, x the atom's rn vector and value the atom payoff.
CasinoSample make_casino_sample(const finprob::MultiMeasureSpace& space,
                                const finprob::Payoff& payoff,
                                std::size_t grid = kDefaultCasinoGrid);

// Weighted law with strictly increasing support. CDF limits are read off the
// table directly, never by numerical limiting.
class DiscreteLaw {
 public:
  DiscreteLaw() = default;
  DiscreteLaw(std::vector<double> support, std::vector<double> masses);

  static DiscreteLaw from_sample(std::span<const double> values,
                                 std::span<const double> weights,
                                 double tol = kMassTol);

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& masses() const { return masses_; }

  double cdf(double x) const;       // F(x) = P(X <= x)
  double cdf_left(double x) const;  // F(x-) = P(X < x)
  double mean() const;
  double total_mass() const;

 private:
  std::vector<double> support_;
  std::vector<double> masses_;
  std::vector<double> cum_;
};

// (1-y) F(x-) + y F(x+): the uniform coordinate a density value x and casino
// coordinate y land on.
double u_m(const DiscreteLaw& law, double x, double y);

// inf { x : F(x) >= p } for p in (0, total mass].
double generalized_inverse_cdf(const DiscreteLaw& law, double p);
double generalized_inverse_cdf(std::span<const double> values,
                               std::span<const double> weights, double p);

// Increasing (sign +1) or decreasing (sign -1) rearrangement of the value
// column; x, y and weights are untouched. Requires scalar x with weighted
// mean 1 within 1e-8 so that x is a genuine density coordinate.
CasinoSample rearrange_pm(const CasinoSample& sample, int sign);

// Rearranges coordinate `coord` (1-based) independently inside every slice
// of rows sharing the complementary rn coordinates.
CasinoSample conditional_rearrange(const CasinoSample& sample, std::size_t coord,
                                   int sign);

// R = R_n ∘ ... ∘ R_1 with R_j the conditional rearrangement of signs[j-1].
CasinoSample composite_rearrange(const CasinoSample& sample,
                                 const std::vector<int>& signs);

// Casino-free rearrangement. With a single measure the result lives on the
// casino refinement of the space (case a); with several measures and no tied
// rn vectors it is a function of the rn vector (case b). Ties with n > 1
// raise InvalidInput("casino required").
struct NoCasinoResult {
  std::optional<finprob::MultiMeasureSpace> refined_space;
  std::optional<finprob::Payoff> refined_payoff;
  std::optional<std::vector<std::pair<std::vector<double>, double>>> table;
};

NoCasinoResult rearrange_no_casino(const finprob::MultiMeasureSpace& space,
                                   const finprob::Payoff& payoff,
                                   const std::vector<int>& signs,
                                   std::size_t grid = kDefaultCasinoGrid);

}  // namespace isomarket::rearrange
