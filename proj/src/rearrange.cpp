#include "isomarket/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isomarket::rearrange {

using finprob::MultiMeasureSpace;
using finprob::Payoff;

CasinoSample make_casino_sample(const MultiMeasureSpace& space,
                                const Payoff& payoff, std::size_t grid) {
  finprob::require_valid(space);
  if (payoff.size() != space.atom_count())
    throw InvalidInput("make_casino_sample: payoff misaligned");
  if (grid == 0) throw InvalidInput("casino grid must be positive");
  if (space.measure_count() == 0)
    throw InvalidInput("make_casino_sample: need at least one extra measure");

  CasinoSample sample;
  sample.dim = space.measure_count();
  sample.grid = grid;
  for (std::size_t a = 0; a < space.atom_count(); ++a) {
    const double w = space.base.weights[a];
    if (w <= 0.0) continue;
    const auto q = finprob::rn_vector(space, a);
    for (std::size_t c = 0; c < grid; ++c) {
      SampleRow row;
      row.x = q;
      row.y = (static_cast<double>(c) + 0.5) / static_cast<double>(grid);
      row.weight = w / static_cast<double>(grid);
      row.value = payoff.values[a];
      sample.rows.push_back(std::move(row));
    }
  }
  return sample;
}

DiscreteLaw::DiscreteLaw(std::vector<double> support, std::vector<double> masses)
    : support_(std::move(support)), masses_(std::move(masses)) {
  if (support_.size() != masses_.size())
    throw InvalidInput("DiscreteLaw: support/mass length mismatch");
  for (std::size_t i = 1; i < support_.size(); ++i)
    if (!(support_[i] > support_[i - 1]))
      throw InvalidInput("DiscreteLaw: support not strictly increasing");
  cum_.resize(masses_.size());
  double c = 0.0;
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    if (masses_[i] < 0.0) throw InvalidInput("DiscreteLaw: negative mass");
    c += masses_[i];
    cum_[i] = c;
  }
}

DiscreteLaw DiscreteLaw::from_sample(std::span<const double> values,
                                     std::span<const double> weights,
                                     double tol) {
  if (values.size() != weights.size())
    throw InvalidInput("from_sample: length mismatch");
  if (values.empty()) throw InvalidInput("from_sample: empty sample");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  std::vector<double> support, masses;
  for (std::size_t k : order) {
    if (!support.empty() && values[k] - support.back() <= tol)
      masses.back() += weights[k];
    else {
      support.push_back(values[k]);
      masses.push_back(weights[k]);
    }
  }
  return DiscreteLaw(std::move(support), std::move(masses));
}

double DiscreteLaw::total_mass() const { return cum_.empty() ? 0.0 : cum_.back(); }

double DiscreteLaw::cdf(double x) const {
  const auto it = std::upper_bound(support_.begin(), support_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - support_.begin());
  return k == 0 ? 0.0 : cum_[k - 1];
}

double DiscreteLaw::cdf_left(double x) const {
  const auto it = std::lower_bound(support_.begin(), support_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - support_.begin());
  return k == 0 ? 0.0 : cum_[k - 1];
}

double DiscreteLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) m += support_[i] * masses_[i];
  return m;
}

double u_m(const DiscreteLaw& law, double x, double y) {
  if (y < 0.0 || y >= 1.0) throw InvalidInput("u_m: y outside [0,1)");
  const double left = law.cdf_left(x);
  const double right = law.cdf(x);
  // At continuity points both limits agree and the value is y-free, exactly.
  if (left == right) return right;
  return (1.0 - y) * left + y * right;
}

double generalized_inverse_cdf(const DiscreteLaw& law, double p) {
  const double total = law.total_mass();
  if (!(p > 0.0) || p > total + kMassTol)
    throw InvalidInput("generalized_inverse_cdf: p outside (0, total]");
  const auto& masses = law.masses();
  double c = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    c += masses[i];
    if (c >= p) return law.support()[i];
  }
  return law.support().back();
}

double generalized_inverse_cdf(std::span<const double> values,
                               std::span<const double> weights, double p) {
  return generalized_inverse_cdf(DiscreteLaw::from_sample(values, weights), p);
}

namespace {

// Core of R±: new value column F_X^{-1}(U_m) over an explicit row subset,
// using laws conditional on that subset. No normalization conditions are
// imposed here; the public entry points add them.
void rearrange_rows(std::vector<SampleRow>& rows,
                    const std::vector<std::size_t>& subset, std::size_t coord,
                    int sign) {
  std::vector<double> xs, ws, vs;
  xs.reserve(subset.size());
  ws.reserve(subset.size());
  vs.reserve(subset.size());
  for (std::size_t r : subset) {
    xs.push_back(rows[r].x[coord]);
    ws.push_back(rows[r].weight);
    vs.push_back(sign > 0 ? rows[r].value : -rows[r].value);
  }
  const DiscreteLaw x_law = DiscreteLaw::from_sample(xs, ws);
  const DiscreteLaw v_law = DiscreteLaw::from_sample(vs, ws, 0.0);
  const double total = x_law.total_mass();

  for (std::size_t i = 0; i < subset.size(); ++i) {
    SampleRow& row = rows[subset[i]];
    // U_m under the conditional law, rescaled to a probability.
    const double u = u_m(x_law, xs[i], row.y) / total;
    const double p = std::min(std::max(u * v_law.total_mass(), 1e-300),
                              v_law.total_mass());
    const double rearranged = generalized_inverse_cdf(v_law, p);
    row.value = sign > 0 ? rearranged : -rearranged;
  }
}

std::vector<std::size_t> all_rows(const CasinoSample& sample) {
  std::vector<std::size_t> idx(sample.rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

CasinoSample rearrange_pm(const CasinoSample& sample, int sign) {
  if (sign != 1 && sign != -1) throw InvalidInput("sign must be +1 or -1");
  if (sample.rows.empty()) throw InvalidInput("empty sample");
  if (sample.dim != 1)
    throw InvalidInput("rearrange_pm: sample must carry scalar rn values");
  double mass = 0.0, mean_x = 0.0;
  for (const auto& row : sample.rows) {
    mass += row.weight;
    mean_x += row.weight * row.x[0];
  }
  if (std::fabs(mean_x / mass - 1.0) > 1e-8)
    throw InvalidInput("rearrange_pm: E[x] must be 1");

  CasinoSample out = sample;
  rearrange_rows(out.rows, all_rows(sample), 0, sign);
  return out;
}

CasinoSample conditional_rearrange(const CasinoSample& sample, std::size_t coord,
                                   int sign) {
  if (sign != 1 && sign != -1) throw InvalidInput("sign must be +1 or -1");
  if (coord < 1 || coord > sample.dim)
    throw InvalidInput("conditional_rearrange: coordinate out of range");
  if (sample.rows.empty()) throw InvalidInput("empty sample");
  const std::size_t j = coord - 1;

  // Slice rows by the complementary rn coordinates, ordered lexicographically.
  std::vector<std::size_t> order = all_rows(sample);
  auto hat_less = [&](std::size_t l, std::size_t r) {
    for (std::size_t m = 0; m < sample.dim; ++m) {
      if (m == j) continue;
      const double a = sample.rows[l].x[m];
      const double b = sample.rows[r].x[m];
      if (std::fabs(a - b) > kMassTol) return a < b;
    }
    return false;
  };
  auto hat_equal = [&](std::size_t l, std::size_t r) {
    for (std::size_t m = 0; m < sample.dim; ++m) {
      if (m == j) continue;
      if (std::fabs(sample.rows[l].x[m] - sample.rows[r].x[m]) > kMassTol)
        return false;
    }
    return true;
  };
  std::stable_sort(order.begin(), order.end(), hat_less);

  std::vector<std::vector<std::size_t>> slices;
  for (std::size_t r : order) {
    if (!slices.empty() && hat_equal(slices.back().front(), r))
      slices.back().push_back(r);
    else
      slices.push_back({r});
  }

  for (const auto& slice : slices) {
    double mass = 0.0, mean_x = 0.0;
    for (std::size_t r : slice) {
      mass += sample.rows[r].weight;
      mean_x += sample.rows[r].weight * sample.rows[r].x[j];
    }
    if (!(mass > 0.0) || !std::isfinite(mean_x / mass) || mean_x / mass <= 0.0)
      throw NumericalError("conditional_rearrange: bad slice mean");
  }

  CasinoSample out = sample;
  // Slices touch disjoint rows, so they can run concurrently; the output does
  // not depend on scheduling.
#pragma omp parallel for schedule(dynamic)
  for (long long s = 0; s < static_cast<long long>(slices.size()); ++s)
    rearrange_rows(out.rows, slices[static_cast<std::size_t>(s)], j, sign);
  return out;
}

CasinoSample composite_rearrange(const CasinoSample& sample,
                                 const std::vector<int>& signs) {
  if (signs.size() != sample.dim)
    throw InvalidInput("composite_rearrange: need one sign per coordinate");
  CasinoSample out = sample;
  for (std::size_t j = 0; j < signs.size(); ++j)
    out = conditional_rearrange(out, j + 1, signs[j]);
  return out;
}

NoCasinoResult rearrange_no_casino(const MultiMeasureSpace& space,
                                   const Payoff& payoff,
                                   const std::vector<int>& signs,
                                   std::size_t grid) {
  finprob::require_valid(space);
  const std::size_t n = space.measure_count();
  if (signs.size() != n)
    throw InvalidInput("rearrange_no_casino: need one sign per measure");

  if (n == 1) {
    // Case (a): the casino grid refinement stands in for the atomless space.
    const CasinoSample sample = make_casino_sample(space, payoff, grid);
    const CasinoSample done = rearrange_pm(sample, signs[0]);
    NoCasinoResult result;
    result.refined_space = finprob::product_with_casino(space, grid);
    finprob::Payoff refined;
    refined.values.reserve(space.atom_count() * grid);
    std::size_t next_row = 0;
    for (std::size_t a = 0; a < space.atom_count(); ++a) {
      if (space.base.weights[a] > 0.0) {
        for (std::size_t c = 0; c < grid; ++c)
          refined.values.push_back(done.rows[next_row++].value);
      } else {
        for (std::size_t c = 0; c < grid; ++c)
          refined.values.push_back(payoff.values[a]);
      }
    }
    result.refined_payoff = std::move(refined);
    return result;
  }

  // Case (b): every non-null atom must carry a distinct rn vector.
  std::vector<std::size_t> atoms;
  for (std::size_t a = 0; a < space.atom_count(); ++a)
    if (space.base.weights[a] > 0.0) atoms.push_back(a);
  std::vector<std::vector<double>> q(space.atom_count());
  for (std::size_t a : atoms) q[a] = finprob::rn_vector(space, a);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t k = i + 1; k < atoms.size(); ++k) {
      bool tied = true;
      for (std::size_t m = 0; m < n; ++m)
        if (std::fabs(q[atoms[i]][m] - q[atoms[k]][m]) > kMassTol) {
          tied = false;
          break;
        }
      if (tied) throw InvalidInput("casino required");
    }

  CasinoSample sample = make_casino_sample(space, payoff, 1);
  const CasinoSample done = composite_rearrange(sample, signs);

  NoCasinoResult result;
  std::vector<std::pair<std::vector<double>, double>> table;
  table.reserve(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i)
    table.emplace_back(q[atoms[i]], done.rows[i].value);
  std::sort(table.begin(), table.end());
  result.table = std::move(table);
  return result;
}

}  // namespace isomarket::rearrange
