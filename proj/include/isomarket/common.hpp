#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace isomarket {

// Measure construction tolerance (absolute): masses must sum to 1 this tightly,
// and per-coordinate profile comparisons use it when grouping atoms.
inline constexpr double kMassTol = 1e-12;

// Tolerance for derived identities (expectations, invariant matching, prices).
inline constexpr double kDerivedTol = 1e-10;

// Default casino discretization grid.
inline constexpr std::size_t kDefaultCasinoGrid = 256;

// Hard cap on group enumeration.
inline constexpr std::size_t kDefaultGroupCap = 1'000'000;

// Thrown when an input violates an operation precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown on numerical failure: singular volatility, overflow, ill conditioning.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic pairwise summation. The result depends only on the contents of
// the span, never on thread count or scheduling, so parallel producers can fill
// a buffer and reduce it here to get run-to-run identical totals.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("pairwise_mean: empty sample");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

inline bool nearly_equal(double a, double b, double tol) {
  return std::fabs(a - b) <= tol;
}

// FNV-1a, used for config hashes in run reports.
inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace isomarket
