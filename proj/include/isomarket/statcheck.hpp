#pragma once

// Statistical gates that turn distribution-level claims into pass/fail
// checks: weighted ECDFs and two-sample KS, quadratic-variation bands and a
// realized-covariation rank estimator for the driving dimension.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "isomarket/linalg.hpp"

namespace isomarket::statcheck {

// Every threshold used by the checks flows from this record.
struct CheckConfig {
  double alpha = 0.01;              // KS significance level
  double rank_rel_threshold = 1e-3; // eigenvalue cutoff relative to largest
};

struct TestReport {
  std::string description;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Weighted empirical CDF; weights are normalized on construction.
class EcdfTable {
 public:
  EcdfTable() = default;
  static EcdfTable from_sample(std::span<const double> values);
  static EcdfTable from_weighted(std::span<const double> values,
                                 std::span<const double> weights);

  double at(double x) const;    // P(X <= x)
  double left(double x) const;  // P(X < x)
  const std::vector<double>& values() const { return values_; }
  // Kish effective sample size (n for unweighted data).
  double effective_size() const { return effective_size_; }

 private:
  std::vector<double> values_;
  std::vector<double> cum_;
  double effective_size_ = 0.0;
};

// Two-sample Kolmogorov-Smirnov on weighted ECDFs. Threshold is
// c(alpha) sqrt((n+m)/(n m)) with effective sizes for weighted input.
TestReport ks_two_sample(const EcdfTable& a, const EcdfTable& b,
                         const CheckConfig& config = {});

// Sum of squared increments against a target quadratic variation, with a
// three-sigma band 3 sqrt(2 target dt) sqrt(target).
TestReport qv_check(std::span<const double> increments, double target, double dt);

// Rank of the realized covariation matrix of multichannel increments:
// eigenvalues at least rank_rel_threshold times the largest one count.
std::size_t dimension_estimate(const std::vector<std::vector<double>>& channels,
                               double dt, const CheckConfig& config = {});

struct MomentReport {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double se_mean = 0.0;
  double se_skewness = 0.0;
  double se_kurtosis = 0.0;
  std::size_t n = 0;
  bool degenerate = false;  // zero variance
};

MomentReport moment_report(std::span<const double> sample);

}  // namespace isomarket::statcheck
