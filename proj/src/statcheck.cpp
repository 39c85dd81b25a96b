#include "isomarket/statcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isomarket/common.hpp"

namespace isomarket::statcheck {

EcdfTable EcdfTable::from_sample(std::span<const double> values) {
  const std::vector<double> w(values.size(), 1.0);
  return from_weighted(values, w);
}

EcdfTable EcdfTable::from_weighted(std::span<const double> values,
                                   std::span<const double> weights) {
  if (values.empty()) throw InvalidInput("ecdf: empty sample");
  if (values.size() != weights.size())
    throw InvalidInput("ecdf: value/weight length mismatch");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });

  EcdfTable table;
  double total = 0.0, total_sq = 0.0;
  for (std::size_t k : order) {
    const double w = weights[k];
    if (w < 0.0) throw InvalidInput("ecdf: negative weight");
    total += w;
    total_sq += w * w;
    if (!table.values_.empty() && table.values_.back() == values[k])
      table.cum_.back() += w;
    else {
      table.values_.push_back(values[k]);
      table.cum_.push_back(w);
    }
  }
  if (!(total > 0.0)) throw InvalidInput("ecdf: zero total weight");
  double running = 0.0;
  for (double& c : table.cum_) {
    running += c;
    c = running / total;
  }
  table.cum_.back() = 1.0;
  table.effective_size_ = total * total / total_sq;
  return table;
}

double EcdfTable::at(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - values_.begin());
  return k == 0 ? 0.0 : cum_[k - 1];
}

double EcdfTable::left(double x) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - values_.begin());
  return k == 0 ? 0.0 : cum_[k - 1];
}

TestReport ks_two_sample(const EcdfTable& a, const EcdfTable& b,
                         const CheckConfig& config) {
  if (a.values().empty() || b.values().empty())
    throw InvalidInput("ks_two_sample: empty sample");
  double stat = 0.0;
  for (double x : a.values()) stat = std::max(stat, std::fabs(a.at(x) - b.at(x)));
  for (double x : b.values()) stat = std::max(stat, std::fabs(a.at(x) - b.at(x)));

  const double n = a.effective_size();
  const double m = b.effective_size();
  const double c_alpha = std::sqrt(-0.5 * std::log(config.alpha / 2.0));
  TestReport report;
  report.description = "two-sample KS";
  report.statistic = stat;
  report.threshold = c_alpha * std::sqrt((n + m) / (n * m));
  report.pass = stat <= report.threshold;
  report.n_a = static_cast<std::size_t>(n + 0.5);
  report.n_b = static_cast<std::size_t>(m + 0.5);
  return report;
}

TestReport qv_check(std::span<const double> increments, double target, double dt) {
  if (increments.size() < 100)
    throw InvalidInput("qv_check: need at least 100 increments");
  std::vector<double> sq(increments.size());
  for (std::size_t i = 0; i < increments.size(); ++i)
    sq[i] = increments[i] * increments[i];
  const double qv = pairwise_sum(sq);

  TestReport report;
  report.description = "quadratic variation";
  report.statistic = std::fabs(qv - target);
  report.threshold = 3.0 * std::sqrt(2.0 * std::fabs(target) * dt) *
                     std::sqrt(std::fabs(target));
  report.pass = report.statistic <= report.threshold;
  report.n_a = increments.size();
  return report;
}

std::size_t dimension_estimate(const std::vector<std::vector<double>>& channels,
                               double dt, const CheckConfig& config) {
  (void)dt;
  if (channels.empty()) throw InvalidInput("dimension_estimate: no channels");
  const std::size_t steps = channels.front().size();
  if (steps < 1000)
    throw InvalidInput("dimension_estimate: need at least 1000 steps");
  for (const auto& ch : channels)
    if (ch.size() != steps)
      throw InvalidInput("dimension_estimate: ragged channels");

  const std::size_t n = channels.size();
  linalg::Matrix cov(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < steps; ++k) s += channels[i][k] * channels[j][k];
      cov(i, j) = s;
      cov(j, i) = s;
    }
  const auto eig = linalg::symmetric_eigenvalues(cov);
  const double cutoff = config.rank_rel_threshold * std::max(eig.front(), 0.0);
  std::size_t rank = 0;
  for (double v : eig)
    if (v >= cutoff && v > 0.0) ++rank;
  return rank;
}

MomentReport moment_report(std::span<const double> sample) {
  if (sample.size() < 30)
    throw InvalidInput("moment_report: need at least 30 points");
  MomentReport report;
  report.n = sample.size();
  const double n = static_cast<double>(sample.size());
  report.mean = pairwise_mean(sample);

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : sample) {
    const double d = x - report.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  report.variance = m2 * n / (n - 1.0);
  if (m2 <= 0.0) {
    report.degenerate = true;
    return report;
  }
  report.skewness = m3 / std::pow(m2, 1.5);
  report.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  report.se_mean = std::sqrt(report.variance / n);
  report.se_skewness = std::sqrt(6.0 / n);
  report.se_kurtosis = std::sqrt(24.0 / n);
  return report;
}

}  // namespace isomarket::statcheck
