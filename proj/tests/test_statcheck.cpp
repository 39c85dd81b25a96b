#include "isomarket/statcheck.hpp"

#include <cmath>
#include <doctest.h>

#include "isomarket/common.hpp"
#include "isomarket/philox.hpp"
#include "oracles.hpp"

using namespace isomarket;

TEST_CASE("two-sample KS basics") {
  const std::vector<double> sample{1.0, 2.0, 3.0, 4.0};
  const auto ecdf = statcheck::EcdfTable::from_sample(sample);
  const auto same = statcheck::ks_two_sample(ecdf, ecdf);
  CHECK(same.statistic == 0.0);
  CHECK(same.pass);

  std::vector<double> left, right;
  for (int i = 0; i < 40; ++i) {
    left.push_back(static_cast<double>(i));
    right.push_back(100.0 + static_cast<double>(i));
  }
  const auto disjoint =
      statcheck::ks_two_sample(statcheck::EcdfTable::from_sample(left),
                               statcheck::EcdfTable::from_sample(right));
  CHECK(disjoint.statistic == doctest::Approx(1.0));
  CHECK_FALSE(disjoint.pass);
}

TEST_CASE("KS is symmetric and invariant under increasing transformations") {
  testing::TestRng rng(139);
  std::vector<double> a(400), b(400);
  for (double& x : a) x = rng.normal();
  for (double& x : b) x = rng.normal() * 1.3;
  const auto ea = statcheck::EcdfTable::from_sample(a);
  const auto eb = statcheck::EcdfTable::from_sample(b);
  const auto ab = statcheck::ks_two_sample(ea, eb);
  const auto ba = statcheck::ks_two_sample(eb, ea);
  CHECK(ab.statistic == ba.statistic);

  auto warp = [](std::vector<double> v) {
    for (double& x : v) x = std::exp(x);  // strictly increasing
    return v;
  };
  const auto warped = statcheck::ks_two_sample(
      statcheck::EcdfTable::from_sample(warp(a)),
      statcheck::EcdfTable::from_sample(warp(b)));
  CHECK(warped.statistic == doctest::Approx(ab.statistic).epsilon(1e-12));
}

TEST_CASE("KS calibration: same-law samples pass at the 1 percent level") {
  int passes = 0;
  for (int rep = 0; rep < 100; ++rep) {
    testing::TestRng rng(1000 + rep);
    std::vector<double> a(1000), b(1000);
    for (double& x : a) x = rng.uniform();
    for (double& x : b) x = rng.uniform();
    const auto report =
        statcheck::ks_two_sample(statcheck::EcdfTable::from_sample(a),
                                 statcheck::EcdfTable::from_sample(b));
    if (report.pass) ++passes;
  }
  CHECK(passes >= 98);
}

TEST_CASE("weighted ECDF matches an equivalent expanded sample") {
  const std::vector<double> values{1.0, 2.0, 3.0};
  const std::vector<double> weights{0.5, 0.25, 0.25};
  const auto weighted = statcheck::EcdfTable::from_weighted(values, weights);
  const auto expanded =
      statcheck::EcdfTable::from_sample(std::vector<double>{1, 1, 2, 3});
  for (double x : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5})
    CHECK(weighted.at(x) == doctest::Approx(expanded.at(x)).epsilon(1e-12));
  CHECK(weighted.effective_size() == doctest::Approx(1.0 / 0.375));
}

TEST_CASE("qv_check bands Brownian sums and rejects drift paths") {
  const double dt = 1e-3;
  const std::size_t steps = 1000;
  int passes = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const rng::NormalStream stream(2024, static_cast<std::uint64_t>(rep));
    std::vector<double> increments(steps);
    for (std::size_t k = 0; k < steps; ++k)
      increments[k] = stream.normal(k) * std::sqrt(dt);
    if (statcheck::qv_check(increments, 1.0, dt).pass) ++passes;
  }
  CHECK(passes >= 99);

  std::vector<double> linear(steps, 1.0 * dt);
  CHECK_FALSE(statcheck::qv_check(linear, 1.0, dt).pass);

  const rng::NormalStream stream(7, 0);
  std::vector<double> scaled(steps);
  for (std::size_t k = 0; k < steps; ++k)
    scaled[k] = 2.0 * stream.normal(k) * std::sqrt(dt);
  CHECK(statcheck::qv_check(scaled, 4.0, dt).pass);

  CHECK_THROWS_AS(statcheck::qv_check(std::vector<double>(10, 0.1), 1.0, dt),
                  InvalidInput);
}

TEST_CASE("dimension_estimate counts independent channels") {
  const double dt = 1e-3;
  const std::size_t steps = 4000;
  auto brownian = [&](std::uint64_t stream_id) {
    const rng::NormalStream stream(99, stream_id);
    std::vector<double> inc(steps);
    for (std::size_t k = 0; k < steps; ++k)
      inc[k] = stream.normal(k) * std::sqrt(dt);
    return inc;
  };

  const auto w1 = brownian(0);
  const auto w2 = brownian(1);
  const auto w3 = brownian(2);
  CHECK(statcheck::dimension_estimate({w1, w2, w3}, dt) == 3);
  CHECK(statcheck::dimension_estimate({w1, w1}, dt) == 1);

  std::vector<double> sum(steps);
  for (std::size_t k = 0; k < steps; ++k) sum[k] = w1[k] + w2[k];
  CHECK(statcheck::dimension_estimate({w1, w2, sum}, dt) == 2);

  // Invariance under permutation and orthogonal mixing.
  CHECK(statcheck::dimension_estimate({w2, w1, sum}, dt) == 2);
  const double c = std::sqrt(0.5);
  std::vector<double> mix1(steps), mix2(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    mix1[k] = c * w1[k] + c * w2[k];
    mix2[k] = c * w1[k] - c * w2[k];
  }
  CHECK(statcheck::dimension_estimate({mix1, mix2}, dt) == 2);
}

TEST_CASE("moment_report flags degenerate samples and matches known laws") {
  CHECK(statcheck::moment_report(std::vector<double>(50, 3.0)).degenerate);

  testing::TestRng rng(149);
  std::vector<double> normal(100'000);
  for (double& x : normal) x = rng.normal();
  const auto gauss_moments = statcheck::moment_report(normal);
  CHECK(std::fabs(gauss_moments.skewness) < 0.1);
  CHECK(std::fabs(gauss_moments.excess_kurtosis) < 0.2);
  CHECK(std::fabs(gauss_moments.mean) < 0.02);

  std::vector<double> uniform(100'000);
  for (double& x : uniform) x = rng.uniform();
  const auto flat_moments = statcheck::moment_report(uniform);
  CHECK(flat_moments.excess_kurtosis == doctest::Approx(-1.2).epsilon(0.05));
  CHECK(flat_moments.variance == doctest::Approx(1.0 / 12.0).epsilon(0.05));

  CHECK_THROWS_AS(statcheck::moment_report(std::vector<double>(10, 1.0)),
                  InvalidInput);
}
