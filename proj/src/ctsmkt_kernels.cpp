#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ctsmkt_internal.hpp"
#include "isomarket/philox.hpp"

// Path kernels. The parallel entry points split work over paths with OpenMP;
// each path draws from its own counter-based stream and writes a disjoint
// slice, so the stored ensemble is identical for any thread count. The
// reference namespace holds plain serial loops performing the same arithmetic
// in the same order; the unit tests assert bitwise equality between the two.

namespace isomarket::ctsmkt {

namespace {

void check_grid(const SDEModel& model, double dt, std::size_t steps) {
  if (!(dt > 0.0) || steps == 0) throw InvalidInput("bad time grid");
  const double span = static_cast<double>(steps) * dt;
  if (std::fabs(span - model.horizon) > 1e-12 * std::max(1.0, model.horizon))
    throw InvalidInput("steps * dt must equal the horizon");
}

// Draw the step increments for one path. With antithetic pairing, paths 2m
// and 2m+1 share stream m with opposite signs.
struct IncrementSource {
  rng::NormalStream stream;
  double sign;
  double sqrt_dt;
  std::size_t dim;

  IncrementSource(std::uint64_t seed, std::size_t path, bool antithetic,
                  double dt, std::size_t dim_in)
      : stream(seed, antithetic ? (path >> 1) : path),
        sign(antithetic && (path & 1) ? -1.0 : 1.0),
        sqrt_dt(std::sqrt(dt)),
        dim(dim_in) {}

  void fill(std::size_t step, double* dw) const {
    for (std::size_t i = 0; i < dim; ++i)
      dw[i] = sign * stream.normal(step * dim + i) * sqrt_dt;
  }
};

// Simulate one path into the ensemble slices. Returns steps on success or
// the failing step index. x_buf is caller-provided scratch of size dim.
std::size_t simulate_path(const SDEModel& model, PathEnsemble& ensemble,
                          std::size_t path, double* x_buf, double* mu_buf,
                          linalg::Matrix& sigma_buf) {
  const std::size_t n = model.dim;
  const std::size_t steps = ensemble.steps;
  const IncrementSource draw(ensemble.seed, path, ensemble.antithetic,
                             ensemble.dt, n);

  double* state = ensemble.states.data() + path * (steps + 1) * n;
  double* incs = ensemble.increments.data() + path * steps * n;
  for (std::size_t i = 0; i < n; ++i) {
    state[i] = model.x0[i];
    x_buf[i] = model.x0[i];
  }

  for (std::size_t k = 0; k < steps; ++k) {
    double* dw = incs + k * n;
    draw.fill(k, dw);
    const double t = static_cast<double>(k) * ensemble.dt;
    if (!detail::euler_step(model, x_buf, t, ensemble.dt, dw, mu_buf, sigma_buf))
      return k;
    double* next = state + (k + 1) * n;
    for (std::size_t i = 0; i < n; ++i) next[i] = x_buf[i];
  }
  return steps;
}

enum class PathFailure : std::uint8_t { none, singular, overflow, payoff };

[[noreturn]] void report_failure(PathFailure kind, std::size_t path,
                                 std::size_t step) {
  std::ostringstream os;
  switch (kind) {
    case PathFailure::singular:
      os << "volatility singular";
      break;
    case PathFailure::overflow:
      os << "density exponent overflow";
      break;
    default:
      os << "non-finite payoff";
      break;
  }
  os << " along path " << path << " at step " << step;
  throw NumericalError(os.str());
}

PathEnsemble make_ensemble(const SDEModel& model, double dt, std::size_t steps,
                           std::size_t n_paths, std::uint64_t seed,
                           bool antithetic) {
  require_valid(model);
  check_grid(model, dt, steps);
  if (n_paths == 0) throw InvalidInput("need at least one path");
  PathEnsemble ensemble;
  ensemble.dim = model.dim;
  ensemble.steps = steps;
  ensemble.n_paths = n_paths;
  ensemble.dt = dt;
  ensemble.seed = seed;
  ensemble.antithetic = antithetic;
  ensemble.states.assign(n_paths * (steps + 1) * model.dim, 0.0);
  ensemble.increments.assign(n_paths * steps * model.dim, 0.0);
  return ensemble;
}

// One streaming path for the pricer: returns q_T * payoff without storing the
// trajectory. Failure is signalled through `failed_step`.
double priced_path(const SDEModel& model, const detail::ThetaEvaluator& theta_eval,
                   const ClaimSpec& claim, double dt, std::size_t steps,
                   std::uint64_t seed, std::size_t path, bool antithetic,
                   double* x_buf, double* mu_buf, linalg::Matrix& sigma_buf,
                   double* theta_buf, double* dw_buf, std::size_t* failed_step,
                   PathFailure* failure_kind) {
  const std::size_t n = model.dim;
  const IncrementSource draw(seed, path, antithetic, dt, n);
  for (std::size_t i = 0; i < n; ++i) x_buf[i] = model.x0[i];
  double log_q = 0.0;
  double z = 0.0;
  *failed_step = steps;
  *failure_kind = PathFailure::none;
  for (std::size_t k = 0; k < steps; ++k) {
    draw.fill(k, dw_buf);
    const double t = static_cast<double>(k) * dt;
    const double norm = theta_eval.eval(x_buf, t, theta_buf);
    double dz = 0.0;
    for (std::size_t i = 0; i < n; ++i) dz += theta_buf[i] * dw_buf[i];
    z += dz;
    log_q += dz - 0.5 * norm * norm * dt;
    if (std::fabs(z) > 700.0) {
      *failed_step = k;
      *failure_kind = PathFailure::overflow;
      return 0.0;
    }
    if (!detail::euler_step(model, x_buf, t, dt, dw_buf, mu_buf, sigma_buf)) {
      *failed_step = k;
      *failure_kind = PathFailure::singular;
      return 0.0;
    }
  }
  const double payoff = claim.evaluate(std::span<const double>(x_buf, n), log_q);
  if (!std::isfinite(payoff)) {
    *failed_step = steps - 1;
    *failure_kind = PathFailure::payoff;
    return 0.0;
  }
  return std::exp(log_q) * payoff;
}

PriceResult summarize_price(const SDEModel& model,
                            std::vector<double>& contributions) {
  const double discount = std::exp(-model.rate * model.horizon);
  const double mean = pairwise_mean(contributions);
  std::vector<double> sq(contributions.size());
  for (std::size_t i = 0; i < contributions.size(); ++i) {
    const double d = contributions[i] - mean;
    sq[i] = d * d;
  }
  const double n = static_cast<double>(contributions.size());
  const double variance = n > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  PriceResult result;
  result.price = discount * mean;
  result.std_error = discount * std::sqrt(variance / n);
  result.n_paths = contributions.size();
  return result;
}

}  // namespace

PathEnsemble simulate(const SDEModel& model, double dt, std::size_t steps,
                      std::size_t n_paths, std::uint64_t seed, bool antithetic,
                      Execution exec) {
  PathEnsemble ensemble = make_ensemble(model, dt, steps, n_paths, seed,
                                        antithetic);
  std::vector<std::size_t> failure(n_paths, steps);

  if (exec == Execution::serial) {
    std::vector<double> x(model.dim), mu(model.dim);
    linalg::Matrix sigma(model.dim, model.dim);
    for (std::size_t p = 0; p < n_paths; ++p)
      failure[p] = simulate_path(model, ensemble, p, x.data(), mu.data(), sigma);
  } else {
#pragma omp parallel
    {
      std::vector<double> x(model.dim), mu(model.dim);
      linalg::Matrix sigma(model.dim, model.dim);
#pragma omp for schedule(static)
      for (long long p = 0; p < static_cast<long long>(n_paths); ++p)
        failure[static_cast<std::size_t>(p)] =
            simulate_path(model, ensemble, static_cast<std::size_t>(p),
                          x.data(), mu.data(), sigma);
    }
  }

  for (std::size_t p = 0; p < n_paths; ++p)
    if (failure[p] != steps)
      report_failure(PathFailure::singular, p, failure[p]);
  return ensemble;
}

PriceResult price_mc(const SDEModel& model, const ClaimSpec& claim, double dt,
                     std::size_t n_paths, std::uint64_t seed, bool antithetic,
                     Execution exec) {
  require_valid(model);
  claim.validate(model.dim);
  const double steps_real = model.horizon / dt;
  const std::size_t steps = static_cast<std::size_t>(steps_real + 0.5);
  check_grid(model, dt, steps);
  if (n_paths == 0) throw InvalidInput("need at least one path");

  const detail::ThetaEvaluator theta_eval(model);
  std::vector<double> contributions(n_paths, 0.0);
  std::vector<std::size_t> failure(n_paths, steps);
  std::vector<PathFailure> kinds(n_paths, PathFailure::none);

  if (exec == Execution::serial) {
    std::vector<double> x(model.dim), mu(model.dim), theta(model.dim),
        dw(model.dim);
    linalg::Matrix sigma(model.dim, model.dim);
    for (std::size_t p = 0; p < n_paths; ++p)
      contributions[p] = priced_path(model, theta_eval, claim, dt, steps, seed,
                                     p, antithetic, x.data(), mu.data(), sigma,
                                     theta.data(), dw.data(), &failure[p],
                                     &kinds[p]);
  } else {
#pragma omp parallel
    {
      std::vector<double> x(model.dim), mu(model.dim), theta(model.dim),
          dw(model.dim);
      linalg::Matrix sigma(model.dim, model.dim);
#pragma omp for schedule(static)
      for (long long p = 0; p < static_cast<long long>(n_paths); ++p) {
        const std::size_t path = static_cast<std::size_t>(p);
        contributions[path] = priced_path(model, theta_eval, claim, dt, steps,
                                          seed, path, antithetic, x.data(),
                                          mu.data(), sigma, theta.data(),
                                          dw.data(), &failure[path],
                                          &kinds[path]);
      }
    }
  }

  for (std::size_t p = 0; p < n_paths; ++p)
    if (kinds[p] != PathFailure::none) report_failure(kinds[p], p, failure[p]);
  return summarize_price(model, contributions);
}

// Straight-line implementations, no shared path helpers and no OpenMP. They
// redo the stepping arithmetic in the same operation order as the kernels;
// if a kernel change perturbs results, the equality tests against these will
// say so.
namespace reference {

PathEnsemble simulate(const SDEModel& model, double dt, std::size_t steps,
                      std::size_t n_paths, std::uint64_t seed, bool antithetic) {
  require_valid(model);
  check_grid(model, dt, steps);
  if (n_paths == 0) throw InvalidInput("need at least one path");

  PathEnsemble ensemble;
  ensemble.dim = model.dim;
  ensemble.steps = steps;
  ensemble.n_paths = n_paths;
  ensemble.dt = dt;
  ensemble.seed = seed;
  ensemble.antithetic = antithetic;
  ensemble.states.assign(n_paths * (steps + 1) * model.dim, 0.0);
  ensemble.increments.assign(n_paths * steps * model.dim, 0.0);

  const std::size_t n = model.dim;
  const double sqrt_dt = std::sqrt(dt);
  std::vector<double> mu(n), x(n);
  linalg::Matrix sigma(n, n);

  for (std::size_t p = 0; p < n_paths; ++p) {
    const rng::NormalStream stream(seed, antithetic ? (p >> 1) : p);
    const double sign = (antithetic && (p & 1)) ? -1.0 : 1.0;
    double* state = ensemble.states.data() + p * (steps + 1) * n;
    double* incs = ensemble.increments.data() + p * steps * n;

    for (std::size_t i = 0; i < n; ++i) x[i] = model.x0[i];
    for (std::size_t i = 0; i < n; ++i) state[i] = x[i];
    for (std::size_t k = 0; k < steps; ++k) {
      double* dw = incs + k * n;
      for (std::size_t i = 0; i < n; ++i)
        dw[i] = sign * stream.normal(k * n + i) * sqrt_dt;
      const double t = static_cast<double>(k) * dt;
      if (detail::sigma_singular_at(model, x.data()))
        report_failure(PathFailure::singular, p, k);
      model.mu_at(std::span<const double>(x.data(), n), t,
                  std::span<double>(mu.data(), n));
      model.sigma_at(std::span<const double>(x.data(), n), t, sigma);
      for (std::size_t i = 0; i < n; ++i) {
        double diffusion = 0.0;
        for (std::size_t j = 0; j < n; ++j) diffusion += sigma(i, j) * dw[j];
        x[i] += mu[i] * dt + diffusion;
      }
      double* next = state + (k + 1) * n;
      for (std::size_t i = 0; i < n; ++i) next[i] = x[i];
    }
  }
  return ensemble;
}

PriceResult price_mc(const SDEModel& model, const ClaimSpec& claim, double dt,
                     std::size_t n_paths, std::uint64_t seed, bool antithetic) {
  require_valid(model);
  claim.validate(model.dim);
  const std::size_t steps =
      static_cast<std::size_t>(model.horizon / dt + 0.5);
  check_grid(model, dt, steps);
  if (n_paths == 0) throw InvalidInput("need at least one path");

  const detail::ThetaEvaluator theta_eval(model);
  const std::size_t n = model.dim;
  const double sqrt_dt = std::sqrt(dt);
  std::vector<double> mu(n), theta(n), dw(n), x(n);
  linalg::Matrix sigma(n, n);
  std::vector<double> contributions(n_paths, 0.0);

  for (std::size_t p = 0; p < n_paths; ++p) {
    const rng::NormalStream stream(seed, antithetic ? (p >> 1) : p);
    const double sign = (antithetic && (p & 1)) ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = model.x0[i];
    double log_q = 0.0;
    double z = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      for (std::size_t i = 0; i < n; ++i)
        dw[i] = sign * stream.normal(k * n + i) * sqrt_dt;
      const double t = static_cast<double>(k) * dt;
      const double norm = theta_eval.eval(x.data(), t, theta.data());
      double dz = 0.0;
      for (std::size_t i = 0; i < n; ++i) dz += theta[i] * dw[i];
      z += dz;
      log_q += dz - 0.5 * norm * norm * dt;
      if (std::fabs(z) > 700.0) report_failure(PathFailure::overflow, p, k);
      if (detail::sigma_singular_at(model, x.data()))
        report_failure(PathFailure::singular, p, k);
      model.mu_at(std::span<const double>(x.data(), n), t,
                  std::span<double>(mu.data(), n));
      model.sigma_at(std::span<const double>(x.data(), n), t, sigma);
      for (std::size_t i = 0; i < n; ++i) {
        double diffusion = 0.0;
        for (std::size_t j = 0; j < n; ++j) diffusion += sigma(i, j) * dw[j];
        x[i] += mu[i] * dt + diffusion;
      }
    }
    const double payoff =
        claim.evaluate(std::span<const double>(x.data(), n), log_q);
    if (!std::isfinite(payoff))
      report_failure(PathFailure::payoff, p, steps - 1);
    contributions[p] = std::exp(log_q) * payoff;
  }

  const double discount = std::exp(-model.rate * model.horizon);
  const double mean = pairwise_mean(contributions);
  std::vector<double> sq(contributions.size());
  for (std::size_t i = 0; i < contributions.size(); ++i) {
    const double d = contributions[i] - mean;
    sq[i] = d * d;
  }
  const double count = static_cast<double>(n_paths);
  const double variance = count > 1 ? pairwise_sum(sq) / (count - 1.0) : 0.0;
  PriceResult result;
  result.price = discount * mean;
  result.std_error = discount * std::sqrt(variance / count);
  result.n_paths = n_paths;
  return result;
}

}  // namespace reference

}  // namespace isomarket::ctsmkt
