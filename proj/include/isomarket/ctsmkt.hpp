#pragma once

// Continuous-time diffusion markets: Euler-Maruyama simulation with
// counter-based per-path random streams, the density process q_t and the
// absolute market price of risk (coefficient and realized forms), drift
// adjustment to a constant-AMPR market, canonicalization onto the Bachelier
// normal form, fund replication and Monte Carlo pricing by q-reweighting.
//
// Everything is deterministic given (model, dt, steps, n_paths, seed):
// each path owns an independent counter-based stream and reductions use
// fixed-order pairwise summation, so parallel and serial execution produce
// bit-identical results.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "isomarket/common.hpp"
#include "isomarket/linalg.hpp"
#include "isomarket/statcheck.hpp"

namespace isomarket::ctsmkt {

// Floor on A(t): the canonicalization divides by A, so strictly positive
// schedules are required.
inline constexpr double kAmprFloor = 1e-6;

enum class Family {
  bachelier_constant,   // dX = mu dt + sigma dW, constant coefficients
  gbm,                  // dX_i = drift_i X_i dt + X_i (vol dW)_i
  canonical_bachelier,  // dX = (r X + A(t) e1) dt + dW, X0 = 0
  drift_adjusted,       // sigma from a base family, mu = r x - A sigma(x) e1
};

// Piecewise-constant right-open schedule on [0, T); times[0] must be 0.
struct Schedule {
  std::vector<double> times;
  std::vector<double> values;

  static Schedule constant(double value);
  double at(double t) const;
  double integral_of_square(double t) const;  // int_0^t value(s)^2 ds
  double min_value() const;
};

struct SDEModel {
  Family family = Family::gbm;
  std::size_t dim = 1;
  double rate = 0.0;     // risk-free rate per year
  double horizon = 1.0;  // T in years
  linalg::Vector x0;

  linalg::Vector drift;     // bachelier-constant: absolute; gbm: relative
  linalg::Matrix vol;       // bachelier-constant: sigma; gbm: loading matrix
  Schedule ampr_schedule;   // canonical-bachelier A(t) / drift-adjusted target
  Family vol_family = Family::gbm;  // drift-adjusted: where sigma comes from

  void mu_at(std::span<const double> x, double t, std::span<double> out) const;
  void sigma_at(std::span<const double> x, double t, linalg::Matrix& out) const;

  // theta = sigma^{-1}(r x - mu); writes the vector and returns its norm.
  double theta_at(std::span<const double> x, double t,
                  std::span<double> out) const;

  // True when the family guarantees AMPR is a function of time alone.
  bool ampr_time_deterministic() const;
  double ampr_of_time(double t) const;
};

void require_valid(const SDEModel& model);

SDEModel make_gbm(linalg::Vector relative_drift, linalg::Matrix vol_loadings,
                  double rate, double horizon, linalg::Vector x0);
SDEModel make_bachelier(linalg::Vector drift, linalg::Matrix vol, double rate,
                        double horizon, linalg::Vector x0);
SDEModel make_canonical_bachelier(std::size_t dim, Schedule ampr, double rate,
                                  double horizon);

// Replace the drift of a volatility model by r x - A sigma(x,t) e1. Any point
// of the AMPR ellipsoid would do; fixing theta = A e1 keeps outputs
// reproducible. The resulting coefficient AMPR is identically A.
SDEModel drift_adjust(const SDEModel& vol_model, double target_ampr);

enum class Execution { parallel, serial };

// Simulated paths in path-major layout, plus derived series filled in by
// q_process and bachelier_canonicalize.
struct PathEnsemble {
  std::size_t dim = 0;
  std::size_t steps = 0;
  std::size_t n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  bool antithetic = false;

  std::vector<double> states;       // n_paths * (steps+1) * dim
  std::vector<double> increments;   // n_paths * steps * dim
  std::vector<double> log_density;  // n_paths * (steps+1), log q_t
  std::vector<std::uint8_t> overflow_flag;  // per path, |Z| above 700 seen
  std::vector<double> canon_increments;     // W~ increments, same layout as W
  std::vector<double> canon_states;         // X~, same layout as states

  bool has_density() const { return !log_density.empty(); }
  bool has_canonical() const { return !canon_increments.empty(); }

  const double* state(std::size_t path, std::size_t step) const {
    return states.data() + (path * (steps + 1) + step) * dim;
  }
  const double* increment(std::size_t path, std::size_t step) const {
    return increments.data() + (path * steps + step) * dim;
  }
  double log_q(std::size_t path, std::size_t step) const {
    return log_density[path * (steps + 1) + step];
  }
  const double* canon_increment(std::size_t path, std::size_t step) const {
    return canon_increments.data() + (path * steps + step) * dim;
  }
  const double* canon_state(std::size_t path, std::size_t step) const {
    return canon_states.data() + (path * (steps + 1) + step) * dim;
  }
};

PathEnsemble simulate(const SDEModel& model, double dt, std::size_t steps,
                      std::size_t n_paths, std::uint64_t seed,
                      bool antithetic = false,
                      Execution exec = Execution::parallel);

// Left-point discretization of Z = int theta . dW and q = exp(Z - [Z,Z]/2).
// Fills log_density and overflow flags.
void q_process(PathEnsemble& ensemble, const SDEModel& model);

double ampr_coefficient(const SDEModel& model, std::span<const double> x,
                        double t);

// Windowed realized estimates of A^2 from the q paths: ensemble average of
// (dq/q)^2 / dt over each block of `window` steps. Trailing incomplete
// windows are dropped.
std::vector<double> ampr_realized(const PathEnsemble& ensemble,
                                  std::size_t window = 32);

// Matching ensemble averages of the coefficient AMPR^2 over the same windows.
std::vector<double> ampr_coefficient_windows(const PathEnsemble& ensemble,
                                             const SDEModel& model,
                                             std::size_t window = 32);

// Deterministic orthonormal frame with first row v: completes v with the
// standard basis vectors picked by the first-index rule and orthonormalizes
// in that order. Depends only on v.
linalg::Matrix gram_schmidt_frame(const linalg::Vector& v);

// Builds W~ and X~: Z~ = log q + int A^2/2, W~1 = -int (1/A) dZ~, remaining
// components via the frame of alpha = -theta/A applied to the W increments,
// and X~ integrating dX~ = (r X~ + A(t) e1) dt + dW~ from 0. Refuses models
// whose AMPR varies across paths at fixed time by more than 5 percent.
void bachelier_canonicalize(PathEnsemble& ensemble, const SDEModel& model);

// (sigma sigma^t)^{-1} (r x - mu).
linalg::Vector mutual_fund_weights(const SDEModel& model,
                                   std::span<const double> x, double t);

struct ReplicationStats {
  double rms_error = 0.0;
  double max_abs_error = 0.0;
  double rebalance_dt = 0.0;
  std::size_t n_paths = 0;
};

// Self-financing strategy holding -(1/A)(sigma sigma^t)^{-1}(r X - mu) units
// of the risky assets, rebalanced every `rebalance_stride` simulation steps,
// tracking the first canonical Bachelier asset X~1_T. At stride 1 the
// bookkeeping reproduces X~1 step by step; coarser rebalancing loses O(sqrt
// of the rebalance interval).
ReplicationStats replicate_fund(const PathEnsemble& ensemble,
                                const SDEModel& model,
                                std::size_t rebalance_stride = 1);

struct ClaimSpec {
  enum class Kind {
    constant,
    linear,            // intercept + weights . X_T
    call,              // max(X_T[asset] - strike, 0)
    put,               // max(strike - X_T[asset], 0)
    indicator,         // 1{lower <= X_T[asset] <= upper}
    log_q_polynomial,  // sum_j coefficients[j] (log q_T)^j, degree <= 4
    call_on_q,         // max(q_T - strike, 0)
  };

  Kind kind = Kind::constant;
  double value = 1.0;
  double intercept = 0.0;
  linalg::Vector weights;
  std::size_t asset = 0;
  double strike = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> coefficients;

  std::string name() const;
  double evaluate(std::span<const double> x_terminal, double log_q_terminal) const;
  void validate(std::size_t dim) const;
};

struct PriceResult {
  double price = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

// Streaming Monte Carlo price e^{-rT} E_P[q_T payoff] with the standard error
// of the weighted sample. Paths are not stored.
PriceResult price_mc(const SDEModel& model, const ClaimSpec& claim, double dt,
                     std::size_t n_paths, std::uint64_t seed,
                     bool antithetic = false,
                     Execution exec = Execution::parallel);

// Levy characterization gates on the canonicalized increments: per-component
// quadratic variation against the horizon, cross-variation against zero,
// moment gates on the normalized increments and the covariation-rank
// dimension estimate.
struct LevyGates {
  std::vector<statcheck::TestReport> checks;
  std::size_t estimated_dimension = 0;
  bool all_pass() const;
};

LevyGates levy_gates(const PathEnsemble& ensemble);

// Largest per-step gap |dW~ - dW| over the whole ensemble; near zero exactly
// when the input was already canonical.
double canonical_roundtrip_gap(const PathEnsemble& ensemble);

// Mean of q_T against 1 within four standard errors.
statcheck::TestReport martingale_check(const PathEnsemble& ensemble);

// Least-squares slope of log RMS error against log rebalance dt.
double fitted_error_order(const std::vector<ReplicationStats>& stats);

// Plain serial implementations kept as references for the parallel kernels.
// They must produce bit-identical output; the unit tests enforce this.
namespace reference {
PathEnsemble simulate(const SDEModel& model, double dt, std::size_t steps,
                      std::size_t n_paths, std::uint64_t seed,
                      bool antithetic = false);
PriceResult price_mc(const SDEModel& model, const ClaimSpec& claim, double dt,
                     std::size_t n_paths, std::uint64_t seed,
                     bool antithetic = false);
}  // namespace reference

}  // namespace isomarket::ctsmkt
