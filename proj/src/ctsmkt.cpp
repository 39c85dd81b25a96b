#include "isomarket/ctsmkt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctsmkt_internal.hpp"

namespace isomarket::ctsmkt {

using linalg::Matrix;
using linalg::Vector;

Schedule Schedule::constant(double value) {
  Schedule s;
  s.times = {0.0};
  s.values = {value};
  return s;
}

double Schedule::at(double t) const {
  if (times.empty()) throw InvalidInput("empty schedule");
  std::size_t k = 0;
  while (k + 1 < times.size() && times[k + 1] <= t) ++k;
  return values[k];
}

double Schedule::integral_of_square(double t) const {
  if (times.empty()) throw InvalidInput("empty schedule");
  double total = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double left = times[k];
    if (left >= t) break;
    const double right = (k + 1 < times.size()) ? std::min(times[k + 1], t) : t;
    if (right > left) total += values[k] * values[k] * (right - left);
  }
  return total;
}

double Schedule::min_value() const {
  if (values.empty()) throw InvalidInput("empty schedule");
  return *std::min_element(values.begin(), values.end());
}

void SDEModel::mu_at(std::span<const double> x, double t,
                     std::span<double> out) const {
  switch (family) {
    case Family::bachelier_constant:
      for (std::size_t i = 0; i < dim; ++i) out[i] = drift[i];
      return;
    case Family::gbm:
      for (std::size_t i = 0; i < dim; ++i) out[i] = drift[i] * x[i];
      return;
    case Family::canonical_bachelier:
      for (std::size_t i = 0; i < dim; ++i) out[i] = rate * x[i];
      out[0] += ampr_schedule.at(t);
      return;
    case Family::drift_adjusted: {
      // mu = r x - A sigma(x, t) e1; the first sigma column suffices.
      const double a = ampr_schedule.at(t);
      if (vol_family == Family::gbm) {
        for (std::size_t i = 0; i < dim; ++i)
          out[i] = rate * x[i] - a * x[i] * vol(i, 0);
      } else {
        for (std::size_t i = 0; i < dim; ++i)
          out[i] = rate * x[i] - a * vol(i, 0);
      }
      return;
    }
  }
  throw InvalidInput("unknown family");
}

void SDEModel::sigma_at(std::span<const double> x, double t,
                        Matrix& out) const {
  (void)t;
  if (out.rows() != dim || out.cols() != dim) out = Matrix(dim, dim);
  switch (family) {
    case Family::bachelier_constant:
      out = vol;
      return;
    case Family::gbm:
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) out(i, j) = x[i] * vol(i, j);
      return;
    case Family::canonical_bachelier:
      out = Matrix::identity(dim);
      return;
    case Family::drift_adjusted:
      if (vol_family == Family::gbm) {
        for (std::size_t i = 0; i < dim; ++i)
          for (std::size_t j = 0; j < dim; ++j) out(i, j) = x[i] * vol(i, j);
      } else {
        out = vol;
      }
      return;
  }
  throw InvalidInput("unknown family");
}

double SDEModel::theta_at(std::span<const double> x, double t,
                          std::span<double> out) const {
  Matrix sigma;
  sigma_at(x, t, sigma);
  Vector rhs(dim);
  Vector mu(dim);
  mu_at(x, t, std::span<double>(mu.data(), dim));
  for (std::size_t i = 0; i < dim; ++i) rhs[i] = rate * x[i] - mu[i];
  Vector theta;
  try {
    theta = linalg::lu_solve(sigma, rhs);
  } catch (const NumericalError&) {
    throw NumericalError("theta: singular volatility matrix");
  }
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = theta[i];
    norm_sq += theta[i] * theta[i];
  }
  return std::sqrt(norm_sq);
}

bool SDEModel::ampr_time_deterministic() const {
  switch (family) {
    case Family::gbm:
    case Family::canonical_bachelier:
    case Family::drift_adjusted:
      return true;
    case Family::bachelier_constant:
      return rate == 0.0;
  }
  return false;
}

double SDEModel::ampr_of_time(double t) const {
  switch (family) {
    case Family::canonical_bachelier:
    case Family::drift_adjusted:
      return ampr_schedule.at(t);
    case Family::gbm: {
      // theta = vol^{-1}(r - drift) independent of the state.
      Vector rhs(dim);
      for (std::size_t i = 0; i < dim; ++i) rhs[i] = rate - drift[i];
      return linalg::norm(linalg::lu_solve(vol, rhs));
    }
    case Family::bachelier_constant: {
      if (rate != 0.0)
        throw InvalidInput("AMPR is state dependent for this model");
      Vector rhs(dim);
      for (std::size_t i = 0; i < dim; ++i) rhs[i] = -drift[i];
      return linalg::norm(linalg::lu_solve(vol, rhs));
    }
  }
  (void)t;
  throw InvalidInput("unknown family");
}

void require_valid(const SDEModel& model) {
  if (model.dim == 0) throw InvalidInput("model dimension must be positive");
  if (!(model.horizon > 0.0)) throw InvalidInput("horizon must be positive");
  if (model.x0.size() != model.dim) throw InvalidInput("x0 dimension mismatch");
  const bool needs_vol = model.family == Family::bachelier_constant ||
                         model.family == Family::gbm ||
                         model.family == Family::drift_adjusted;
  if (needs_vol &&
      (model.vol.rows() != model.dim || model.vol.cols() != model.dim))
    throw InvalidInput("volatility matrix dimension mismatch");

  Matrix sigma0;
  model.sigma_at(std::span<const double>(model.x0.data(), model.dim), 0.0,
                 sigma0);
  if (linalg::condition_estimate(sigma0) >= 1e8)
    throw NumericalError("volatility matrix ill-conditioned at X0");

  if (model.family == Family::canonical_bachelier &&
      model.ampr_schedule.min_value() < kAmprFloor)
    throw InvalidInput("canonical Bachelier needs A(t) >= 1e-6");
}

SDEModel make_gbm(Vector relative_drift, Matrix vol_loadings, double rate,
                  double horizon, Vector x0) {
  SDEModel m;
  m.family = Family::gbm;
  m.dim = relative_drift.size();
  m.drift = std::move(relative_drift);
  m.vol = std::move(vol_loadings);
  m.rate = rate;
  m.horizon = horizon;
  m.x0 = std::move(x0);
  require_valid(m);
  return m;
}

SDEModel make_bachelier(Vector drift, Matrix vol, double rate, double horizon,
                        Vector x0) {
  SDEModel m;
  m.family = Family::bachelier_constant;
  m.dim = drift.size();
  m.drift = std::move(drift);
  m.vol = std::move(vol);
  m.rate = rate;
  m.horizon = horizon;
  m.x0 = std::move(x0);
  require_valid(m);
  return m;
}

SDEModel make_canonical_bachelier(std::size_t dim, Schedule ampr, double rate,
                                  double horizon) {
  SDEModel m;
  m.family = Family::canonical_bachelier;
  m.dim = dim;
  m.ampr_schedule = std::move(ampr);
  m.rate = rate;
  m.horizon = horizon;
  m.x0 = Vector(dim, 0.0);
  require_valid(m);
  return m;
}

SDEModel drift_adjust(const SDEModel& vol_model, double target_ampr) {
  if (target_ampr < 0.0) throw InvalidInput("target AMPR must be >= 0");
  if (vol_model.family == Family::canonical_bachelier ||
      vol_model.family == Family::drift_adjusted)
    throw InvalidInput("drift_adjust expects a plain volatility model");
  SDEModel m = vol_model;
  m.family = Family::drift_adjusted;
  m.vol_family = vol_model.family;
  m.ampr_schedule = Schedule::constant(target_ampr);
  require_valid(m);
  return m;
}

namespace detail {

ThetaEvaluator::ThetaEvaluator(const SDEModel& model) : model_(&model) {
  switch (model.family) {
    case Family::gbm: {
      Vector rhs(model.dim);
      for (std::size_t i = 0; i < model.dim; ++i) rhs[i] = model.rate - model.drift[i];
      constant_theta_ = linalg::lu_solve(model.vol, rhs);
      constant_norm_ = linalg::norm(constant_theta_);
      kind_ = Kind::constant;
      return;
    }
    case Family::drift_adjusted: {
      constant_theta_.assign(model.dim, 0.0);
      constant_theta_[0] = model.ampr_schedule.at(0.0);
      constant_norm_ = constant_theta_[0];
      kind_ = Kind::constant;
      return;
    }
    case Family::canonical_bachelier:
      kind_ = Kind::time_only;
      return;
    case Family::bachelier_constant:
      if (model.rate == 0.0) {
        Vector rhs(model.dim);
        for (std::size_t i = 0; i < model.dim; ++i) rhs[i] = -model.drift[i];
        constant_theta_ = linalg::lu_solve(model.vol, rhs);
        constant_norm_ = linalg::norm(constant_theta_);
        kind_ = Kind::constant;
      } else {
        kind_ = Kind::state_dependent;
      }
      return;
  }
  throw InvalidInput("unknown family");
}

double ThetaEvaluator::eval(const double* x, double t, double* out) const {
  const std::size_t n = model_->dim;
  switch (kind_) {
    case Kind::constant:
      for (std::size_t i = 0; i < n; ++i) out[i] = constant_theta_[i];
      return constant_norm_;
    case Kind::time_only: {
      const double a = model_->ampr_schedule.at(t);
      for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
      out[0] = -a;
      return a;
    }
    case Kind::state_dependent:
      return model_->theta_at(std::span<const double>(x, n), t,
                              std::span<double>(out, n));
  }
  return 0.0;
}

}  // namespace detail

void q_process(PathEnsemble& ensemble, const SDEModel& model) {
  if (ensemble.states.empty()) throw InvalidInput("q_process: empty ensemble");
  if (ensemble.dim != model.dim) throw InvalidInput("q_process: dim mismatch");
  const detail::ThetaEvaluator theta_eval(model);
  const std::size_t steps = ensemble.steps;
  const double dt = ensemble.dt;

  ensemble.log_density.assign(ensemble.n_paths * (steps + 1), 0.0);
  ensemble.overflow_flag.assign(ensemble.n_paths, 0);

#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(ensemble.n_paths); ++p) {
    const std::size_t path = static_cast<std::size_t>(p);
    std::vector<double> theta(ensemble.dim);
    double log_q = 0.0;
    double z = 0.0;
    bool flagged = false;
    double* out = ensemble.log_density.data() + path * (steps + 1);
    out[0] = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const double norm =
          theta_eval.eval(ensemble.state(path, k), t, theta.data());
      const double* dw = ensemble.increment(path, k);
      double dz = 0.0;
      for (std::size_t i = 0; i < ensemble.dim; ++i) dz += theta[i] * dw[i];
      z += dz;
      if (std::fabs(z) > 700.0) flagged = true;
      log_q += dz - 0.5 * norm * norm * dt;
      out[k + 1] = log_q;
    }
    ensemble.overflow_flag[path] = flagged ? 1 : 0;
  }
}

double ampr_coefficient(const SDEModel& model, std::span<const double> x,
                        double t) {
  Vector theta(model.dim);
  return model.theta_at(x, t, std::span<double>(theta.data(), model.dim));
}

namespace {

// Per-window per-path sums reduced pairwise over paths, scaled to a rate.
std::vector<double> reduce_windows(std::vector<std::vector<double>>& per_path,
                                   std::size_t window, std::size_t n_paths,
                                   double dt) {
  std::vector<double> out(per_path.size());
  const double scale = 1.0 / (static_cast<double>(n_paths) *
                              static_cast<double>(window) * dt);
  for (std::size_t w = 0; w < per_path.size(); ++w)
    out[w] = pairwise_sum(per_path[w]) * scale;
  return out;
}

}  // namespace

std::vector<double> ampr_realized(const PathEnsemble& ensemble,
                                  std::size_t window) {
  if (window == 0) throw InvalidInput("window must be positive");
  if (!ensemble.has_density())
    throw InvalidInput("ampr_realized: run q_process first");
  const std::size_t n_windows = ensemble.steps / window;
  std::vector<std::vector<double>> per_path(
      n_windows, std::vector<double>(ensemble.n_paths, 0.0));

#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(ensemble.n_paths); ++p) {
    const std::size_t path = static_cast<std::size_t>(p);
    for (std::size_t w = 0; w < n_windows; ++w) {
      double sum = 0.0;
      for (std::size_t k = w * window; k < (w + 1) * window; ++k) {
        const double rel =
            std::exp(ensemble.log_q(path, k + 1) - ensemble.log_q(path, k)) - 1.0;
        sum += rel * rel;
      }
      per_path[w][path] = sum;
    }
  }
  return reduce_windows(per_path, window, ensemble.n_paths, ensemble.dt);
}

std::vector<double> ampr_coefficient_windows(const PathEnsemble& ensemble,
                                             const SDEModel& model,
                                             std::size_t window) {
  if (window == 0) throw InvalidInput("window must be positive");
  const detail::ThetaEvaluator theta_eval(model);
  const double dt = ensemble.dt;
  const std::size_t n_windows = ensemble.steps / window;
  std::vector<std::vector<double>> per_path(
      n_windows, std::vector<double>(ensemble.n_paths, 0.0));

#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(ensemble.n_paths); ++p) {
    const std::size_t path = static_cast<std::size_t>(p);
    std::vector<double> theta(ensemble.dim);
    for (std::size_t w = 0; w < n_windows; ++w) {
      double sum = 0.0;
      for (std::size_t k = w * window; k < (w + 1) * window; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double norm =
            theta_eval.eval(ensemble.state(path, k), t, theta.data());
        sum += norm * norm * dt;
      }
      per_path[w][path] = sum;
    }
  }
  return reduce_windows(per_path, window, ensemble.n_paths, ensemble.dt);
}

Matrix gram_schmidt_frame(const Vector& v) {
  const std::size_t n = v.size();
  if (n == 0) throw InvalidInput("empty vector");
  if (std::fabs(linalg::norm(v) - 1.0) > 1e-10)
    throw InvalidInput("gram_schmidt_frame: input must be a unit vector");

  // Basis {v, e_{i_2}, ..., e_{i_n}} with i_k the first index whose span with
  // v reaches dimension k; then orthonormalize in that order.
  std::vector<Vector> basis{v};
  std::size_t dim_reached = 1;
  for (std::size_t i = 0; i < n && basis.size() < n; ++i) {
    // span(v, e_1..e_{i+1}) grows beyond span(v, e_1..e_i) unless e_{i+1}
    // is already inside; track by testing the tail of v.
    bool tail_nonzero = false;
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::fabs(v[j]) > 1e-12) {
        tail_nonzero = true;
        break;
      }
    const std::size_t dim_with = (i + 1) + (tail_nonzero ? 1 : 0);
    if (dim_with >= dim_reached + 1) {
      Vector e(n, 0.0);
      e[i] = 1.0;
      basis.push_back(std::move(e));
      ++dim_reached;
    }
  }

  Matrix frame(n, n);
  std::vector<Vector> rows;
  for (auto& b : basis) {
    Vector w = b;
    for (const auto& r : rows) {
      const double c = linalg::dot(r, w);
      for (std::size_t i = 0; i < n; ++i) w[i] -= c * r[i];
    }
    const double len = linalg::norm(w);
    if (len <= 1e-12) throw NumericalError("gram_schmidt_frame: degenerate basis");
    for (double& x : w) x /= len;
    rows.push_back(std::move(w));
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) frame(r, c) = rows[r][c];
  return frame;
}

namespace {

// A(t_k) per step. Time-deterministic families answer analytically; other
// models pass the 5 percent cross-path gate or are refused.
std::vector<double> deterministic_ampr_per_step(const PathEnsemble& ensemble,
                                                const SDEModel& model) {
  const std::size_t steps = ensemble.steps;
  std::vector<double> a(steps);
  if (model.ampr_time_deterministic()) {
    for (std::size_t k = 0; k < steps; ++k)
      a[k] = model.ampr_of_time(static_cast<double>(k) * ensemble.dt);
    return a;
  }

  std::vector<double> theta(model.dim);
  std::vector<double> norms(ensemble.n_paths);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * ensemble.dt;
    double lo = 0.0, hi = 0.0;
    for (std::size_t p = 0; p < ensemble.n_paths; ++p) {
      const double norm = model.theta_at(
          std::span<const double>(ensemble.state(p, k), model.dim), t,
          std::span<double>(theta.data(), model.dim));
      norms[p] = norm;
      if (p == 0) {
        lo = hi = norm;
      } else {
        lo = std::min(lo, norm);
        hi = std::max(hi, norm);
      }
    }
    const double mean = pairwise_mean(norms);
    if (mean <= 0.0 || (hi - lo) > 0.05 * mean)
      throw NumericalError(
          "AMPR varies across paths at fixed time; canonicalization refused");
    a[k] = mean;
  }
  return a;
}

}  // namespace

void bachelier_canonicalize(PathEnsemble& ensemble, const SDEModel& model) {
  if (ensemble.states.empty())
    throw InvalidInput("bachelier_canonicalize: empty ensemble");
  if (ensemble.dim != model.dim)
    throw InvalidInput("bachelier_canonicalize: dim mismatch");
  if (!ensemble.has_density()) q_process(ensemble, model);

  const std::size_t steps = ensemble.steps;
  const std::size_t n = ensemble.dim;
  const double dt = ensemble.dt;

  const std::vector<double> a = deterministic_ampr_per_step(ensemble, model);
  for (double v : a)
    if (v < kAmprFloor)
      throw NumericalError("bachelier_canonicalize: A(t) below the 1e-6 floor");

  const detail::ThetaEvaluator theta_eval(model);

  // Constant theta means one frame for the whole ensemble.
  Matrix fixed_frame;
  bool have_fixed_frame = false;
  if (theta_eval.is_constant()) {
    std::vector<double> theta(n);
    const double norm = theta_eval.eval(ensemble.state(0, 0), 0.0, theta.data());
    Vector alpha(n);
    for (std::size_t i = 0; i < n; ++i) alpha[i] = -theta[i] / norm;
    fixed_frame = gram_schmidt_frame(alpha);
    have_fixed_frame = true;
  }

  ensemble.canon_increments.assign(ensemble.n_paths * steps * n, 0.0);
  ensemble.canon_states.assign(ensemble.n_paths * (steps + 1) * n, 0.0);

#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(ensemble.n_paths); ++p) {
    const std::size_t path = static_cast<std::size_t>(p);
    std::vector<double> theta(n);
    Vector alpha(n);
    Matrix frame = fixed_frame;
    double half_int_a2 = 0.0;
    double z_tilde_prev = 0.0;

    double* canon_inc = ensemble.canon_increments.data() + path * steps * n;
    double* canon_state = ensemble.canon_states.data() + path * (steps + 1) * n;
    for (std::size_t i = 0; i < n; ++i) canon_state[i] = 0.0;

    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const double ak = a[k];
      half_int_a2 += 0.5 * ak * ak * dt;
      const double z_tilde = ensemble.log_q(path, k + 1) + half_int_a2;
      const double dw1 = -(z_tilde - z_tilde_prev) / ak;
      z_tilde_prev = z_tilde;

      const double norm = theta_eval.eval(ensemble.state(path, k), t, theta.data());
      if (!have_fixed_frame) {
        for (std::size_t i = 0; i < n; ++i) alpha[i] = -theta[i] / norm;
        frame = gram_schmidt_frame(alpha);
      }

      const double* dw = ensemble.increment(path, k);
      double* out = canon_inc + k * n;
      out[0] = dw1;
      for (std::size_t r = 1; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += frame(r, c) * dw[c];
        out[r] = s;
      }

      const double* prev = canon_state + k * n;
      double* next = canon_state + (k + 1) * n;
      for (std::size_t i = 0; i < n; ++i)
        next[i] = prev[i] + model.rate * prev[i] * dt + out[i];
      next[0] += ak * dt;
    }
  }
}

Vector mutual_fund_weights(const SDEModel& model, std::span<const double> x,
                           double t) {
  Matrix sigma;
  model.sigma_at(x, t, sigma);
  const Matrix gram = linalg::matmul(sigma, linalg::transpose(sigma));
  Vector mu(model.dim);
  model.mu_at(x, t, std::span<double>(mu.data(), model.dim));
  Vector rhs(model.dim);
  for (std::size_t i = 0; i < model.dim; ++i) rhs[i] = model.rate * x[i] - mu[i];
  try {
    return linalg::lu_solve(gram, rhs);
  } catch (const NumericalError&) {
    throw NumericalError("mutual_fund_weights: singular volatility");
  }
}

ReplicationStats replicate_fund(const PathEnsemble& ensemble,
                                const SDEModel& model,
                                std::size_t rebalance_stride) {
  if (rebalance_stride == 0) throw InvalidInput("stride must be positive");
  if (!ensemble.has_canonical())
    throw InvalidInput("replicate_fund: run bachelier_canonicalize first");
  if (!model.ampr_time_deterministic())
    throw InvalidInput("replicate_fund: AMPR must be deterministic");

  const std::size_t steps = ensemble.steps;
  const std::size_t n = ensemble.dim;
  const double dt = ensemble.dt;
  std::vector<double> a(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    a[k] = model.ampr_of_time(static_cast<double>(k) * dt);
    if (a[k] < kAmprFloor)
      throw NumericalError("replicate_fund: A(t) below the 1e-6 floor");
  }

  std::vector<double> sq_errors(ensemble.n_paths);
  std::vector<double> abs_errors(ensemble.n_paths);

#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(ensemble.n_paths); ++p) {
    const std::size_t path = static_cast<std::size_t>(p);
    Vector holdings(n, 0.0);
    double value = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      if (k % rebalance_stride == 0) {
        const double t = static_cast<double>(k) * dt;
        const Vector weights = mutual_fund_weights(
            model, std::span<const double>(ensemble.state(path, k), n), t);
        for (std::size_t i = 0; i < n; ++i) holdings[i] = -weights[i] / a[k];
      }
      const double* x_now = ensemble.state(path, k);
      const double* x_next = ensemble.state(path, k + 1);
      double gains = 0.0;
      double exposure = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        gains += holdings[i] * (x_next[i] - x_now[i]);
        exposure += holdings[i] * x_now[i];
      }
      value += gains + (value - exposure) * model.rate * dt;
    }
    const double target = ensemble.canon_state(path, steps)[0];
    const double err = value - target;
    sq_errors[path] = err * err;
    abs_errors[path] = std::fabs(err);
  }

  ReplicationStats stats;
  stats.rms_error = std::sqrt(pairwise_mean(sq_errors));
  stats.max_abs_error = *std::max_element(abs_errors.begin(), abs_errors.end());
  stats.rebalance_dt = static_cast<double>(rebalance_stride) * dt;
  stats.n_paths = ensemble.n_paths;
  return stats;
}

bool LevyGates::all_pass() const {
  for (const auto& check : checks)
    if (!check.pass) return false;
  return true;
}

LevyGates levy_gates(const PathEnsemble& ensemble) {
  if (!ensemble.has_canonical())
    throw InvalidInput("levy_gates: run bachelier_canonicalize first");
  const std::size_t n = ensemble.dim;
  const std::size_t steps = ensemble.steps;
  const double horizon = static_cast<double>(steps) * ensemble.dt;
  const double band = 3.0 * std::sqrt(2.0 * horizon * ensemble.dt) *
                      std::sqrt(horizon);
  LevyGates gates;

  // Ensemble-average QV and cross-QV, reduced pairwise over paths.
  std::vector<double> per_path(ensemble.n_paths);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      for (std::size_t p = 0; p < ensemble.n_paths; ++p) {
        double sum = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
          const double* dw = ensemble.canon_increment(p, k);
          sum += dw[i] * dw[j];
        }
        per_path[p] = sum;
      }
      const double avg = pairwise_mean(per_path);
      const double target = (i == j) ? horizon : 0.0;
      statcheck::TestReport check;
      check.description = (i == j)
                              ? "QV component " + std::to_string(i + 1)
                              : "cross-QV " + std::to_string(i + 1) + "," +
                                    std::to_string(j + 1);
      check.statistic = std::fabs(avg - target);
      check.threshold = band;
      check.pass = check.statistic <= band;
      check.n_a = ensemble.n_paths * steps;
      gates.checks.push_back(check);
    }
  }

  // Moment gates on pooled normalized increments.
  const double inv_sqrt_dt = 1.0 / std::sqrt(ensemble.dt);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> pooled;
    pooled.reserve(ensemble.n_paths * steps);
    for (std::size_t p = 0; p < ensemble.n_paths; ++p)
      for (std::size_t k = 0; k < steps; ++k)
        pooled.push_back(ensemble.canon_increment(p, k)[i] * inv_sqrt_dt);
    const auto moments = statcheck::moment_report(pooled);
    statcheck::TestReport skew;
    skew.description = "skewness component " + std::to_string(i + 1);
    skew.statistic = std::fabs(moments.skewness);
    skew.threshold = 0.1;
    skew.pass = skew.statistic < skew.threshold;
    skew.n_a = pooled.size();
    gates.checks.push_back(skew);
    statcheck::TestReport kurt;
    kurt.description = "excess kurtosis component " + std::to_string(i + 1);
    kurt.statistic = std::fabs(moments.excess_kurtosis);
    kurt.threshold = 0.2;
    kurt.pass = kurt.statistic < kurt.threshold;
    kurt.n_a = pooled.size();
    gates.checks.push_back(kurt);
  }

  // Driving dimension from the realized covariation rank.
  std::vector<std::vector<double>> channels(n);
  for (std::size_t i = 0; i < n; ++i) {
    channels[i].reserve(ensemble.n_paths * steps);
    for (std::size_t p = 0; p < ensemble.n_paths; ++p)
      for (std::size_t k = 0; k < steps; ++k)
        channels[i].push_back(ensemble.canon_increment(p, k)[i]);
  }
  gates.estimated_dimension = statcheck::dimension_estimate(channels, ensemble.dt);
  statcheck::TestReport dim_check;
  dim_check.description = "driving dimension";
  dim_check.statistic = static_cast<double>(gates.estimated_dimension);
  dim_check.threshold = static_cast<double>(n);
  dim_check.pass = gates.estimated_dimension == n;
  dim_check.n_a = ensemble.n_paths * steps;
  gates.checks.push_back(dim_check);
  return gates;
}

double canonical_roundtrip_gap(const PathEnsemble& ensemble) {
  if (!ensemble.has_canonical())
    throw InvalidInput("canonical_roundtrip_gap: run bachelier_canonicalize first");
  double gap = 0.0;
  for (std::size_t p = 0; p < ensemble.n_paths; ++p)
    for (std::size_t k = 0; k < ensemble.steps; ++k) {
      const double* dw = ensemble.increment(p, k);
      const double* dw_tilde = ensemble.canon_increment(p, k);
      for (std::size_t i = 0; i < ensemble.dim; ++i)
        gap = std::max(gap, std::fabs(dw_tilde[i] - dw[i]));
    }
  return gap;
}

statcheck::TestReport martingale_check(const PathEnsemble& ensemble) {
  if (!ensemble.has_density())
    throw InvalidInput("martingale_check: run q_process first");
  std::vector<double> q_terminal(ensemble.n_paths);
  for (std::size_t p = 0; p < ensemble.n_paths; ++p)
    q_terminal[p] = std::exp(ensemble.log_q(p, ensemble.steps));
  const double mean = pairwise_mean(q_terminal);
  std::vector<double> sq(ensemble.n_paths);
  for (std::size_t p = 0; p < ensemble.n_paths; ++p) {
    const double d = q_terminal[p] - mean;
    sq[p] = d * d;
  }
  const double n = static_cast<double>(ensemble.n_paths);
  const double se = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  statcheck::TestReport check;
  check.description = "martingale mean q_T";
  check.statistic = std::fabs(mean - 1.0);
  check.threshold = 4.0 * se;
  check.pass = check.statistic <= check.threshold;
  check.n_a = ensemble.n_paths;
  return check;
}

double fitted_error_order(const std::vector<ReplicationStats>& stats) {
  if (stats.size() < 2)
    throw InvalidInput("fitted_error_order: need at least two points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(stats.size());
  for (const auto& s : stats) {
    if (!(s.rms_error > 0.0) || !(s.rebalance_dt > 0.0))
      throw InvalidInput("fitted_error_order: non-positive data");
    const double x = std::log(s.rebalance_dt);
    const double y = std::log(s.rms_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string ClaimSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant:
      os << "constant(" << value << ")";
      break;
    case Kind::linear:
      os << "linear(" << intercept << ")";
      break;
    case Kind::call:
      os << "call(" << asset << "," << strike << ")";
      break;
    case Kind::put:
      os << "put(" << asset << "," << strike << ")";
      break;
    case Kind::indicator:
      os << "indicator(" << asset << "," << lower << "," << upper << ")";
      break;
    case Kind::log_q_polynomial:
      os << "log-q-poly(deg" << (coefficients.empty() ? 0 : coefficients.size() - 1)
         << ")";
      break;
    case Kind::call_on_q:
      os << "call-on-q(" << strike << ")";
      break;
  }
  return os.str();
}

void ClaimSpec::validate(std::size_t dim) const {
  auto finite = [](double x) { return std::isfinite(x); };
  switch (kind) {
    case Kind::constant:
      if (!finite(value)) throw InvalidInput("claim: non-finite constant");
      return;
    case Kind::linear:
      if (!finite(intercept) || weights.size() != dim)
        throw InvalidInput("claim: bad linear parameters");
      for (double w : weights)
        if (!finite(w)) throw InvalidInput("claim: non-finite weight");
      return;
    case Kind::call:
    case Kind::put:
      if (asset >= dim) throw InvalidInput("claim: asset index out of range");
      if (!(strike > 0.0)) throw InvalidInput("claim: strike must be positive");
      return;
    case Kind::indicator:
      if (asset >= dim) throw InvalidInput("claim: asset index out of range");
      if (!finite(lower) || !finite(upper) || lower > upper)
        throw InvalidInput("claim: bad indicator bounds");
      return;
    case Kind::log_q_polynomial:
      if (coefficients.empty() || coefficients.size() > 5)
        throw InvalidInput("claim: polynomial degree must be 0..4");
      for (double c : coefficients)
        if (!finite(c)) throw InvalidInput("claim: non-finite coefficient");
      return;
    case Kind::call_on_q:
      if (!(strike > 0.0)) throw InvalidInput("claim: strike must be positive");
      return;
  }
  throw InvalidInput("claim: unknown kind");
}

double ClaimSpec::evaluate(std::span<const double> x_terminal,
                           double log_q_terminal) const {
  switch (kind) {
    case Kind::constant:
      return value;
    case Kind::linear: {
      double s = intercept;
      for (std::size_t i = 0; i < weights.size(); ++i)
        s += weights[i] * x_terminal[i];
      return s;
    }
    case Kind::call:
      return std::max(x_terminal[asset] - strike, 0.0);
    case Kind::put:
      return std::max(strike - x_terminal[asset], 0.0);
    case Kind::indicator:
      return (x_terminal[asset] >= lower && x_terminal[asset] <= upper) ? 1.0
                                                                        : 0.0;
    case Kind::log_q_polynomial: {
      double s = 0.0;
      for (std::size_t j = coefficients.size(); j-- > 0;)
        s = s * log_q_terminal + coefficients[j];
      return s;
    }
    case Kind::call_on_q:
      return std::max(std::exp(log_q_terminal) - strike, 0.0);
  }
  return 0.0;
}

}  // namespace isomarket::ctsmkt
