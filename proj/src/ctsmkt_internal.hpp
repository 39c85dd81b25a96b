#pragma once

// Internal helpers shared by the ctsmkt kernels. Not installed.

#include <cstddef>

#include "isomarket/ctsmkt.hpp"

namespace isomarket::ctsmkt::detail {

// theta = sigma^{-1}(r x - mu) with family fast paths: constant for GBM and
// drift-adjusted models, time-only for canonical Bachelier, generic solve
// otherwise.
class ThetaEvaluator {
 public:
  explicit ThetaEvaluator(const SDEModel& model);

  // Writes theta into out[0..dim) and returns |theta|.
  double eval(const double* x, double t, double* out) const;

  bool is_constant() const { return kind_ == Kind::constant; }
  bool is_time_only() const { return kind_ != Kind::state_dependent; }

 private:
  enum class Kind { constant, time_only, state_dependent };
  Kind kind_ = Kind::state_dependent;
  const SDEModel* model_ = nullptr;
  linalg::Vector constant_theta_;
  double constant_norm_ = 0.0;
};

// True when sigma(x, t) is singular for the model family (GBM-style loadings
// degenerate as a coordinate hits zero; constant matrices are validated once
// at construction).
inline bool sigma_singular_at(const SDEModel& model, const double* x) {
  const bool gbm_like =
      model.family == Family::gbm ||
      (model.family == Family::drift_adjusted && model.vol_family == Family::gbm);
  if (!gbm_like) return false;
  for (std::size_t i = 0; i < model.dim; ++i)
    if (!(x[i] > 0.0)) return true;
  return false;
}

// Euler step x -> x + mu dt + sigma dw, evaluated at the left point. Returns
// false when sigma is singular at x. Both the parallel kernels and the serial
// references perform this arithmetic in the same operation order.
inline bool euler_step(const SDEModel& model, double* x, double t, double dt,
                       const double* dw, double* mu_buf,
                       linalg::Matrix& sigma_buf) {
  const std::size_t n = model.dim;
  if (sigma_singular_at(model, x)) return false;
  model.mu_at(std::span<const double>(x, n), t, std::span<double>(mu_buf, n));
  model.sigma_at(std::span<const double>(x, n), t, sigma_buf);
  for (std::size_t i = 0; i < n; ++i) {
    double diffusion = 0.0;
    for (std::size_t j = 0; j < n; ++j) diffusion += sigma_buf(i, j) * dw[j];
    x[i] += mu_buf[i] * dt + diffusion;
  }
  return true;
}

}  // namespace isomarket::ctsmkt::detail
