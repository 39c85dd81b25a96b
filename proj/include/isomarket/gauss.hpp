#pragma once

// Gaussian one-period markets: whitening plus rotation onto the
// (alpha, beta, gamma) normal form, the isomorphism decision that follows
// from it, and the two-fund minimum-variance solver.

#include <cstddef>

#include "isomarket/linalg.hpp"

namespace isomarket::gauss {

// Asset payoffs follow N(mean, covariance); cost is the price vector of the
// same assets. The covariance must be symmetric positive definite.
struct GaussianMarket {
  linalg::Vector mean;
  linalg::Matrix covariance;
  linalg::Vector cost;

  std::size_t dimension() const { return mean.size(); }
};

void require_valid(const GaussianMarket& market);

// Normal form: the canonicalizer T maps (mean, covariance, cost) onto
// (alpha e1, identity, beta e1 + gamma e2) with alpha, gamma >= 0. When the
// whitened mean vanishes, the cost is normalized onto e1 instead.
struct CanonicalGaussForm {
  std::size_t dimension = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  linalg::Matrix canonicalizer;
};

CanonicalGaussForm canonical_gauss(const GaussianMarket& market);

// Largest entry-wise gap between the canonicalizer-transformed market and the
// literal normal form; small by construction.
double canonical_residual(const GaussianMarket& market,
                          const CanonicalGaussForm& form);

// Apply an invertible change of basis T consistently: mean -> T mean,
// covariance -> T Sigma T^t, cost -> T cost. Test helper and CLI plumbing.
GaussianMarket apply_basis_change(const GaussianMarket& market,
                                  const linalg::Matrix& t);

bool gauss_isomorphic(const GaussianMarket& a, const GaussianMarket& b,
                      double tol = 1e-8);

struct TwoFundBasis {
  linalg::Vector fund_payoff;  // Sigma^{-1} mean
  linalg::Vector fund_cost;    // Sigma^{-1} cost
  bool degenerate = false;     // mean and cost parallel
};

TwoFundBasis two_fund_basis(const GaussianMarket& market);

// Minimum-variance portfolio with given expected payoff and cost. The
// solution lies in the span of the two funds; a degenerate (parallel)
// constraint pair falls back to the single-fund problem when the targets are
// consistent and throws otherwise.
linalg::Vector min_variance_solve(const GaussianMarket& market,
                                  double target_payoff, double target_cost);

}  // namespace isomarket::gauss
