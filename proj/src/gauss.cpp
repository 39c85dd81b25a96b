#include "isomarket/gauss.hpp"

#include <algorithm>
#include <cmath>

#include "isomarket/common.hpp"

namespace isomarket::gauss {

using linalg::Matrix;
using linalg::Vector;

void require_valid(const GaussianMarket& market) {
  const std::size_t n = market.dimension();
  if (n == 0) throw InvalidInput("empty market");
  if (market.covariance.rows() != n || market.covariance.cols() != n ||
      market.cost.size() != n)
    throw InvalidInput("mean/covariance/cost dimensions disagree");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::fabs(market.covariance(i, j) - market.covariance(j, i)) > 1e-10)
        throw InvalidInput("covariance not symmetric");
  const auto eig = linalg::symmetric_eigenvalues(market.covariance);
  if (!(eig.back() > 1e-10 * eig.front()))
    throw NumericalError("covariance ill-conditioned");
}

namespace {

// Rows of an orthonormal basis whose first vectors are the normalized inputs;
// completed deterministically with standard basis vectors.
Matrix orthonormal_rows(const std::vector<Vector>& leading, std::size_t n) {
  std::vector<Vector> rows;
  auto add = [&rows, n](Vector v) {
    for (const auto& r : rows) {
      const double c = linalg::dot(r, v);
      for (std::size_t i = 0; i < n; ++i) v[i] -= c * r[i];
    }
    const double len = linalg::norm(v);
    if (len > 1e-12) {
      for (double& x : v) x /= len;
      rows.push_back(std::move(v));
      return true;
    }
    return false;
  };
  for (const auto& v : leading) add(v);
  for (std::size_t i = 0; i < n && rows.size() < n; ++i) {
    Vector e(n, 0.0);
    e[i] = 1.0;
    add(e);
  }
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace

CanonicalGaussForm canonical_gauss(const GaussianMarket& market) {
  require_valid(market);
  const std::size_t n = market.dimension();
  const Matrix chol = linalg::cholesky(market.covariance);

  // Whiten: solve L m' = mean and L c' = cost (forward substitution).
  auto forward = [&chol, n](const Vector& b) {
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= chol(i, k) * y[k];
      y[i] = s / chol(i, i);
    }
    return y;
  };
  const Vector mean_w = forward(market.mean);
  const Vector cost_w = forward(market.cost);

  CanonicalGaussForm form;
  form.dimension = n;
  form.alpha = linalg::norm(mean_w);

  std::vector<Vector> leading;
  if (form.alpha > 1e-12) {
    leading.push_back(mean_w);
    form.beta = linalg::dot(mean_w, cost_w) / form.alpha;
    const double c2 = linalg::dot(cost_w, cost_w) - form.beta * form.beta;
    form.gamma = c2 > 0.0 ? std::sqrt(c2) : 0.0;
    if (form.gamma > 1e-12) leading.push_back(cost_w);
  } else {
    // Degenerate mean: normalize the cost onto e1.
    form.alpha = 0.0;
    form.beta = linalg::norm(cost_w);
    form.gamma = 0.0;
    if (form.beta > 1e-12) leading.push_back(cost_w);
  }

  const Matrix rotation = orthonormal_rows(leading, n);

  // Canonicalizer = rotation composed with the whitener L^{-1}.
  Matrix whitener(n, n);
  {
    Vector e(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      e.assign(n, 0.0);
      e[c] = 1.0;
      const Vector col = forward(e);
      for (std::size_t r = 0; r < n; ++r) whitener(r, c) = col[r];
    }
  }
  form.canonicalizer = linalg::matmul(rotation, whitener);
  return form;
}

double canonical_residual(const GaussianMarket& market,
                          const CanonicalGaussForm& form) {
  const GaussianMarket image = apply_basis_change(market, form.canonicalizer);
  const std::size_t n = market.dimension();
  double gap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mean_target = i == 0 ? form.alpha : 0.0;
    double cost_target = 0.0;
    if (i == 0) cost_target = form.beta;
    if (i == 1) cost_target = form.gamma;
    gap = std::max(gap, std::fabs(image.mean[i] - mean_target));
    gap = std::max(gap, std::fabs(image.cost[i] - cost_target));
    for (std::size_t j = 0; j < n; ++j) {
      const double id_target = i == j ? 1.0 : 0.0;
      gap = std::max(gap, std::fabs(image.covariance(i, j) - id_target));
    }
  }
  return gap;
}

GaussianMarket apply_basis_change(const GaussianMarket& market, const Matrix& t) {
  GaussianMarket out;
  out.mean = linalg::matvec(t, market.mean);
  out.cost = linalg::matvec(t, market.cost);
  out.covariance = linalg::matmul(t, linalg::matmul(market.covariance,
                                                    linalg::transpose(t)));
  // Symmetrize away the multiplication round-off.
  for (std::size_t i = 0; i < out.covariance.rows(); ++i)
    for (std::size_t j = i + 1; j < out.covariance.cols(); ++j) {
      const double v = 0.5 * (out.covariance(i, j) + out.covariance(j, i));
      out.covariance(i, j) = v;
      out.covariance(j, i) = v;
    }
  return out;
}

bool gauss_isomorphic(const GaussianMarket& a, const GaussianMarket& b,
                      double tol) {
  if (a.dimension() != b.dimension()) return false;
  const CanonicalGaussForm fa = canonical_gauss(a);
  const CanonicalGaussForm fb = canonical_gauss(b);
  return std::fabs(fa.alpha - fb.alpha) <= tol &&
         std::fabs(fa.beta - fb.beta) <= tol &&
         std::fabs(fa.gamma - fb.gamma) <= tol;
}

TwoFundBasis two_fund_basis(const GaussianMarket& market) {
  require_valid(market);
  const Matrix chol = linalg::cholesky(market.covariance);
  TwoFundBasis funds;
  funds.fund_payoff = linalg::cholesky_solve(chol, market.mean);
  funds.fund_cost = linalg::cholesky_solve(chol, market.cost);

  // Parallel mean and cost collapse the two funds onto a line.
  const double mm = linalg::dot(market.mean, funds.fund_payoff);
  const double mc = linalg::dot(market.mean, funds.fund_cost);
  const double cc = linalg::dot(market.cost, funds.fund_cost);
  funds.degenerate = std::fabs(mm * cc - mc * mc) <= 1e-12 * std::max(mm * cc, 1.0);
  return funds;
}

Vector min_variance_solve(const GaussianMarket& market, double target_payoff,
                          double target_cost) {
  const TwoFundBasis funds = two_fund_basis(market);
  const double mm = linalg::dot(market.mean, funds.fund_payoff);
  const double mc = linalg::dot(market.mean, funds.fund_cost);
  const double cc = linalg::dot(market.cost, funds.fund_cost);
  const std::size_t n = market.dimension();

  if (!funds.degenerate) {
    // Gram system for x = a X1 + b X2 under the two linear constraints.
    const double det = mm * cc - mc * mc;
    const double a = (target_payoff * cc - target_cost * mc) / det;
    const double b = (target_cost * mm - target_payoff * mc) / det;
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = a * funds.fund_payoff[i] + b * funds.fund_cost[i];
    return x;
  }

  // Single-fund fallback: both constraints act along one direction.
  if (mm > 1e-12) {
    const double a = target_payoff / mm;
    // The cost constraint must agree with the implied value.
    if (std::fabs(a * mc - target_cost) > 1e-8 * std::max(1.0, std::fabs(target_cost)))
      throw InvalidInput("degenerate constraints are inconsistent");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a * funds.fund_payoff[i];
    return x;
  }
  if (cc > 1e-12) {
    const double b = target_cost / cc;
    if (std::fabs(b * mc - target_payoff) >
        1e-8 * std::max(1.0, std::fabs(target_payoff)))
      throw InvalidInput("degenerate constraints are inconsistent");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b * funds.fund_cost[i];
    return x;
  }
  if (std::fabs(target_payoff) > 1e-12 || std::fabs(target_cost) > 1e-12)
    throw InvalidInput("zero constraints with nonzero targets");
  return Vector(n, 0.0);
}

}  // namespace isomarket::gauss
