#pragma once

// Small dense linear algebra for market canonicalization and diagnostics.
// Dimensions here are single digits, so plain O(n^3) routines with
// deterministic pivoting are all that is needed.

#include <cstddef>
#include <vector>

namespace isomarket::linalg {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
Vector matvec(const Matrix& m, const Vector& v);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
// Throws NumericalError when a pivot falls below rel_tol times the largest
// diagonal entry.
Matrix cholesky(const Matrix& a, double rel_tol = 1e-12);

// Solve L y = b (forward) and L^T x = y (backward) for a lower-triangular L.
Vector cholesky_solve(const Matrix& chol_lower, const Vector& b);

// General solve / inverse by LU with partial pivoting.
Vector lu_solve(const Matrix& a, const Vector& b);
Matrix inverse(const Matrix& a);

// Estimated 2-norm condition number from the symmetric part eigenvalues of
// a^T a; used only as an invertibility gate.
double condition_estimate(const Matrix& a);

// Eigenvalues of a symmetric matrix by cyclic Jacobi, sorted descending.
std::vector<double> symmetric_eigenvalues(const Matrix& a);

}  // namespace isomarket::linalg
