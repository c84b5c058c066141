#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace mixedlm {

using Vector = std::vector<double>;

// Dense row-major matrix. Sized for desk-scale problems (n up to a few
// thousand); all heavy algorithms in this library are O(n^3) or better.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  // Row-major construction from nested braces, for tests and small fixtures.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  double* row(int i) { return a_.data() + static_cast<std::size_t>(i) * cols_; }
  const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * cols_; }

  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

double dot(const Vector& x, const Vector& y);
double squared_norm(const Vector& x);
double norm(const Vector& x);
double max_abs(const Vector& x);

Vector operator+(const Vector& x, const Vector& y);
Vector operator-(const Vector& x, const Vector& y);
Vector scaled(const Vector& x, double c);

Vector multiply(const Matrix& m, const Vector& x);             // m x
Vector multiply_transposed(const Matrix& m, const Vector& x);  // m^T x
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// a b^T for matrices with matching column counts (rows_a x rows_b).
Matrix multiply_bt(const Matrix& a, const Matrix& b);

// m m^T (rows x rows Gram matrix of the rows).
Matrix gram_rows(const Matrix& m);

Matrix vstack(const Matrix& top, const Matrix& bottom);
Matrix select_columns(const Matrix& m, const std::vector<int>& idx);
Vector get_column(const Matrix& m, int j);

double frobenius_norm(const Matrix& m);

// Solves m x = rhs for symmetric positive definite m by Cholesky
// factorization. Throws std::runtime_error when a pivot is not positive
// (matrix not SPD to working precision).
Vector spd_solve(const Matrix& m, const Vector& rhs);

}  // namespace mixedlm
