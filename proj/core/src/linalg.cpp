#include "mixedlm/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace mixedlm {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw std::invalid_argument("ragged rows");
    int j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

double dot(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double squared_norm(const Vector& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double norm(const Vector& x) { return std::sqrt(squared_norm(x)); }

double max_abs(const Vector& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

Vector operator+(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vector add: size mismatch");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
  return z;
}

Vector operator-(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vector sub: size mismatch");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  return z;
}

Vector scaled(const Vector& x, double c) {
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = c * x[i];
  return z;
}

Vector multiply(const Matrix& m, const Vector& x) {
  if (m.cols() != static_cast<int>(x.size())) throw std::invalid_argument("matvec: size mismatch");
  Vector y(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector multiply_transposed(const Matrix& m, const Vector& x) {
  if (m.rows() != static_cast<int>(x.size())) throw std::invalid_argument("matvec_t: size mismatch");
  Vector y(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    const double xi = x[i];
    for (int j = 0; j < m.cols(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: size mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ra = a.row(i);
    double* rc = c.row(i);
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = ra[k];
      if (aik == 0.0) continue;
      const double* rb = b.row(k);
      for (int j = 0; j < b.cols(); ++j) rc[j] += aik * rb[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix multiply_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("multiply_bt: size mismatch");
  Matrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ra = a.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const double* rb = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += ra[k] * rb[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix gram_rows(const Matrix& m) { return multiply_bt(m, m); }

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) throw std::invalid_argument("vstack: column mismatch");
  Matrix m(top.rows() + bottom.rows(), top.cols());
  for (int i = 0; i < top.rows(); ++i)
    for (int j = 0; j < top.cols(); ++j) m(i, j) = top(i, j);
  for (int i = 0; i < bottom.rows(); ++i)
    for (int j = 0; j < bottom.cols(); ++j) m(top.rows() + i, j) = bottom(i, j);
  return m;
}

Matrix select_columns(const Matrix& m, const std::vector<int>& idx) {
  Matrix s(m.rows(), static_cast<int>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int j = idx[k];
    if (j < 0 || j >= m.cols()) throw std::out_of_range("select_columns: bad index");
    for (int i = 0; i < m.rows(); ++i) s(i, static_cast<int>(k)) = m(i, j);
  }
  return s;
}

Vector get_column(const Matrix& m, int j) {
  Vector c(m.rows());
  for (int i = 0; i < m.rows(); ++i) c[i] = m(i, j);
  return c;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

Vector spd_solve(const Matrix& m, const Vector& rhs) {
  const int n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("spd_solve: matrix not square");
  if (static_cast<int>(rhs.size()) != n) throw std::invalid_argument("spd_solve: rhs size mismatch");

  // Lower-triangular Cholesky factor, computed in place on a copy.
  Matrix l = m;
  for (int j = 0; j < n; ++j) {
    double d = l(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw std::runtime_error("spd_solve: matrix not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = l(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }

  Vector x = rhs;
  for (int i = 0; i < n; ++i) {  // L y = rhs
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {  // L^T x = y
    double s = x[i];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

}  // namespace mixedlm
