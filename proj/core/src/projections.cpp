#include "mixedlm/projections.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mixedlm {

void MixedData::validate() const {
  const int nn = n();
  if (nn < 2) throw std::invalid_argument("MixedData: need at least 2 rows");
  if (x.rows() != nn || z.rows() != nn || w.rows() != nn)
    throw std::invalid_argument("MixedData: row count mismatch");
  if (z.cols() < 1) throw std::invalid_argument("MixedData: Z must have at least one column");
  if (v() + r() >= nn) throw std::invalid_argument("MixedData: requires v + r < n");
  auto check_finite = [](const std::vector<double>& a, const char* what) {
    for (double t : a)
      if (!std::isfinite(t)) throw std::invalid_argument(std::string("MixedData: non-finite ") + what);
  };
  check_finite(y, "response");
  check_finite(x.data(), "X entry");
  check_finite(z.data(), "Z entry");
  check_finite(w.data(), "W entry");
}

double Whitening::trace_d_inv() const {
  double s = 0.0;
  for (double t : d) s += 1.0 / t;
  return s;
}

double Whitening::trace_lambda_inv() const {
  double s = 0.0;
  for (double t : lambda) s += 1.0 / t;
  return s;
}

double Whitening::d_bar() const { return retained_a() / trace_d_inv(); }

double Whitening::lambda_bar() const { return retained_c() / trace_lambda_inv(); }

Matrix orthonormal_complement(const Matrix& cols, const Matrix& against, double rank_tol) {
  const int n = cols.rows();
  if (against.rows() > 0 && against.cols() != n)
    throw std::invalid_argument("orthonormal_complement: dimension mismatch");

  std::vector<Vector> accepted;
  for (int j = 0; j < cols.cols(); ++j) {
    Vector v = get_column(cols, j);
    const double orig = norm(v);
    if (orig == 0.0) continue;
    // Two projection sweeps: modified Gram-Schmidt plus one
    // re-orthogonalization pass.
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < against.rows(); ++i) {
        const double* q = against.row(i);
        double c = 0.0;
        for (int k = 0; k < n; ++k) c += q[k] * v[k];
        for (int k = 0; k < n; ++k) v[k] -= c * q[k];
      }
      for (const Vector& q : accepted) {
        const double c = dot(q, v);
        for (int k = 0; k < n; ++k) v[k] -= c * q[k];
      }
    }
    const double res = norm(v);
    if (res > rank_tol * orig) {
      for (double& t : v) t /= res;
      accepted.push_back(std::move(v));
    }
  }

  Matrix out(static_cast<int>(accepted.size()), n);
  for (std::size_t i = 0; i < accepted.size(); ++i)
    for (int k = 0; k < n; ++k) out(static_cast<int>(i), k) = accepted[i][k];
  return out;
}

ProjectionSet build_projections(const Matrix& z, const Matrix& w, double rank_tol) {
  const int n = z.rows();
  if (w.rows() != n && w.cols() > 0)
    throw std::invalid_argument("build_projections: Z/W row mismatch");

  ProjectionSet ps;
  ps.rank_tol = rank_tol;

  const Matrix basis_w = orthonormal_complement(w.cols() > 0 ? w : Matrix(n, 0), Matrix(0, 0), rank_tol);
  ps.rank_w = basis_w.rows();

  ps.a = orthonormal_complement(z, basis_w, rank_tol);
  if (ps.a.rows() == 0)
    throw std::runtime_error(
        "build_projections: col(Z) is contained in col(W); the target random effect "
        "is unidentifiable (n_a = 0)");
  ps.rank_wz = ps.rank_w + ps.a.rows();

  const Matrix basis_wz = vstack(basis_w, ps.a);
  ps.b = orthonormal_complement(Matrix::identity(n), basis_wz, rank_tol);

  if (w.cols() > 0) {
    const Matrix basis_z = orthonormal_complement(z, Matrix(0, 0), rank_tol);
    Matrix c = orthonormal_complement(w, vstack(basis_z, ps.a), rank_tol);
    // Post-hoc annihilation check; drop any row that fails to kill Z.
    std::vector<int> keep;
    for (int i = 0; i < c.rows(); ++i) {
      double worst = 0.0;
      for (int j = 0; j < z.cols(); ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += c(i, k) * z(k, j);
        worst = std::max(worst, std::abs(s));
      }
      if (worst <= 1e-8) keep.push_back(i);
    }
    Matrix kept(static_cast<int>(keep.size()), n);
    for (std::size_t i = 0; i < keep.size(); ++i)
      for (int k = 0; k < n; ++k) kept(static_cast<int>(i), k) = c(keep[i], k);
    ps.c = std::move(kept);
  } else {
    ps.c = Matrix(0, n);
  }
  ps.gamma_space_empty = ps.c.rows() == 0;
  return ps;
}

void symmetric_eig(const Matrix& m, Vector& values, Matrix& vectors) {
  const int k = m.rows();
  if (m.cols() != k) throw std::invalid_argument("symmetric_eig: matrix not square");
  const double fro = frobenius_norm(m);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-8 * (fro > 0 ? fro : 1.0))
        throw std::invalid_argument("symmetric_eig: matrix not symmetric");

  Matrix a = m;
  Matrix v = Matrix::identity(k);
  const double tol = 1e-12 * fro;

  const auto off_norm = [&]() {
    double off = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) off += a(i, j) * a(i, j);
    return std::sqrt(2.0 * off);
  };
  const auto finish = [&]() {
    values.assign(k, 0.0);
    for (int i = 0; i < k; ++i) values[i] = a(i, i);
    // Sort eigenpairs by descending eigenvalue.
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int p, int q) { return values[p] > values[q]; });
    Vector sorted_vals(k);
    Matrix sorted_vecs(k, k);
    for (int c = 0; c < k; ++c) {
      sorted_vals[c] = values[order[c]];
      for (int rrow = 0; rrow < k; ++rrow) sorted_vecs(rrow, c) = v(rrow, order[c]);
    }
    values = std::move(sorted_vals);
    vectors = std::move(sorted_vecs);
  };

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_norm() <= tol) {
      finish();
      return;
    }
    for (int p = 0; p < k - 1; ++p) {
      for (int q = p + 1; q < k; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int i = 0; i < k; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int j = 0; j < k; ++j) {
          const double apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - s * aqj;
          a(q, j) = s * apj + c * aqj;
        }
        for (int i = 0; i < k; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  if (off_norm() <= tol) {
    finish();
    return;
  }
  throw std::runtime_error("symmetric_eig: Jacobi sweeps did not converge");
}

namespace {

// Retained spectral factors of (proj rows applied to f) gram matrix.
void retained_spectrum(const Matrix& proj, const Matrix& f, double eig_tol, Vector& vals_out,
                       Matrix& vecs_out) {
  const Matrix pf = multiply(proj, f);
  const Matrix gram = gram_rows(pf);
  Vector vals;
  Matrix vecs;
  symmetric_eig(gram, vals, vecs);
  const double top = vals.empty() ? 0.0 : vals[0];
  int kept = 0;
  while (kept < static_cast<int>(vals.size()) && vals[kept] > eig_tol * top && vals[kept] > 0.0)
    ++kept;
  vals_out.assign(vals.begin(), vals.begin() + kept);
  Matrix v(vecs.rows(), kept);
  for (int i = 0; i < vecs.rows(); ++i)
    for (int j = 0; j < kept; ++j) v(i, j) = vecs(i, j);
  vecs_out = std::move(v);
}

}  // namespace

Whitening whiten(const ProjectionSet& pset, const Matrix& z, const Matrix& w, double eig_tol) {
  Whitening wh;
  retained_spectrum(pset.a, z, eig_tol, wh.d, wh.v);
  if (wh.d.empty())
    throw std::runtime_error("whiten: a z z^T a^T has no eigenvalue above tolerance");
  if (pset.n_c() > 0 && w.cols() > 0) {
    retained_spectrum(pset.c, w, eig_tol, wh.lambda, wh.gamma);
  } else {
    wh.gamma = Matrix(pset.n_c(), 0);
  }
  return wh;
}

Vector whiten_a_apply(const Whitening& wh, const ProjectionSet& pset, const Vector& x) {
  const Vector ax = multiply(pset.a, x);
  Vector t = multiply_transposed(wh.v, ax);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] /= std::sqrt(wh.d[i]);
  return t;
}

Vector whiten_c_apply(const Whitening& wh, const ProjectionSet& pset, const Vector& x) {
  const Vector cx = multiply(pset.c, x);
  Vector t = multiply_transposed(wh.gamma, cx);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] /= std::sqrt(wh.lambda[i]);
  return t;
}

}  // namespace mixedlm
