#pragma once

#include "mixedlm/linalg.hpp"

namespace mixedlm {

// One response vector with a fixed-effect design X (n x p, p may exceed n)
// and two random-effect designs Z (n x v) and W (n x r). W may have zero
// columns when only one random factor is present.
struct MixedData {
  Vector y;
  Matrix x;
  Matrix z;
  Matrix w;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return x.cols(); }
  int v() const { return z.cols(); }
  int r() const { return w.cols(); }

  // Checks dimensions, finiteness, and v + r < n. Throws std::invalid_argument.
  void validate() const;
};

// Orthonormal row blocks splitting R^n:
//   a: keeps the Z signal that is not explained by W (a w = 0),
//   b: annihilates both factors (b z = 0, b w = 0),
//   c: keeps the W signal that is not explained by Z (c z = 0).
// Rows within and across blocks are orthonormal.
struct ProjectionSet {
  Matrix a;
  Matrix b;
  Matrix c;
  int rank_w = 0;
  int rank_wz = 0;
  double rank_tol = 0.0;
  // Set when no direction of col(W) survives outside col(Z) + rows(a),
  // i.e. the gamma variance cannot be separated (n_c = 0).
  bool gamma_space_empty = false;

  int n_a() const { return a.rows(); }
  int n_b() const { return b.rows(); }
  int n_c() const { return c.rows(); }
};

// Spectral data used to whiten the a and c blocks:
//   a z z^T a^T = V diag(d) V^T restricted to eigenvalues above tolerance,
//   c w w^T c^T = Gamma diag(lambda) Gamma^T likewise.
// V has n_a rows and one column per retained eigenvalue (Gamma analogous).
struct Whitening {
  Vector d;
  Matrix v;
  Vector lambda;
  Matrix gamma;

  int retained_a() const { return static_cast<int>(d.size()); }
  int retained_c() const { return static_cast<int>(lambda.size()); }
  double trace_d_inv() const;
  double trace_lambda_inv() const;
  // n_a / Tr(D^-1) over the retained spectrum (harmonic-mean style scale).
  double d_bar() const;
  double lambda_bar() const;
};

// Modified Gram-Schmidt with one re-orthogonalization pass. Orthonormalizes
// the columns of `cols` against the rows of `against` (assumed orthonormal)
// and against each other; columns whose residual drops below
// rank_tol * (original norm) are treated as dependent and skipped.
// Returns the accepted vectors as rows (k x n).
Matrix orthonormal_complement(const Matrix& cols, const Matrix& against, double rank_tol = 1e-10);

// Builds the (a, b, c) triplet from Z and W:
//   a = complement of Z against an orthonormal basis of col(W),
//   b = complement of the standard basis against basis(W) + rows(a),
//   c = complement of W against basis(Z) + rows(a), with a post-hoc check
//       that every row annihilates Z (violating rows are dropped).
// Throws std::runtime_error when n_a = 0 (Z adds nothing beyond W, so the
// target variance is unidentifiable); sets gamma_space_empty when n_c = 0.
ProjectionSet build_projections(const Matrix& z, const Matrix& w, double rank_tol = 1e-10);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps
// (at most 100 sweeps, off-diagonal tolerance 1e-12 * ||m||_F).
// Eigenvalues are returned in descending order, eigenvectors as the
// corresponding columns of `vectors`.
void symmetric_eig(const Matrix& m, Vector& values, Matrix& vectors);

// Whitening spectra for a given projection set. Eigenvalues at or below
// eig_tol * (largest eigenvalue) are dropped; throws std::runtime_error if
// nothing survives on the a side. The c side is skipped when n_c = 0.
Whitening whiten(const ProjectionSet& pset, const Matrix& z, const Matrix& w,
                 double eig_tol = 1e-9);

// D^{-1/2} V^T (a x) and Lambda^{-1/2} Gamma^T (c x): the whitened
// coordinates of an n-vector in the a and c blocks.
Vector whiten_a_apply(const Whitening& wh, const ProjectionSet& pset, const Vector& x);
Vector whiten_c_apply(const Whitening& wh, const ProjectionSet& pset, const Vector& x);

}  // namespace mixedlm
