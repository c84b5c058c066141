#include "mixedlm/eb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixedlm {

namespace {

// eta = mu + c_nu Z Z^T M^{-1} (y - mu), M = c_nu Z Z^T + c_gamma W W^T + eps I.
Vector shrink(const MixedData& data, const Vector& mu, double c_nu, double c_gamma, double eps) {
  if (!(eps > 0.0)) throw std::runtime_error("shrinkage: noise variance plug-in must be positive");
  if (c_nu < 0.0 || c_gamma < 0.0) throw std::runtime_error("shrinkage: negative variance plug-in");
  if (c_nu == 0.0) return mu;

  const int n = data.n();
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = eps;
  const auto add_gram = [&](const Matrix& f, double c) {
    if (c == 0.0 || f.cols() == 0) return;
    for (int i = 0; i < n; ++i) {
      const double* ri = f.row(i);
      for (int j = i; j < n; ++j) {
        const double* rj = f.row(j);
        double s = 0.0;
        for (int k = 0; k < f.cols(); ++k) s += ri[k] * rj[k];
        m(i, j) += c * s;
        if (j != i) m(j, i) = m(i, j);
      }
    }
  };
  add_gram(data.z, c_nu);
  add_gram(data.w, c_gamma);

  const Vector t = spd_solve(m, data.y - mu);
  // c_nu Z (Z^T t) without materializing Z Z^T again.
  const Vector zt = multiply_transposed(data.z, t);
  Vector out = multiply(data.z, zt);
  for (int i = 0; i < n; ++i) out[i] = mu[i] + c_nu * out[i];
  return out;
}

}  // namespace

EbEstimate eb_estimate_from_beta(const MixedData& data, const Vector& beta,
                                 const VarianceEstimates& est) {
  EbEstimate out;
  out.mu_hat = multiply(data.x, beta);

  const double c_nu = std::max(0.0, est.sigma_nu2) / est.d_bar_hat;
  double c_gamma = 0.0;
  if (est.sigma_gamma2 && est.lambda_bar_hat && *est.lambda_bar_hat > 0.0) {
    c_gamma = std::max(0.0, *est.sigma_gamma2) / *est.lambda_bar_hat;
  } else {
    out.gamma_term_dropped = true;
  }
  out.eta_hat = shrink(data, out.mu_hat, c_nu, c_gamma, est.sigma_eps2);
  return out;
}

EbEstimate eb_estimate(const MixedData& data, const EwFit& fit_full, const VarianceEstimates& est) {
  return eb_estimate_from_beta(data, fit_full.beta_hat, est);
}

EbEstimate oracle_estimate(const MixedData& data, const OracleInputs& oracle) {
  if (static_cast<int>(oracle.mu.size()) != data.n())
    throw std::invalid_argument("oracle_estimate: mu size mismatch");
  if (!(oracle.sigma_eps2 > 0.0))
    throw std::invalid_argument("oracle_estimate: sigma_eps2 must be positive");
  if (oracle.sigma_nu2 < 0.0 || oracle.sigma_gamma2 < 0.0)
    throw std::invalid_argument("oracle_estimate: negative variance");

  EbEstimate out;
  out.mu_hat = oracle.mu;
  out.gamma_term_dropped = data.r() == 0 && oracle.sigma_gamma2 > 0.0;
  out.eta_hat = shrink(data, oracle.mu, oracle.sigma_nu2,
                       data.r() > 0 ? oracle.sigma_gamma2 : 0.0, oracle.sigma_eps2);
  return out;
}

LsVariants ls_variants(const MixedData& data, const ProjectionSet& pset, const Whitening& wh,
                       const std::vector<int>& sparse_set, double delta, bool truncate) {
  if (sparse_set.empty()) throw std::invalid_argument("ls_variants: empty sparse set");
  const int s = static_cast<int>(sparse_set.size());
  if (s >= std::min(pset.n_a(), pset.n_b()))
    throw std::invalid_argument("ls_variants: |sparse_set| must be < min(n_a, n_b)");
  for (int j : sparse_set)
    if (j < 0 || j >= data.p()) throw std::invalid_argument("ls_variants: index out of range");

  const Matrix xs = select_columns(data.x, sparse_set);

  const auto embed = [&](const Vector& coef) {
    Vector beta(data.p(), 0.0);
    for (int k = 0; k < s; ++k) beta[sparse_set[k]] = coef[k];
    return beta;
  };

  // Stacked projected fit for the test and variance path.
  const Matrix q = vstack(pset.a, pset.b);
  const Vector qy = multiply(q, data.y);
  const Matrix qxs = multiply(q, xs);
  const Vector beta_q = embed(ls_fit(qxs, qy).first);

  // Full-data fit for the shrinkage estimate.
  const Vector beta_full = embed(ls_fit(xs, data.y).first);

  LsVariants out;
  out.beta_q = beta_q;
  out.beta_full = beta_full;
  out.f_ls = f_test_from_beta(data, pset, beta_q, delta);
  out.var_ls = variance_estimates_from_beta(data, pset, wh, beta_q, truncate);
  out.eta_ls = eb_estimate_from_beta(data, beta_full, out.var_ls);
  return out;
}

}  // namespace mixedlm
