#pragma once

#include "mixedlm/inference.hpp"

namespace mixedlm {

struct EbEstimate {
  Vector eta_hat;
  Vector mu_hat;
  bool gamma_term_dropped = false;  // no usable gamma plug-in (n_c = 0)
};

struct OracleInputs {
  Vector mu;
  double sigma_nu2 = 0.0;    // >= 0
  double sigma_gamma2 = 0.0; // >= 0
  double sigma_eps2 = 1.0;   // > 0
};

// Empirical-Bayes style estimate of eta = mu + Z nu:
//   eta_hat = mu_hat + c_nu Z Z^T (c_nu Z Z^T + c_gamma W W^T + eps I)^{-1} (y - mu_hat)
// with mu_hat = X beta from a fit on the full (unprojected) data and the
// nonnegative plug-ins c_nu = sigma_nu2 / d_bar, c_gamma = sigma_gamma2 / lambda_bar,
// eps = sigma_eps2. When c_nu = 0 the estimate is exactly mu_hat.
EbEstimate eb_estimate(const MixedData& data, const EwFit& fit_full, const VarianceEstimates& est);
EbEstimate eb_estimate_from_beta(const MixedData& data, const Vector& beta,
                                 const VarianceEstimates& est);

// Same shrinkage with the true mean and true variance components.
EbEstimate oracle_estimate(const MixedData& data, const OracleInputs& oracle);

// Least-squares comparison pipeline on a known sparse support: the size-|S|
// OLS fit replaces the exponential-weighting average everywhere. The test
// and variance path use a fit on the stacked (a; b)-projected data, the
// shrinkage estimate a fit on the full data, mirroring the EW pipelines.
struct LsVariants {
  TestResult f_ls;
  VarianceEstimates var_ls;
  EbEstimate eta_ls;
  Vector beta_q;     // projected-data fit, embedded in R^p
  Vector beta_full;  // full-data fit, embedded in R^p
};

LsVariants ls_variants(const MixedData& data, const ProjectionSet& pset, const Whitening& wh,
                       const std::vector<int>& sparse_set, double delta, bool truncate);

}  // namespace mixedlm
