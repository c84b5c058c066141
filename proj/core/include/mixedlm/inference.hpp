#pragma once

#include <optional>

#include "mixedlm/ew.hpp"
#include "mixedlm/projections.hpp"

namespace mixedlm {

struct TestResult {
  double f_stat = 0.0;
  int df1 = 0;
  int df2 = 0;
  double p_value = 1.0;
  double delta = 0.0;
  bool reject = false;
};

struct VarianceEstimates {
  // Reported values; negative components are clamped to zero when
  // truncation is enabled (the *_raw fields always keep the untruncated
  // values, which the confidence interval centers on).
  double sigma_eps2 = 0.0;
  double sigma_nu2 = 0.0;
  std::optional<double> sigma_gamma2;
  double sigma_eps2_raw = 0.0;
  double sigma_nu2_raw = 0.0;
  std::optional<double> sigma_gamma2_raw;

  double d_bar_hat = 0.0;
  std::optional<double> lambda_bar_hat;

  // Plug-in variance pieces for the normal pivot of sigma_nu2.
  double sigma_a2 = 0.0;
  double sigma_b2 = 0.0;

  bool truncate_enabled = false;
  bool truncated_eps = false;
  bool truncated_nu = false;
  bool truncated_gamma = false;

  int n = 0;  // sample size the estimates came from
};

struct CiResult {
  double lower = 0.0;
  double upper = 0.0;
  double center = 0.0;
  double level = 0.0;
};

// F statistic comparing the mean squared residual of the a block against
// the b block: f = (||a(y - x beta)||^2 / n_a) / (||b(y - x beta)||^2 / n_b).
// Rejects at level delta against the F(n_a, n_b) reference. Throws
// std::runtime_error when the denominator is exactly zero.
TestResult f_test_from_beta(const MixedData& data, const ProjectionSet& pset, const Vector& beta,
                            double delta);

// Same test with the averaged coefficient vector of an exponential-weighting
// fit computed on the stacked (a; b)-projected data.
TestResult f_ew_test(const MixedData& data, const ProjectionSet& pset, const EwFit& fit,
                     double delta);

// Moment estimators of the variance components from the projected residual
// blocks, plus the plug-in pieces sigma_a2/sigma_b2 of the pivot variance.
// The gamma component is absent when the projection set has n_c = 0.
VarianceEstimates variance_estimates_from_beta(const MixedData& data, const ProjectionSet& pset,
                                               const Whitening& wh, const Vector& beta,
                                               bool truncate);
VarianceEstimates variance_estimates(const MixedData& data, const ProjectionSet& pset,
                                     const Whitening& wh, const EwFit& fit, bool truncate);

// Normal-pivot confidence interval for sigma_nu2 at the given two-sided
// level: center sigma_nu2_raw / d_bar_hat, half width
// z_{(1+level)/2} sqrt(sigma_a2 + sigma_b2) / (d_bar_hat sqrt(n)).
CiResult ci_sigma_nu(const VarianceEstimates& est, double level);

}  // namespace mixedlm
