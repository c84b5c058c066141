#include "mixedlm/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "mixedlm/special.hpp"

namespace mixedlm {

TestResult f_test_from_beta(const MixedData& data, const ProjectionSet& pset, const Vector& beta,
                            double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("f test: delta in (0, 1)");
  const int n_a = pset.n_a();
  const int n_b = pset.n_b();
  if (n_a < 1 || n_b < 1) throw std::runtime_error("f test: empty projection block");

  const Vector resid = data.y - multiply(data.x, beta);
  const double num = squared_norm(multiply(pset.a, resid)) / n_a;
  const double den = squared_norm(multiply(pset.b, resid)) / n_b;
  if (den == 0.0) throw std::runtime_error("f test: zero denominator residual");

  TestResult out;
  out.f_stat = num / den;
  out.df1 = n_a;
  out.df2 = n_b;
  out.delta = delta;
  out.p_value = 1.0 - f_cdf(FDist(n_a, n_b), out.f_stat);
  out.reject = out.p_value < delta;
  return out;
}

TestResult f_ew_test(const MixedData& data, const ProjectionSet& pset, const EwFit& fit,
                     double delta) {
  return f_test_from_beta(data, pset, fit.beta_hat, delta);
}

VarianceEstimates variance_estimates_from_beta(const MixedData& data, const ProjectionSet& pset,
                                               const Whitening& wh, const Vector& beta,
                                               bool truncate) {
  const int n_b = pset.n_b();
  if (n_b < 1) throw std::runtime_error("variance_estimates: n_b = 0, no pure error block");

  VarianceEstimates est;
  est.n = data.n();
  est.truncate_enabled = truncate;

  const Vector resid = data.y - multiply(data.x, beta);

  est.sigma_eps2_raw = squared_norm(multiply(pset.b, resid)) / n_b;

  const double tr_d_inv = wh.trace_d_inv();
  est.d_bar_hat = wh.d_bar();
  est.sigma_nu2_raw = squared_norm(whiten_a_apply(wh, pset, resid)) / tr_d_inv - est.sigma_eps2_raw;

  if (wh.retained_c() > 0) {
    est.lambda_bar_hat = wh.lambda_bar();
    est.sigma_gamma2_raw =
        squared_norm(whiten_c_apply(wh, pset, resid)) / wh.trace_lambda_inv() - est.sigma_eps2_raw;
  }

  const auto report = [&](double raw, bool& flag) {
    if (truncate && raw < 0.0) {
      flag = true;
      return 0.0;
    }
    return raw;
  };
  est.sigma_eps2 = report(est.sigma_eps2_raw, est.truncated_eps);
  est.sigma_nu2 = report(est.sigma_nu2_raw, est.truncated_nu);
  if (est.sigma_gamma2_raw) est.sigma_gamma2 = report(*est.sigma_gamma2_raw, est.truncated_gamma);

  // Plug-in pivot variance: sigma_a2 from the whitened a block spectrum,
  // sigma_b2 from the b block.
  const double ratio = est.sigma_nu2 / est.d_bar_hat;
  double s = 0.0;
  for (double dk : wh.d) {
    const double term = ratio + est.sigma_eps2 / dk;
    s += term * term;
  }
  est.sigma_a2 = 2.0 * est.n * s / (tr_d_inv * tr_d_inv);
  est.sigma_b2 = 2.0 * est.n * est.sigma_eps2 * est.sigma_eps2 / n_b;
  return est;
}

VarianceEstimates variance_estimates(const MixedData& data, const ProjectionSet& pset,
                                     const Whitening& wh, const EwFit& fit, bool truncate) {
  return variance_estimates_from_beta(data, pset, wh, fit.beta_hat, truncate);
}

CiResult ci_sigma_nu(const VarianceEstimates& est, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("ci_sigma_nu: level in (0, 1)");
  if (!(est.d_bar_hat > 0.0)) throw std::runtime_error("ci_sigma_nu: nonpositive d_bar_hat");
  const double spread = est.sigma_a2 + est.sigma_b2;
  if (!(spread > 0.0)) throw std::runtime_error("ci_sigma_nu: zero pivot variance");
  if (est.n < 1) throw std::invalid_argument("ci_sigma_nu: bad sample size");

  const double z = normal_quantile(0.5 * (1.0 + level));
  CiResult ci;
  ci.level = level;
  ci.center = est.sigma_nu2_raw / est.d_bar_hat;
  const double half = z * std::sqrt(spread) / (est.d_bar_hat * std::sqrt(static_cast<double>(est.n)));
  ci.lower = ci.center - half;
  ci.upper = ci.center + half;
  return ci;
}

}  // namespace mixedlm
