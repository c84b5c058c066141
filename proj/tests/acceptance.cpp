// Acceptance gate: nine end-to-end checks covering test calibration, power,
// interval behavior, shrinkage loss, sampler-enumeration agreement, reference
// distributions, quantile accuracy, projection invariants, and aggregation
// risk. One PASS/FAIL line per check; the process exits nonzero when any
// check fails. Expect a few minutes of runtime; progress goes to stderr.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "mixedlm/eb.hpp"
#include "mixedlm/ew.hpp"
#include "mixedlm/inference.hpp"
#include "mixedlm/projections.hpp"
#include "mixedlm/rng.hpp"
#include "mixedlm/sim.hpp"
#include "mixedlm/special.hpp"
#include "support/oracles.hpp"

using namespace mixedlm;

namespace {

int checks_passed = 0;
int checks_total = 0;
int extras_passed = 0;
int extras_total = 0;

void report(int index, bool pass, const std::string& text) {
  std::printf("[%d/9] %s  %s\n", index, pass ? "PASS" : "FAIL", text.c_str());
  std::fflush(stdout);
  checks_total += 1;
  if (pass) checks_passed += 1;
}

// Secondary checks that ride on the cached study results; they count toward
// the exit code but not toward the nine numbered criteria.
void report_extra(bool pass, const std::string& text) {
  std::printf("[ + ] %s  %s\n", pass ? "PASS" : "FAIL", text.c_str());
  std::fflush(stdout);
  extras_total += 1;
  if (pass) extras_passed += 1;
}

void progress(const char* what) {
  std::fprintf(stderr, "... %s\n", what);
  std::fflush(stderr);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return std::string(buf);
}

double max_abs_entry(const Matrix& m) {
  double worst = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j)));
  }
  return worst;
}

double max_dev_from_identity(const Matrix& m) {
  double worst = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      worst = std::max(worst, std::abs(m(i, j) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

// Checks 1-4 share two full-size studies: the same design scale with the
// target variance off (null) and on (signal).
struct StudyPair {
  SimResult null_res;
  SimResult sig_res;
  double null_seconds = 0.0;
};

StudyPair run_studies() {
  SimConfig base;
  base.n = 200;
  base.p = 500;
  base.s = 3;
  base.rho = 0.0;
  base.v = 25;
  base.r = 25;
  base.sigma_eps2 = 1.0;
  base.n_trials = 100;
  base.delta = 0.05;
  base.level = 0.95;

  StudyPair out;
  SimConfig null_cfg = base;
  null_cfg.sigma_nu2 = 0.0;
  null_cfg.sigma_gamma2 = 0.0;
  null_cfg.seed = 1001;
  progress("null study, 100 trials");
  const auto t0 = std::chrono::steady_clock::now();
  out.null_res = run_study(null_cfg);
  out.null_seconds = seconds_since(t0);

  SimConfig sig_cfg = base;
  sig_cfg.sigma_nu2 = 1.0;
  sig_cfg.sigma_gamma2 = 0.0;
  sig_cfg.seed = 1003;
  progress("signal study, 100 trials");
  out.sig_res = run_study(sig_cfg);
  return out;
}

void check_null_calibration(const StudyPair& studies) {
  const double cov = studies.null_res.ave_cov_f;
  const bool in_band = std::abs(cov - 91.0) <= 8.0;
  const bool in_time = studies.null_seconds <= 1800.0;
  report(1, in_band && in_time,
         fmt("null-test calibration: correct decisions %.1f%% (expect 91 +/- 8), "
             "runtime %.0fs (limit 1800s)",
             cov, studies.null_seconds));
}

void check_power(const StudyPair& studies) {
  const double cov = studies.sig_res.ave_cov_f;
  report(2, cov >= 95.0,
         fmt("power under signal: correct decisions %.1f%% (expect >= 95)", cov));
}

void check_intervals(const StudyPair& studies) {
  const double cov0 = studies.null_res.ave_cov_ci;
  const double len0 = studies.null_res.ave_len_ci;
  const double cov1 = studies.sig_res.ave_cov_ci;
  const double len1 = studies.sig_res.ave_len_ci;
  const bool pass = cov0 >= 95.0 && len0 >= 0.06 && len0 <= 0.25 &&
                    std::abs(cov1 - 80.0) <= 15.0 && std::abs(len1 - 1.10) <= 0.5;
  report(3, pass,
         fmt("interval behavior: null cov %.1f%% (>= 95) len %.3f (0.06..0.25); "
             "signal cov %.1f%% (80 +/- 15) len %.3f (1.10 +/- 0.5)",
             cov0, len0, cov1, len1));
}

void check_shrinkage_loss(const StudyPair& studies) {
  const double oracle = studies.sig_res.ave_loss_oracle;
  const double ew = studies.sig_res.ave_loss_ew;
  const bool pass = std::abs(oracle - 0.11) <= 0.04 && ew <= 0.6;
  report(4, pass,
         fmt("shrinkage loss under signal: oracle %.3f (0.11 +/- 0.04), "
             "aggregated %.3f (<= 0.6)",
             oracle, ew));
}

void check_shrinkage_extras(const StudyPair& studies) {
  const double ls = studies.sig_res.ave_loss_ls;
  report_extra(ls >= 0.07 && ls <= 0.30,
               fmt("least-squares shrinkage loss under signal: %.3f (0.07..0.30)", ls));
  const double gap = studies.sig_res.ave_loss_ew - studies.sig_res.ave_loss_oracle;
  report_extra(gap > 0.0 && gap <= 0.6,
               fmt("aggregated-vs-oracle loss gap under signal: %.3f (positive, <= 0.6)", gap));
}

void check_sampler_agreement() {
  progress("sampler vs enumeration");
  const int rows = 60;
  const int p = 8;
  Rng rng(505);
  Matrix x(rows, p);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
  }
  Vector y(rows);
  for (int i = 0; i < rows; ++i) {
    y[static_cast<std::size_t>(i)] =
        x(i, 0) - 0.6 * x(i, 1) + 0.3 * x(i, 2) + rng.normal();
  }

  EwConfig cfg;
  cfg.u = 2;
  cfg.alpha = 0.0;  // data-driven; identical in both modes
  const EwFit exact = exact_ew(y, x, cfg);

  EwConfig chain_cfg = cfg;
  chain_cfg.chain_len = 50000;
  chain_cfg.burn_in = 10000;
  chain_cfg.n_chains = 4;
  chain_cfg.seed = 3737;
  const auto t0 = std::chrono::steady_clock::now();
  const EwFit chain = mh_ew(y, x, chain_cfg);
  const double sec = seconds_since(t0);

  double gap = 0.0;
  double scale = 0.0;
  for (int j = 0; j < p; ++j) {
    gap = std::max(gap, std::abs(chain.beta_hat[static_cast<std::size_t>(j)] -
                                 exact.beta_hat[static_cast<std::size_t>(j)]));
    scale = std::max(scale, std::abs(exact.beta_hat[static_cast<std::size_t>(j)]));
  }
  const double gap_bound = 0.05 * (1.0 + scale);

  double tv = 0.0;
  for (const auto& [model, weight] : exact.weights) {
    const auto it = chain.visit_freq.find(model);
    const double freq = it == chain.visit_freq.end() ? 0.0 : it->second;
    tv += std::abs(weight - freq);
  }
  for (const auto& [model, freq] : chain.visit_freq) {
    if (exact.weights.find(model) == exact.weights.end()) tv += freq;
  }
  tv *= 0.5;

  const bool pass = gap <= gap_bound && tv <= 0.05 && sec <= 60.0;
  report(5, pass,
         fmt("sampler matches enumeration: coefficient gap %.2e (<= %.2e), "
             "tv distance %.3f (<= 0.05), runtime %.1fs (<= 60s)",
             gap, gap_bound, tv, sec));
}

// Shared setup for the two distributional checks: a fixed design, a known
// three-variable support, and least-squares refits across noise redraws.
struct LsRefit {
  Design design;
  ProjectionSet pset;
  Whitening wh;
  Matrix q;    // stacked (a; b) rows
  Matrix qxs;  // q times the true-support columns
  int p = 0;

  explicit LsRefit(const SimConfig& cfg, std::uint64_t design_seed)
      : design(gen_design(cfg, design_seed)),
        pset(build_projections(design.z, design.w)),
        wh(whiten(pset, design.z, design.w)),
        q(vstack(pset.a, pset.b)),
        qxs(multiply(q, select_columns(design.x, {0, 1, 2}))),
        p(cfg.p) {}

  Vector beta_for(const Vector& y) const {
    const auto [coef, rss] = ls_fit(qxs, multiply(q, y));
    Vector beta(static_cast<std::size_t>(p), 0.0);
    for (int j = 0; j < 3; ++j) beta[static_cast<std::size_t>(j)] = coef[static_cast<std::size_t>(j)];
    return beta;
  }
};

void check_reference_distributions() {
  const int reps = 2000;

  // (a) Test statistic under the null against its nominal F law.
  progress("null statistic distribution, 2000 redraws");
  SimConfig null_cfg;
  null_cfg.n = 200;
  null_cfg.p = 10;
  null_cfg.s = 3;
  null_cfg.v = 25;
  null_cfg.r = 25;
  null_cfg.sigma_nu2 = 0.0;
  null_cfg.sigma_gamma2 = 0.0;
  null_cfg.sigma_eps2 = 1.0;
  const LsRefit f_setup(null_cfg, derive_seed(606, 1));

  std::vector<double> f_stats;
  f_stats.reserve(reps);
  int df1 = 0;
  int df2 = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const Response resp = gen_response(f_setup.design, null_cfg, derive_seed(909, rep));
    const MixedData data{resp.y, f_setup.design.x, f_setup.design.z, f_setup.design.w};
    const TestResult res =
        f_test_from_beta(data, f_setup.pset, f_setup.beta_for(resp.y), 0.05);
    f_stats.push_back(res.f_stat);
    df1 = res.df1;
    df2 = res.df2;
  }
  const double f_ks = oracle::ks_statistic(f_stats, [&](double t) {
    return static_cast<double>(oracle::f_cdf_quad(df1, df2, t));
  });
  const double f_stat_ks = std::sqrt(static_cast<double>(reps)) * f_ks;

  // (b) Centered and scaled variance estimate against the normal law. A
  // balanced full cross keeps the whitened spectrum flat, which the root-n
  // normality needs at this sample size.
  progress("variance pivot distribution, 2000 redraws");
  SimConfig var_cfg;
  var_cfg.n = 1800;
  var_cfg.p = 10;
  var_cfg.s = 3;
  var_cfg.v = 300;
  var_cfg.r = 6;
  var_cfg.sigma_nu2 = 1.0;
  var_cfg.sigma_gamma2 = 0.5;
  var_cfg.sigma_eps2 = 1.0;
  const LsRefit v_setup(var_cfg, derive_seed(808, 1));

  double tr_d_inv = 0.0;
  double sum_sq = 0.0;
  for (double dk : v_setup.wh.d) {
    tr_d_inv += 1.0 / dk;
    const double term = var_cfg.sigma_nu2 + var_cfg.sigma_eps2 / dk;
    sum_sq += term * term;
  }
  const double n = static_cast<double>(var_cfg.n);
  const double sa = 2.0 * n * sum_sq / (tr_d_inv * tr_d_inv);
  const double sb = 2.0 * n * var_cfg.sigma_eps2 * var_cfg.sigma_eps2 /
                    static_cast<double>(v_setup.pset.n_b());
  const double pivot_scale = std::sqrt(sa + sb);
  const double target = v_setup.wh.d_bar() * var_cfg.sigma_nu2;

  std::vector<double> pivots;
  pivots.reserve(reps);
  for (int rep = 0; rep < reps; ++rep) {
    const Response resp = gen_response(v_setup.design, var_cfg, derive_seed(707, rep));
    const MixedData data{resp.y, v_setup.design.x, v_setup.design.z, v_setup.design.w};
    const VarianceEstimates est = variance_estimates_from_beta(
        data, v_setup.pset, v_setup.wh, v_setup.beta_for(resp.y), false);
    pivots.push_back(std::sqrt(n) * (est.sigma_nu2_raw - target) / pivot_scale);
  }
  const double v_ks = oracle::ks_statistic(pivots, [](double t) {
    return static_cast<double>(oracle::normal_cdf_series(t));
  });
  const double v_stat_ks = std::sqrt(static_cast<double>(reps)) * v_ks;

  const double crit = oracle::ks_critical(0.01);
  const bool pass = f_stat_ks <= crit && v_stat_ks <= crit;
  report(6, pass,
         fmt("reference distributions: test statistic ks %.3f, variance pivot "
             "ks %.3f (each <= %.3f at level 0.01, 2000 redraws)",
             f_stat_ks, v_stat_ks, crit));
}

void check_quantile_accuracy() {
  struct Case {
    int d1;
    int d2;
    double delta;
  };
  const Case cases[] = {{2, 10, 0.05},   {2, 10, 0.01},   {10, 10, 0.05},
                        {10, 10, 0.01},  {175, 175, 0.05}, {175, 175, 0.01}};
  double worst = 0.0;
  for (const Case& c : cases) {
    const double got = f_upper_quantile(FDist(c.d1, c.d2), c.delta);
    const double want = oracle::f_upper_quantile_quad(c.d1, c.d2, c.delta);
    worst = std::max(worst, std::abs(got - want));
  }
  const double nq_err = std::abs(normal_quantile(0.975) - 1.959964);
  const bool pass = worst <= 1e-6 && nq_err <= 1e-6;
  report(7, pass,
         fmt("quantile accuracy: max f-quantile error %.2e (<= 1e-6), "
             "normal quantile error %.2e (<= 1e-6)",
             worst, nq_err));
}

void check_projection_invariants() {
  progress("projection invariants, 50 designs");
  Rng rng(888);
  int designs_ok = 0;
  double worst = 0.0;
  std::string first_failure;

  for (int rep = 0; rep < 50; ++rep) {
    const int v = 4 + rng.uniform_index(27);
    const int r = 3 + rng.uniform_index(18);
    const int lo = v + r + 2;
    const int n = lo + rng.uniform_index(v * r - lo + 1);
    const std::vector<int> cells = rng.sample_without_replacement(v * r, n);
    Matrix z(n, v), w(n, r);
    for (int i = 0; i < n; ++i) {
      z(i, cells[static_cast<std::size_t>(i)] / r) = 1.0;
      w(i, cells[static_cast<std::size_t>(i)] % r) = 1.0;
    }

    const ProjectionSet pset = build_projections(z, w);
    const Whitening wh = whiten(pset, z, w);
    double dev = 0.0;
    std::string why;

    const auto track = [&](double value, const char* label) {
      dev = std::max(dev, value);
      if (value > 1e-8 && why.empty()) why = label;
    };
    track(max_dev_from_identity(gram_rows(pset.a)), "a rows not orthonormal");
    track(max_dev_from_identity(gram_rows(pset.b)), "b rows not orthonormal");
    if (pset.n_c() > 0) track(max_dev_from_identity(gram_rows(pset.c)), "c rows not orthonormal");
    track(max_abs_entry(multiply_bt(pset.a, pset.b)), "a and b not orthogonal");
    if (pset.n_c() > 0) {
      track(max_abs_entry(multiply_bt(pset.a, pset.c)), "a and c not orthogonal");
      track(max_abs_entry(multiply_bt(pset.b, pset.c)), "b and c not orthogonal");
      track(max_abs_entry(multiply(pset.c, z)), "c does not annihilate z");
    }
    track(max_abs_entry(multiply(pset.a, w)), "a does not annihilate w");
    track(max_abs_entry(multiply(pset.b, z)), "b does not annihilate z");
    track(max_abs_entry(multiply(pset.b, w)), "b does not annihilate w");

    bool ok = dev <= 1e-8;
    if (max_abs_entry(multiply(pset.a, z)) <= 1e-8) {
      ok = false;
      if (why.empty()) why = "a lost the z signal";
    }
    if (pset.n_c() > 0 && max_abs_entry(multiply(pset.c, w)) <= 1e-8) {
      ok = false;
      if (why.empty()) why = "c lost the w signal";
    }
    if (pset.n_a() + pset.rank_w != pset.rank_wz || pset.n_b() != n - pset.rank_wz ||
        n - pset.n_a() - pset.n_b() - pset.n_c() < 0) {
      ok = false;
      if (why.empty()) why = "rank accounting broken";
    }

    // Whitening: positive descending spectrum, orthonormal eigenvectors,
    // exact reconstruction of the projected Gram matrix.
    for (std::size_t k = 0; k < wh.d.size(); ++k) {
      if (wh.d[k] <= 0.0 || (k > 0 && wh.d[k - 1] < wh.d[k] - 1e-12)) {
        ok = false;
        if (why.empty()) why = "spectrum not positive descending";
      }
    }
    track(max_dev_from_identity(multiply(transpose(wh.v), wh.v)), "eigenvectors not orthonormal");

    if (wh.retained_a() == pset.n_a()) {
      const Matrix az = multiply(pset.a, z);
      Matrix vd = wh.v;
      for (int i = 0; i < vd.rows(); ++i) {
        for (int k = 0; k < vd.cols(); ++k) vd(i, k) *= wh.d[static_cast<std::size_t>(k)];
      }
      Matrix recon = multiply_bt(vd, wh.v);
      const Matrix gram = gram_rows(az);
      double recon_err = 0.0;
      for (int i = 0; i < recon.rows(); ++i) {
        for (int j = 0; j < recon.cols(); ++j) {
          recon_err = std::max(recon_err, std::abs(recon(i, j) - gram(i, j)));
        }
      }
      if (recon_err > 1e-7) {
        ok = false;
        if (why.empty()) why = "whitening reconstruction off";
      }
    }

    worst = std::max(worst, dev);
    if (ok) {
      designs_ok += 1;
    } else if (first_failure.empty()) {
      first_failure = fmt(" (first failure: v=%d r=%d n=%d, %s)", v, r, n, why.c_str());
    }
  }
  report(8, designs_ok == 50,
         fmt("projection invariants: %d/50 designs within tolerance, worst "
             "deviation %.2e%s",
             designs_ok, worst, first_failure.c_str()));
}

void check_aggregation_risk() {
  progress("aggregation risk, 50 runs");
  const int n = 400;
  const int p = 50;
  const double rho = 1.0 / 399.0;  // largest noise-covariance eigenvalue 2
  EwConfig cfg;
  cfg.u = 3;
  cfg.alpha = 13.0;
  cfg.exact_threshold = 20000;  // covers all C(50, 3) models

  double total = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    Rng rng(derive_seed(1209, rep));
    Matrix x(n, p);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    }
    Vector mu(n), g(n);
    for (int i = 0; i < n; ++i) {
      mu[static_cast<std::size_t>(i)] = x(i, 0) + x(i, 1) + x(i, 2);
      g[static_cast<std::size_t>(i)] = rng.normal();
    }
    const Vector y = mu + equicorr_sqrt_apply(g, rho);
    const EwFit fit = ew_fit(y, x, cfg);
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = fit.fitted[static_cast<std::size_t>(i)] - mu[static_cast<std::size_t>(i)];
      rss += e * e;
    }
    total += rss / n;
  }
  const double risk = total / 50.0;
  report(9, risk <= 0.15,
         fmt("aggregation risk: mean prediction risk %.4f (<= 0.15) over 50 runs",
             risk));
}

}  // namespace

int main() {
  const StudyPair studies = run_studies();
  check_null_calibration(studies);
  check_power(studies);
  check_intervals(studies);
  check_shrinkage_loss(studies);
  check_shrinkage_extras(studies);
  check_sampler_agreement();
  check_reference_distributions();
  check_quantile_accuracy();
  check_projection_invariants();
  check_aggregation_risk();

  std::printf("ACCEPTANCE: %d/%d criteria passed, %d/%d extra checks passed\n",
              checks_passed, checks_total, extras_passed, extras_total);
  return checks_passed == checks_total && extras_passed == extras_total ? 0 : 1;
}
