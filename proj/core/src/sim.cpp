#include "mixedlm/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "mixedlm/rng.hpp"

namespace mixedlm {

namespace {

// Substream tags so the design, the per-trial noise, and the samplers never
// share a stream.
constexpr std::uint64_t kTagDesign = 0x00DE5160ULL;
constexpr std::uint64_t kTagNoise = 0x0100000000ULL;
constexpr std::uint64_t kTagSparsity = 0x0200000000ULL;
constexpr std::uint64_t kTagFitQ = 0x0300000000ULL;
constexpr std::uint64_t kTagFitFull = 0x0400000000ULL;

}  // namespace

void SimConfig::validate() const {
  if (n < 4) throw std::invalid_argument("SimConfig: n too small");
  if (p < 1 || s < 0 || s > p) throw std::invalid_argument("SimConfig: bad p or s");
  if (v < 2 || r < 1) throw std::invalid_argument("SimConfig: need v >= 2 and r >= 1");
  if (static_cast<long long>(v) * r < n)
    throw std::invalid_argument("SimConfig: need v * r >= n to sample distinct cells");
  if (v + r >= n) throw std::invalid_argument("SimConfig: need v + r < n");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("SimConfig: rho in [0, 1)");
  if (sigma_nu2 < 0.0 || sigma_gamma2 < 0.0 || !(sigma_eps2 > 0.0))
    throw std::invalid_argument("SimConfig: bad variance components");
  if (n_trials < 1) throw std::invalid_argument("SimConfig: n_trials must be positive");
  if (!(delta > 0.0 && delta < 1.0) || !(level > 0.0 && level < 1.0))
    throw std::invalid_argument("SimConfig: delta and level must lie in (0, 1)");
}

Vector equicorr_sqrt_apply(const Vector& g, double rho) {
  const int p = static_cast<int>(g.size());
  if (p < 1) throw std::invalid_argument("equicorr_sqrt_apply: empty vector");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("equicorr_sqrt_apply: rho in [0, 1)");
  if (rho == 0.0) return g;
  const double a = std::sqrt(1.0 - rho);
  const double b = std::sqrt(1.0 + (p - 1) * rho) - a;
  double mean = 0.0;
  for (double t : g) mean += t;
  mean /= p;
  Vector x(p);
  for (int j = 0; j < p; ++j) x[j] = a * g[j] + b * mean;
  return x;
}

Design gen_design(const SimConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Design d;
  d.x = Matrix(cfg.n, cfg.p);
  Vector g(cfg.p);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.p; ++j) g[j] = rng.normal();
    const Vector row = equicorr_sqrt_apply(g, cfg.rho);
    for (int j = 0; j < cfg.p; ++j) d.x(i, j) = row[j];
  }
  d.beta.assign(cfg.p, 0.0);
  for (int j = 0; j < cfg.s; ++j) d.beta[j] = 1.0;

  // n distinct cells of the v x r grid; cell = z_level * r + w_level.
  const std::vector<int> cells = rng.sample_without_replacement(cfg.v * cfg.r, cfg.n);
  d.z = Matrix(cfg.n, cfg.v);
  d.w = Matrix(cfg.n, cfg.r);
  for (int i = 0; i < cfg.n; ++i) {
    d.z(i, cells[i] / cfg.r) = 1.0;
    d.w(i, cells[i] % cfg.r) = 1.0;
  }
  return d;
}

Response gen_response(const Design& design, const SimConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const int n = design.x.rows();
  Response rsp;
  rsp.nu.resize(design.z.cols());
  rsp.gamma.resize(design.w.cols());
  rsp.eps.resize(n);
  const double s_nu = std::sqrt(cfg.sigma_nu2);
  const double s_gamma = std::sqrt(cfg.sigma_gamma2);
  const double s_eps = std::sqrt(cfg.sigma_eps2);
  for (double& t : rsp.nu) t = s_nu * rng.normal();
  for (double& t : rsp.gamma) t = s_gamma * rng.normal();
  for (double& t : rsp.eps) t = s_eps * rng.normal();

  const Vector xb = multiply(design.x, design.beta);
  const Vector znu = multiply(design.z, rsp.nu);
  const Vector wgamma = multiply(design.w, rsp.gamma);
  rsp.eta = xb + znu;
  rsp.y = rsp.eta;
  for (int i = 0; i < n; ++i) rsp.y[i] += wgamma[i] + rsp.eps[i];
  return rsp;
}

SimResult aggregate_trials(const SimConfig& cfg, std::vector<TrialRecord> trials) {
  SimResult res;
  res.config = cfg;
  int done = 0;
  for (const TrialRecord& t : trials) {
    if (t.skipped) {
      ++res.n_skipped;
      continue;
    }
    ++done;
    res.ave_cov_f += t.f_correct ? 1.0 : 0.0;
    res.ave_cov_ci += t.ci_covers ? 1.0 : 0.0;
    res.ave_len_ci += t.ci_upper - t.ci_lower;
    res.ave_loss_oracle += t.loss_oracle;
    res.ave_loss_ew += t.loss_ew;
    res.ave_u += t.u;
    if (cfg.use_ls_oracle) {
      res.ave_cov_f_ls += t.f_ls_correct ? 1.0 : 0.0;
      res.ave_cov_ci_ls += t.ci_ls_covers ? 1.0 : 0.0;
      res.ave_len_ci_ls += t.ci_ls_upper - t.ci_ls_lower;
      res.ave_loss_ls += t.loss_ls;
    }
  }
  res.n_completed = done;
  if (done > 0) {
    const double inv = 1.0 / done;
    res.ave_cov_f *= 100.0 * inv;
    res.ave_cov_ci *= 100.0 * inv;
    res.ave_len_ci *= inv;
    res.ave_loss_oracle *= inv;
    res.ave_loss_ew *= inv;
    res.ave_u *= inv;
    res.ave_cov_f_ls *= 100.0 * inv;
    res.ave_cov_ci_ls *= 100.0 * inv;
    res.ave_len_ci_ls *= inv;
    res.ave_loss_ls *= inv;
  }
  res.trials = std::move(trials);
  return res;
}

SimResult run_study(const SimConfig& cfg) {
  cfg.validate();

  Design design;
  ProjectionSet pset;
  Whitening wh;
  Matrix qx;  // stacked (a; b) projection of x
  Matrix bx;

  const auto prepare = [&](std::uint64_t design_seed) {
    design = gen_design(cfg, design_seed);
    pset = build_projections(design.z, design.w);
    wh = whiten(pset, design.z, design.w);
    qx = multiply(vstack(pset.a, pset.b), design.x);
    bx = multiply(pset.b, design.x);
  };
  if (!cfg.redraw_design) prepare(derive_seed(cfg.seed, kTagDesign));

  std::vector<TrialRecord> trials;
  trials.reserve(cfg.n_trials);
  std::vector<int> sparse_set(cfg.s);
  for (int j = 0; j < cfg.s; ++j) sparse_set[j] = j;

  for (int t = 0; t < cfg.n_trials; ++t) {
    TrialRecord rec;
    rec.trial = t;
    try {
      if (cfg.redraw_design) prepare(derive_seed(cfg.seed, kTagDesign + 1 + t));
      const Response rsp = gen_response(design, cfg, derive_seed(cfg.seed, kTagNoise + t));

      MixedData data{rsp.y, design.x, design.z, design.w};
      data.validate();

      const Vector by = multiply(pset.b, rsp.y);
      const Vector qy = multiply(vstack(pset.a, pset.b), rsp.y);
      const int q_rows = static_cast<int>(qy.size());

      int u = cfg.u_override;
      if (u <= 0) {
        EwConfig es_cfg = cfg.ew;
        es_cfg.seed = derive_seed(cfg.seed, kTagSparsity + t);
        u = estimate_sparsity(by, bx, es_cfg);
      }
      u = std::min({u, cfg.p, q_rows - 1, cfg.n - 1});
      rec.u = u;

      EwConfig fit_cfg = cfg.ew;
      fit_cfg.u = u;
      fit_cfg.alpha = 0.0;  // per-fit temperature from the working response

      fit_cfg.seed = derive_seed(cfg.seed, kTagFitQ + t);
      const EwFit fit_q = ew_fit(qy, qx, fit_cfg);

      const TestResult test = f_ew_test(data, pset, fit_q, cfg.delta);
      rec.f_stat = test.f_stat;
      rec.reject = test.reject;
      rec.f_correct = cfg.sigma_nu2 == 0.0 ? !test.reject : test.reject;

      const VarianceEstimates var_q =
          variance_estimates(data, pset, wh, fit_q, cfg.truncate);
      rec.sigma_nu2_hat = var_q.sigma_nu2;
      rec.sigma_eps2_hat = var_q.sigma_eps2;
      const CiResult ci = ci_sigma_nu(var_q, cfg.level);
      rec.ci_lower = ci.lower;
      rec.ci_upper = ci.upper;
      rec.ci_covers = ci.lower <= cfg.sigma_nu2 && cfg.sigma_nu2 <= ci.upper;

      fit_cfg.seed = derive_seed(cfg.seed, kTagFitFull + t);
      const EwFit fit_full = ew_fit(rsp.y, design.x, fit_cfg);
      const VarianceEstimates var_full =
          variance_estimates(data, pset, wh, fit_full, cfg.truncate);
      const EbEstimate eb = eb_estimate(data, fit_full, var_full);
      rec.loss_ew = squared_norm(eb.eta_hat - rsp.eta) / cfg.n;

      const OracleInputs oracle{multiply(design.x, design.beta), cfg.sigma_nu2, cfg.sigma_gamma2,
                                cfg.sigma_eps2};
      const EbEstimate ob = oracle_estimate(data, oracle);
      rec.loss_oracle = squared_norm(ob.eta_hat - rsp.eta) / cfg.n;

      if (cfg.use_ls_oracle) {
        if (cfg.s < 1) throw std::runtime_error("run_study: LS path needs s >= 1");
        const LsVariants lsv =
            ls_variants(data, pset, wh, sparse_set, cfg.delta, cfg.truncate);
        rec.f_ls_stat = lsv.f_ls.f_stat;
        rec.reject_ls = lsv.f_ls.reject;
        rec.f_ls_correct = cfg.sigma_nu2 == 0.0 ? !lsv.f_ls.reject : lsv.f_ls.reject;
        const CiResult ci_ls = ci_sigma_nu(lsv.var_ls, cfg.level);
        rec.ci_ls_lower = ci_ls.lower;
        rec.ci_ls_upper = ci_ls.upper;
        rec.ci_ls_covers = ci_ls.lower <= cfg.sigma_nu2 && cfg.sigma_nu2 <= ci_ls.upper;
        rec.loss_ls = squared_norm(lsv.eta_ls.eta_hat - rsp.eta) / cfg.n;
      }
    } catch (const std::exception& e) {
      rec.skipped = true;
      rec.error = e.what();
    }
    trials.push_back(std::move(rec));
  }
  return aggregate_trials(cfg, std::move(trials));
}

}  // namespace mixedlm
