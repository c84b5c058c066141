#pragma once

#include <cstdint>
#include <string>

#include "mixedlm/eb.hpp"

namespace mixedlm {

// One cell of the synthetic study grid: a crossed two-factor design with n
// rows sampled without replacement from the v x r grid of cells, Gaussian
// fixed-effect covariates with equi-correlation rho, and the first s
// coefficients of beta equal to one.
struct SimConfig {
  int n = 200;
  int p = 500;
  int s = 3;
  double rho = 0.0;
  int v = 25;
  int r = 25;
  double sigma_nu2 = 0.0;
  double sigma_gamma2 = 0.0;
  double sigma_eps2 = 1.0;
  int n_trials = 100;
  double delta = 0.05;
  double level = 0.95;
  std::uint64_t seed = 1;
  bool use_ls_oracle = true;
  bool truncate = true;
  bool redraw_design = false;  // default: one design draw, noise redrawn per trial
  int u_override = 0;          // 0: model size from estimate_sparsity per trial
  EwConfig ew;

  void validate() const;
};

struct Design {
  Matrix x;
  Matrix z;
  Matrix w;
  Vector beta;
};

struct Response {
  Vector y;
  Vector eta;  // x beta + z nu
  Vector nu;
  Vector gamma;
  Vector eps;
};

struct TrialRecord {
  int trial = 0;
  bool skipped = false;
  std::string error;
  int u = 0;
  double f_stat = 0.0;
  bool reject = false;
  bool f_correct = false;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool ci_covers = false;
  double loss_oracle = 0.0;
  double loss_ew = 0.0;
  double sigma_nu2_hat = 0.0;  // projected-path point estimate (truncated)
  double sigma_eps2_hat = 0.0;
  // Least-squares comparison path (when use_ls_oracle).
  double f_ls_stat = 0.0;
  bool reject_ls = false;
  bool f_ls_correct = false;
  double ci_ls_lower = 0.0;
  double ci_ls_upper = 0.0;
  bool ci_ls_covers = false;
  double loss_ls = 0.0;
};

// Percentages are on a 0-100 scale, matching how study tables are usually
// reported; losses are means of ||estimate - eta||^2 / n over completed
// trials.
struct SimResult {
  SimConfig config;
  int n_completed = 0;
  int n_skipped = 0;
  double ave_cov_f = 0.0;      // % of correct test decisions
  double ave_cov_ci = 0.0;     // % of intervals covering the true sigma_nu2
  double ave_len_ci = 0.0;
  double ave_loss_oracle = 0.0;
  double ave_loss_ew = 0.0;
  double ave_cov_f_ls = 0.0;
  double ave_cov_ci_ls = 0.0;
  double ave_len_ci_ls = 0.0;
  double ave_loss_ls = 0.0;
  double ave_u = 0.0;
  std::vector<TrialRecord> trials;
};

// x = sqrt(1 - rho) g + (sqrt(1 + (p-1) rho) - sqrt(1 - rho)) mean(g) 1:
// applies the closed-form square root of the equi-correlation matrix
// (1 - rho) I + rho J. Valid for rho in [0, 1).
Vector equicorr_sqrt_apply(const Vector& g, double rho);

Design gen_design(const SimConfig& cfg, std::uint64_t seed);
Response gen_response(const Design& design, const SimConfig& cfg, std::uint64_t seed);

// Aggregates trial records into the study metrics (exposed for testing).
SimResult aggregate_trials(const SimConfig& cfg, std::vector<TrialRecord> trials);

// Full study over cfg.n_trials independent noise draws: per trial the model
// size is chosen on the fully projected block, exponential-weighting fits
// run on the stacked projected data (test + interval) and on the full data
// (shrinkage estimate), and the oracle / least-squares comparison estimates
// are evaluated against the realized eta. Per-trial failures are recorded
// and skipped. Deterministic given cfg.seed.
SimResult run_study(const SimConfig& cfg);

}  // namespace mixedlm
