#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mixedlm/linalg.hpp"

namespace mixedlm {

struct EwConfig {
  int u = 1;                 // model size; 0 means "choose via estimate_sparsity"
  double alpha = 0.0;        // temperature; <= 0 means 4 ||y||^2 / rows
  int chain_len = 10000;
  int burn_in = 2000;
  int n_chains = 4;
  std::uint64_t seed = 0;
  long long exact_threshold = 5000;  // enumerate when C(p, u) fits under this

  void validate(int p, int rows) const;  // throws std::invalid_argument
};

// Result of averaging per-model least-squares fits with weights
// proportional to exp(-RSS_m / alpha) over all size-u models.
struct EwFit {
  Vector beta_hat;   // weighted average coefficient vector, length p
  Vector fitted;     // design * beta_hat on the working data
  double alpha = 0.0;
  int u = 0;
  bool exact = false;

  // Exact mode: normalized weight of every model.
  std::map<std::vector<int>, double> weights;
  // Sampling mode: post-burn-in visit frequency of every visited model.
  std::map<std::vector<int>, double> visit_freq;
  double acceptance_rate = 0.0;
  long long swap_count = 0;
};

// Minimum-norm least squares: coefficient vector and residual sum of
// squares of y on the columns of design. Rank-deficient designs are handled
// by dropping dependent columns during the QR pass (relative column-norm
// tolerance 1e-10) and returning the minimum-norm solution.
std::pair<Vector, double> ls_fit(const Matrix& design, const Vector& y);

// Temperature heuristic 4 ||y||^2 / rows. Throws on an all-zero response.
double choose_alpha(const Vector& y);

// Exact enumeration of all C(p, u) models. Throws std::invalid_argument
// when the count exceeds cfg.exact_threshold.
EwFit exact_ew(const Vector& y, const Matrix& design, const EwConfig& cfg);

// Metropolis-Hastings over size-u models: single-swap proposals, acceptance
// min(1, exp((RSS_cur - RSS_prop)/alpha)), Rao-Blackwellized average of the
// per-model coefficient vectors after burn-in, averaged over cfg.n_chains
// independent chains (seeds derived from cfg.seed and the chain index).
EwFit mh_ew(const Vector& y, const Matrix& design, const EwConfig& cfg);

// exact_ew when C(p, u) <= cfg.exact_threshold, mh_ew otherwise.
EwFit ew_fit(const Vector& y, const Matrix& design, const EwConfig& cfg);

// Data-driven model size from the fully projected block (response by,
// design bx with rows = n_b). A variable-dimension MH chain with the
// stationary law proportional to exp(-RSS_m/alpha) * prior(|m|), where
// prior(k) = exp(-k log(2 e p / max(k,1))) and |m| is capped at
// n_b / (2 log p). Returns the number of coordinates of the chain-averaged
// coefficient vector exceeding 1/n_b in absolute value, floored at 1.
int estimate_sparsity(const Vector& by, const Matrix& bx, const EwConfig& cfg);

// C(n, k) clamped to avoid overflow; returns cap + 1 when the count
// exceeds cap.
long long binomial_capped(int n, int k, long long cap);

}  // namespace mixedlm
