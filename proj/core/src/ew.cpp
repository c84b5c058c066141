#include "mixedlm/ew.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixedlm/rng.hpp"

namespace mixedlm {

void EwConfig::validate(int p, int rows) const {
  if (u < 1) throw std::invalid_argument("EwConfig: u must be >= 1");
  if (u > std::min(p, rows - 1)) throw std::invalid_argument("EwConfig: u exceeds min(p, rows - 1)");
  if (chain_len < 1) throw std::invalid_argument("EwConfig: chain_len must be positive");
  if (burn_in < 0 || burn_in >= chain_len)
    throw std::invalid_argument("EwConfig: burn_in must lie in [0, chain_len)");
  if (n_chains < 1) throw std::invalid_argument("EwConfig: n_chains must be positive");
}

long long binomial_capped(int n, int k, long long cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long c = 1;
  for (int i = 1; i <= k; ++i) {
    const long long mult = n - k + i;
    if (c > cap || c > std::numeric_limits<long long>::max() / mult) return cap + 1;
    c = c * mult / i;  // exact: c * mult is C(n-k+i-1, i-1) * (n-k+i), divisible by i
  }
  return c > cap ? cap + 1 : c;
}

std::pair<Vector, double> ls_fit(const Matrix& design, const Vector& y) {
  const int rows = design.rows();
  const int cols = design.cols();
  if (static_cast<int>(y.size()) != rows) throw std::invalid_argument("ls_fit: size mismatch");
  constexpr double kRankTol = 1e-10;

  // Modified Gram-Schmidt QR over the columns in order, with one
  // re-orthogonalization pass; dependent columns are dropped but keep their
  // R-row coefficients so the minimum-norm solution can be recovered.
  std::vector<Vector> q;           // accepted orthonormal columns
  std::vector<int> pivot;          // original index of each accepted column
  Matrix r_rows(cols, cols, 0.0);  // row i: coefficients of q_i across all columns

  for (int j = 0; j < cols; ++j) {
    Vector v = get_column(design, j);
    const double orig = norm(v);
    if (orig == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double c = dot(q[i], v);
        r_rows(static_cast<int>(i), j) += c;
        for (int k = 0; k < rows; ++k) v[k] -= c * q[i][k];
      }
    }
    const double res = norm(v);
    if (res > kRankTol * orig && static_cast<int>(q.size()) < rows) {
      for (double& t : v) t /= res;
      r_rows(static_cast<int>(q.size()), j) = res;
      q.push_back(std::move(v));
      pivot.push_back(j);
    }
  }

  const int rank = static_cast<int>(q.size());
  Vector coef(cols, 0.0);
  if (rank > 0) {
    Vector qty(rank);
    for (int i = 0; i < rank; ++i) qty[i] = dot(q[i], y);

    // Minimum-norm solution of R z = Q^T y with R rank x cols:
    // z = R^T (R R^T)^{-1} Q^T y.
    Matrix rrt(rank, rank);
    for (int i = 0; i < rank; ++i)
      for (int j2 = i; j2 < rank; ++j2) {
        double s = 0.0;
        for (int c = 0; c < cols; ++c) s += r_rows(i, c) * r_rows(j2, c);
        rrt(i, j2) = s;
        rrt(j2, i) = s;
      }
    const Vector t = spd_solve(rrt, qty);
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = 0; i < rank; ++i) s += r_rows(i, c) * t[i];
      coef[c] = s;
    }
  }

  const Vector fitted = multiply(design, coef);
  double rss = 0.0;
  for (int i = 0; i < rows; ++i) {
    const double e = y[i] - fitted[i];
    rss += e * e;
  }
  return {std::move(coef), rss};
}

double choose_alpha(const Vector& y) {
  const double s = squared_norm(y);
  if (s == 0.0) throw std::invalid_argument("choose_alpha: response is identically zero");
  return 4.0 * s / static_cast<double>(y.size());
}

namespace {

struct ModelFit {
  Vector coef;  // length u, aligned with the model's indices
  double rss;
};

ModelFit fit_model(const Matrix& design, const Vector& y, const std::vector<int>& model) {
  auto [coef, rss] = ls_fit(select_columns(design, model), y);
  return {std::move(coef), rss};
}

double resolve_alpha(const EwConfig& cfg, const Vector& y) {
  return cfg.alpha > 0.0 ? cfg.alpha : choose_alpha(y);
}

}  // namespace

EwFit exact_ew(const Vector& y, const Matrix& design, const EwConfig& cfg) {
  const int rows = design.rows();
  const int p = design.cols();
  cfg.validate(p, rows);
  const int u = cfg.u;
  const long long n_models = binomial_capped(p, u, cfg.exact_threshold);
  if (n_models > cfg.exact_threshold)
    throw std::invalid_argument("exact_ew: C(p, u) exceeds exact_threshold");

  const double alpha = resolve_alpha(cfg, y);

  std::vector<std::vector<int>> models;
  models.reserve(static_cast<std::size_t>(n_models));
  std::vector<int> m(u);
  for (int i = 0; i < u; ++i) m[i] = i;
  for (;;) {
    models.push_back(m);
    int i = u - 1;
    while (i >= 0 && m[i] == p - u + i) --i;
    if (i < 0) break;
    ++m[i];
    for (int j = i + 1; j < u; ++j) m[j] = m[j - 1] + 1;
  }

  std::vector<ModelFit> fits;
  fits.reserve(models.size());
  double rss_min = INFINITY;
  for (const auto& mod : models) {
    fits.push_back(fit_model(design, y, mod));
    rss_min = std::min(rss_min, fits.back().rss);
  }

  // Log-sum-exp with the minimum RSS subtracted.
  double total = 0.0;
  std::vector<double> w(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    w[i] = std::exp(-(fits[i].rss - rss_min) / alpha);
    total += w[i];
  }

  EwFit out;
  out.alpha = alpha;
  out.u = u;
  out.exact = true;
  out.beta_hat.assign(p, 0.0);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double wi = w[i] / total;
    out.weights.emplace(models[i], wi);
    for (int j = 0; j < u; ++j) out.beta_hat[models[i][j]] += wi * fits[i].coef[j];
  }
  out.fitted = multiply(design, out.beta_hat);
  return out;
}

EwFit mh_ew(const Vector& y, const Matrix& design, const EwConfig& cfg) {
  const int rows = design.rows();
  const int p = design.cols();
  cfg.validate(p, rows);
  const int u = cfg.u;
  if (u >= p) throw std::invalid_argument("mh_ew: u must be < p for swap proposals");

  const double alpha = resolve_alpha(cfg, y);
  const long long retained_per_chain = cfg.chain_len - cfg.burn_in;

  Vector beta_sum(p, 0.0);
  std::map<std::vector<int>, long long> visits;
  long long accepted = 0;

  for (int chain = 0; chain < cfg.n_chains; ++chain) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(chain)));
    std::vector<int> state = rng.sample_without_replacement(p, u);
    std::vector<char> in_model(p, 0);
    for (int j : state) in_model[j] = 1;
    ModelFit cur = fit_model(design, y, state);

    for (int t = 0; t < cfg.chain_len; ++t) {
      // Swap one included index for one excluded index, both uniform.
      const int drop_pos = rng.uniform_index(u);
      const int drop_idx = state[drop_pos];
      int add_rank = rng.uniform_index(p - u);
      int add_idx = -1;
      for (int j = 0; j < p; ++j) {
        if (!in_model[j] && add_rank-- == 0) {
          add_idx = j;
          break;
        }
      }
      std::vector<int> prop = state;
      prop[drop_pos] = add_idx;
      std::sort(prop.begin(), prop.end());
      ModelFit next = fit_model(design, y, prop);

      const double log_acc = (cur.rss - next.rss) / alpha;
      if (log_acc >= 0.0 || rng.uniform() < std::exp(log_acc)) {
        in_model[drop_idx] = 0;
        in_model[add_idx] = 1;
        state = std::move(prop);
        cur = std::move(next);
        ++accepted;
      }
      if (t >= cfg.burn_in) {
        for (std::size_t j = 0; j < state.size(); ++j) beta_sum[state[j]] += cur.coef[j];
        ++visits[state];
      }
    }
  }

  const double denom = static_cast<double>(retained_per_chain) * cfg.n_chains;
  EwFit out;
  out.alpha = alpha;
  out.u = u;
  out.exact = false;
  out.beta_hat = scaled(beta_sum, 1.0 / denom);
  out.fitted = multiply(design, out.beta_hat);
  for (const auto& [model, count] : visits)
    out.visit_freq.emplace(model, static_cast<double>(count) / denom);
  out.acceptance_rate =
      static_cast<double>(accepted) / (static_cast<double>(cfg.chain_len) * cfg.n_chains);
  out.swap_count = accepted;
  return out;
}

EwFit ew_fit(const Vector& y, const Matrix& design, const EwConfig& cfg) {
  const long long n_models = binomial_capped(design.cols(), cfg.u, cfg.exact_threshold);
  if (n_models <= cfg.exact_threshold) return exact_ew(y, design, cfg);
  return mh_ew(y, design, cfg);
}

int estimate_sparsity(const Vector& by, const Matrix& bx, const EwConfig& cfg) {
  const int rows = bx.rows();
  const int p = bx.cols();
  if (rows < 2) throw std::invalid_argument("estimate_sparsity: need at least 2 rows");
  if (static_cast<int>(by.size()) != rows)
    throw std::invalid_argument("estimate_sparsity: size mismatch");
  if (cfg.chain_len < 1 || cfg.burn_in < 0 || cfg.burn_in >= cfg.chain_len || cfg.n_chains < 1)
    throw std::invalid_argument("estimate_sparsity: bad chain configuration");

  const double y2 = squared_norm(by);
  if (y2 == 0.0) return 1;  // nothing selectable in an exactly zero response
  const double alpha = 4.0 * y2 / rows;

  const int cap = std::max(
      1, std::min({p, rows - 1,
                   static_cast<int>(rows / (2.0 * std::log(std::max(p, 2))))}));
  const double log_2ep = std::log(2.0 * std::exp(1.0) * p);
  // log prior(k) = -k log(2 e p / max(k,1))
  const auto log_prior = [&](int k) {
    return k == 0 ? 0.0 : -k * (log_2ep - std::log(static_cast<double>(k)));
  };

  Vector beta_sum(p, 0.0);
  const long long retained_per_chain = cfg.chain_len - cfg.burn_in;

  for (int chain = 0; chain < cfg.n_chains; ++chain) {
    Rng rng(derive_seed(cfg.seed, 0x5E1EC7ULL + static_cast<std::uint64_t>(chain)));
    std::vector<int> state;  // sorted
    std::vector<char> in_model(p, 0);
    double cur_rss = y2;
    Vector cur_coef;

    for (int t = 0; t < cfg.chain_len; ++t) {
      const int k = static_cast<int>(state.size());
      const int move = rng.uniform_index(3);  // 0 add, 1 remove, 2 swap
      bool feasible = true;
      std::vector<int> prop;
      double log_q_ratio = 0.0;

      if (move == 0) {
        if (k >= cap || k >= p) {
          feasible = false;
        } else {
          int add_rank = rng.uniform_index(p - k);
          int add_idx = -1;
          for (int j = 0; j < p; ++j)
            if (!in_model[j] && add_rank-- == 0) { add_idx = j; break; }
          prop = state;
          prop.insert(std::lower_bound(prop.begin(), prop.end(), add_idx), add_idx);
          log_q_ratio = std::log(static_cast<double>(p - k)) - std::log(static_cast<double>(k + 1));
        }
      } else if (move == 1) {
        if (k == 0) {
          feasible = false;
        } else {
          const int drop_pos = rng.uniform_index(k);
          prop = state;
          prop.erase(prop.begin() + drop_pos);
          log_q_ratio = std::log(static_cast<double>(k)) - std::log(static_cast<double>(p - k + 1));
        }
      } else {
        if (k == 0 || k == p) {
          feasible = false;
        } else {
          const int drop_pos = rng.uniform_index(k);
          int add_rank = rng.uniform_index(p - k);
          int add_idx = -1;
          for (int j = 0; j < p; ++j)
            if (!in_model[j] && add_rank-- == 0) { add_idx = j; break; }
          prop = state;
          prop.erase(prop.begin() + drop_pos);
          prop.insert(std::lower_bound(prop.begin(), prop.end(), add_idx), add_idx);
        }
      }

      if (feasible) {
        ModelFit next = prop.empty() ? ModelFit{{}, y2} : fit_model(bx, by, prop);
        const double log_acc = (cur_rss - next.rss) / alpha +
                               log_prior(static_cast<int>(prop.size())) - log_prior(k) +
                               log_q_ratio;
        if (log_acc >= 0.0 || rng.uniform() < std::exp(log_acc)) {
          for (int j : state) in_model[j] = 0;
          for (int j : prop) in_model[j] = 1;
          state = std::move(prop);
          cur_rss = next.rss;
          cur_coef = std::move(next.coef);
        }
      }
      if (t >= cfg.burn_in)
        for (std::size_t j = 0; j < state.size(); ++j) beta_sum[state[j]] += cur_coef[j];
    }
  }

  const double denom = static_cast<double>(retained_per_chain) * cfg.n_chains;
  const double threshold = 1.0 / rows;
  int count = 0;
  for (int j = 0; j < p; ++j)
    if (std::abs(beta_sum[j] / denom) > threshold) ++count;
  return std::max(1, count);
}

}  // namespace mixedlm
