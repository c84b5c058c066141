#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mixedlm/dataset.hpp"
#include "mixedlm/eb.hpp"
#include "mixedlm/ew.hpp"
#include "mixedlm/inference.hpp"
#include "mixedlm/projections.hpp"
#include "mixedlm/rng.hpp"
#include "mixedlm/sim.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace mixedlm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct Opts {
  std::string config_path;
  std::string out;
  std::string trials_prefix;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::optional<double> level;
  std::optional<double> alpha;
  std::optional<int> u;
  std::optional<int> chains;
  std::optional<int> chain_len;
};

void add_common_options(CLI::App* sub, Opts& opts) {
  sub->add_option("--config", opts.config_path, "JSON configuration file")->required();
  sub->add_option("--out", opts.out, "output path (JSON copy, CSV file, or CSV prefix)");
  sub->add_option("--seed", opts.seed, "seed override");
  sub->add_option("--delta", opts.delta, "test level override");
  sub->add_option("--level", opts.level, "confidence level override");
  sub->add_option("--alpha", opts.alpha, "temperature override (<= 0: data-driven)");
  sub->add_option("--u", opts.u, "model size override (0: data-driven)");
  sub->add_option("--chains", opts.chains, "chain count override");
  sub->add_option("--chain-len", opts.chain_len, "chain length override");
}

json read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return json::parse(in);
}

// Settings shared by the data-driven subcommands.
struct RunSettings {
  DatasetSpec dataset;
  EwConfig ew;
  int u = 0;  // 0: choose from the projected block
  double delta = 0.05;
  double level = 0.95;
  bool truncate = true;
  std::uint64_t seed = 1;
};

RunSettings settings_from(const json& config, const Opts& opts) {
  RunSettings s;
  const json& d = config.at("data");
  s.dataset.csv_path = d.at("csv_path").get<std::string>();
  s.dataset.response_col = d.at("response_col").get<std::string>();
  for (const json& c : d.at("fixed_cols")) s.dataset.fixed_cols.push_back(c.get<std::string>());
  s.dataset.z_factor_col = d.at("z_factor_col").get<std::string>();
  if (d.contains("w_factor_col") && !d["w_factor_col"].is_null()) {
    s.dataset.w_factor_col = d["w_factor_col"].get<std::string>();
  }
  s.dataset.standardize_fixed = d.value("standardize_fixed", false);

  if (config.contains("fit")) {
    const json& f = config["fit"];
    s.u = f.value("u", 0);
    s.ew.alpha = f.value("alpha", 0.0);
    s.ew.chain_len = f.value("chain_len", s.ew.chain_len);
    s.ew.burn_in = f.value("burn_in", s.ew.burn_in);
    s.ew.n_chains = f.value("n_chains", s.ew.n_chains);
    s.ew.exact_threshold = f.value("exact_threshold", s.ew.exact_threshold);
  }
  s.delta = config.value("delta", 0.05);
  s.level = config.value("level", 0.95);
  s.truncate = config.value("truncate", true);
  s.seed = config.value("seed", static_cast<std::uint64_t>(1));

  if (opts.seed) s.seed = *opts.seed;
  if (opts.delta) s.delta = *opts.delta;
  if (opts.level) s.level = *opts.level;
  if (opts.alpha) s.ew.alpha = *opts.alpha;
  if (opts.u) s.u = *opts.u;
  if (opts.chains) s.ew.n_chains = *opts.chains;
  if (opts.chain_len) {
    s.ew.chain_len = *opts.chain_len;
    s.ew.burn_in = std::min(s.ew.burn_in, s.ew.chain_len / 5);
  }
  return s;
}

struct Analysis {
  LoadedDataset loaded;
  ProjectionSet pset;
  Whitening wh;
  int u = 0;
  EwFit fit_q;
};

Analysis analyze(const RunSettings& s, bool need_fit) {
  Analysis a;
  a.loaded = load_dataset(s.dataset);
  const MixedData& data = a.loaded.data;
  a.pset = build_projections(data.z, data.w);
  a.wh = whiten(a.pset, data.z, data.w);
  if (!need_fit) return a;

  int u = s.u;
  if (u <= 0) {
    EwConfig sparsity = s.ew;
    sparsity.seed = derive_seed(s.seed, 0xA1);
    u = estimate_sparsity(multiply(a.pset.b, data.y), multiply(a.pset.b, data.x), sparsity);
  }
  const int q_rows = a.pset.n_a() + a.pset.n_b();
  a.u = std::max(1, std::min({u, data.p(), q_rows - 1, data.n() - 1}));

  EwConfig fit_cfg = s.ew;
  fit_cfg.u = a.u;
  fit_cfg.seed = derive_seed(s.seed, 0xF1);
  const Matrix q = vstack(a.pset.a, a.pset.b);
  a.fit_q = ew_fit(multiply(q, data.y), multiply(q, data.x), fit_cfg);
  return a;
}

void emit(const json& out, const std::string& out_path) {
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write output file: " + out_path);
    f << text;
  }
}

int run_ftest(const RunSettings& s, const Opts& opts) {
  const Analysis a = analyze(s, true);
  const TestResult res = f_ew_test(a.loaded.data, a.pset, a.fit_q, s.delta);
  json out;
  out["schema"] = "mixedlm/ftest-result/1";
  out["f_stat"] = res.f_stat;
  out["df1"] = res.df1;
  out["df2"] = res.df2;
  out["p_value"] = res.p_value;
  out["delta"] = res.delta;
  out["reject"] = res.reject;
  out["u"] = a.u;
  out["alpha"] = a.fit_q.alpha;
  out["exact_enumeration"] = a.fit_q.exact;
  out["seed"] = s.seed;
  emit(out, opts.out);
  return kExitOk;
}

int run_ci(const RunSettings& s, const Opts& opts) {
  const Analysis a = analyze(s, true);
  const VarianceEstimates est =
      variance_estimates(a.loaded.data, a.pset, a.wh, a.fit_q, s.truncate);
  const CiResult ci = ci_sigma_nu(est, s.level);
  json out;
  out["schema"] = "mixedlm/ci-result/1";
  out["lower"] = ci.lower;
  out["upper"] = ci.upper;
  out["center"] = ci.center;
  out["level"] = ci.level;
  out["sigma_nu2"] = est.sigma_nu2;
  out["sigma_nu2_raw"] = est.sigma_nu2_raw;
  out["sigma_eps2"] = est.sigma_eps2;
  if (est.sigma_gamma2) {
    out["sigma_gamma2"] = *est.sigma_gamma2;
  } else {
    out["sigma_gamma2"] = nullptr;
  }
  out["d_bar"] = est.d_bar_hat;
  out["truncated_nu"] = est.truncated_nu;
  out["n"] = est.n;
  out["u"] = a.u;
  out["seed"] = s.seed;
  emit(out, opts.out);
  return kExitOk;
}

int run_eb(const RunSettings& s, const Opts& opts) {
  const Analysis a = analyze(s, true);
  const MixedData& data = a.loaded.data;
  const VarianceEstimates est = variance_estimates(data, a.pset, a.wh, a.fit_q, s.truncate);

  EwConfig full_cfg = s.ew;
  full_cfg.u = a.u;
  full_cfg.seed = derive_seed(s.seed, 0xF2);
  const EwFit fit_full = ew_fit(data.y, data.x, full_cfg);
  const EbEstimate eb = eb_estimate(data, fit_full, est);

  // Group ranking by average estimate, best first.
  const int n = data.n();
  const int v = data.v();
  std::vector<double> group_sum(static_cast<std::size_t>(v), 0.0);
  std::vector<int> group_count(static_cast<std::size_t>(v), 0);
  for (int i = 0; i < n; ++i) {
    const int g = a.loaded.z_index[static_cast<std::size_t>(i)];
    group_sum[static_cast<std::size_t>(g)] += eb.eta_hat[static_cast<std::size_t>(i)];
    group_count[static_cast<std::size_t>(g)] += 1;
  }
  std::vector<int> order(static_cast<std::size_t>(v));
  for (int g = 0; g < v; ++g) order[static_cast<std::size_t>(g)] = g;
  const auto avg = [&](int g) {
    return group_sum[static_cast<std::size_t>(g)] / group_count[static_cast<std::size_t>(g)];
  };
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    if (avg(lhs) != avg(rhs)) return avg(lhs) > avg(rhs);
    return lhs < rhs;
  });
  std::vector<int> rank_of(static_cast<std::size_t>(v), 0);
  for (int pos = 0; pos < v; ++pos) rank_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;

  std::vector<int> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  std::sort(rows.begin(), rows.end(), [&](int lhs, int rhs) {
    const int gl = rank_of[static_cast<std::size_t>(a.loaded.z_index[static_cast<std::size_t>(lhs)])];
    const int gr = rank_of[static_cast<std::size_t>(a.loaded.z_index[static_cast<std::size_t>(rhs)])];
    if (gl != gr) return gl < gr;
    return lhs < rhs;
  });

  const std::string csv_path = opts.out.empty() ? "eta_hat.csv" : opts.out;
  CsvTable table;
  table.header = {"row", "group", "eta_hat"};
  for (int i : rows) {
    const int g = a.loaded.z_index[static_cast<std::size_t>(i)];
    table.rows.push_back({std::to_string(i + 1), a.loaded.z_levels[static_cast<std::size_t>(g)],
                          format_double(eb.eta_hat[static_cast<std::size_t>(i)])});
  }
  write_csv(csv_path, table);

  json out;
  out["schema"] = "mixedlm/eb-result/1";
  out["csv"] = csv_path;
  out["n"] = n;
  out["u"] = a.u;
  out["gamma_term_dropped"] = eb.gamma_term_dropped;
  out["sigma_nu2"] = est.sigma_nu2;
  out["sigma_eps2"] = est.sigma_eps2;
  json ranking = json::array();
  for (int pos = 0; pos < v; ++pos) {
    const int g = order[static_cast<std::size_t>(pos)];
    json entry;
    entry["group"] = a.loaded.z_levels[static_cast<std::size_t>(g)];
    entry["average_eta_hat"] = avg(g);
    ranking.push_back(entry);
  }
  out["group_ranking"] = ranking;
  out["seed"] = s.seed;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  CsvTable table;
  for (int j = 0; j < m.cols(); ++j) table.header.push_back("c" + std::to_string(j + 1));
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(m.cols()));
    for (int j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

int run_project(const RunSettings& s, const Opts& opts) {
  const Analysis a = analyze(s, false);
  const std::string prefix = opts.out.empty() ? "projection_" : opts.out;

  write_matrix_csv(prefix + "a.csv", a.pset.a);
  write_matrix_csv(prefix + "b.csv", a.pset.b);
  write_matrix_csv(prefix + "c.csv", a.pset.c);

  CsvTable spectra;
  spectra.header = {"block", "index", "value"};
  for (std::size_t k = 0; k < a.wh.d.size(); ++k) {
    spectra.rows.push_back({"d", std::to_string(k + 1), format_double(a.wh.d[k])});
  }
  for (std::size_t k = 0; k < a.wh.lambda.size(); ++k) {
    spectra.rows.push_back({"lambda", std::to_string(k + 1), format_double(a.wh.lambda[k])});
  }
  write_csv(prefix + "spectra.csv", spectra);

  json out;
  out["schema"] = "mixedlm/project-result/1";
  out["n"] = a.loaded.data.n();
  out["n_a"] = a.pset.n_a();
  out["n_b"] = a.pset.n_b();
  out["n_c"] = a.pset.n_c();
  out["rank_w"] = a.pset.rank_w;
  out["rank_wz"] = a.pset.rank_wz;
  out["gamma_space_empty"] = a.pset.gamma_space_empty;
  out["retained_a"] = a.wh.retained_a();
  out["retained_c"] = a.wh.retained_c();
  out["d_bar"] = a.wh.d_bar();
  if (a.wh.retained_c() > 0) {
    out["lambda_bar"] = a.wh.lambda_bar();
  } else {
    out["lambda_bar"] = nullptr;
  }
  json files;
  files["a"] = prefix + "a.csv";
  files["b"] = prefix + "b.csv";
  files["c"] = prefix + "c.csv";
  files["spectra"] = prefix + "spectra.csv";
  out["files"] = files;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

std::vector<double> grid_doubles(const json& node, double fallback) {
  if (node.is_null()) return {fallback};
  if (node.is_array()) {
    std::vector<double> out;
    for (const json& t : node) out.push_back(t.get<double>());
    if (out.empty()) out.push_back(fallback);
    return out;
  }
  return {node.get<double>()};
}

std::vector<int> grid_ints(const json& node, int fallback) {
  if (node.is_null()) return {fallback};
  if (node.is_array()) {
    std::vector<int> out;
    for (const json& t : node) out.push_back(t.get<int>());
    if (out.empty()) out.push_back(fallback);
    return out;
  }
  return {node.get<int>()};
}

void write_trials_csv(const std::string& path, const SimResult& res) {
  CsvTable table;
  table.header = {"trial",      "skipped",     "error",       "u",
                  "f_stat",     "reject",      "f_correct",   "ci_lower",
                  "ci_upper",   "ci_covers",   "loss_oracle", "loss_ew",
                  "sigma_nu2_hat", "sigma_eps2_hat", "f_ls_stat", "reject_ls",
                  "f_ls_correct", "ci_ls_lower", "ci_ls_upper", "ci_ls_covers",
                  "loss_ls"};
  for (const TrialRecord& t : res.trials) {
    table.rows.push_back({std::to_string(t.trial), t.skipped ? "1" : "0", t.error,
                          std::to_string(t.u), format_double(t.f_stat), t.reject ? "1" : "0",
                          t.f_correct ? "1" : "0", format_double(t.ci_lower),
                          format_double(t.ci_upper), t.ci_covers ? "1" : "0",
                          format_double(t.loss_oracle), format_double(t.loss_ew),
                          format_double(t.sigma_nu2_hat), format_double(t.sigma_eps2_hat),
                          format_double(t.f_ls_stat), t.reject_ls ? "1" : "0",
                          t.f_ls_correct ? "1" : "0", format_double(t.ci_ls_lower),
                          format_double(t.ci_ls_upper), t.ci_ls_covers ? "1" : "0",
                          format_double(t.loss_ls)});
  }
  write_csv(path, table);
}

int run_simulate(const json& config, const Opts& opts) {
  const json& s = config.at("sim");

  SimConfig base;
  base.n = s.value("n", base.n);
  base.p = s.value("p", base.p);
  base.s = s.value("s", base.s);
  base.n_trials = s.value("n_trials", base.n_trials);
  base.delta = s.value("delta", base.delta);
  base.level = s.value("level", base.level);
  base.sigma_eps2 = s.value("sigma_eps2", base.sigma_eps2);
  base.use_ls_oracle = s.value("use_ls_oracle", base.use_ls_oracle);
  base.truncate = s.value("truncate", base.truncate);
  base.redraw_design = s.value("redraw_design", base.redraw_design);
  base.u_override = s.value("u_override", base.u_override);
  if (s.contains("ew")) {
    const json& e = s["ew"];
    base.ew.alpha = e.value("alpha", base.ew.alpha);
    base.ew.chain_len = e.value("chain_len", base.ew.chain_len);
    base.ew.burn_in = e.value("burn_in", base.ew.burn_in);
    base.ew.n_chains = e.value("n_chains", base.ew.n_chains);
    base.ew.exact_threshold = e.value("exact_threshold", base.ew.exact_threshold);
  }

  std::uint64_t seed = config.value("seed", static_cast<std::uint64_t>(1));
  if (opts.seed) seed = *opts.seed;
  if (opts.delta) base.delta = *opts.delta;
  if (opts.level) base.level = *opts.level;
  if (opts.alpha) base.ew.alpha = *opts.alpha;
  if (opts.u) base.u_override = *opts.u;
  if (opts.chains) base.ew.n_chains = *opts.chains;
  if (opts.chain_len) {
    base.ew.chain_len = *opts.chain_len;
    base.ew.burn_in = std::min(base.ew.burn_in, base.ew.chain_len / 5);
  }

  const std::vector<double> rhos = grid_doubles(s.value("rho", json()), 0.0);
  const std::vector<int> vs = grid_ints(s.value("v", json()), 25);
  const std::vector<int> rs = grid_ints(s.value("r", json()), 25);
  std::vector<std::pair<double, double>> variances;
  if (s.contains("variances")) {
    for (const json& pair : s["variances"]) {
      variances.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
  }
  if (variances.empty()) {
    variances.emplace_back(s.value("sigma_nu2", 0.0), s.value("sigma_gamma2", 0.0));
  }

  json cells = json::array();
  int cell_index = 0;
  for (double rho : rhos) {
    for (int v : vs) {
      for (int r : rs) {
        for (const auto& [nu2, gamma2] : variances) {
          SimConfig cfg = base;
          cfg.rho = rho;
          cfg.v = v;
          cfg.r = r;
          cfg.sigma_nu2 = nu2;
          cfg.sigma_gamma2 = gamma2;
          cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(cell_index));
          const SimResult res = run_study(cfg);

          json cell;
          cell["cell"] = cell_index;
          cell["rho"] = rho;
          cell["v"] = v;
          cell["r"] = r;
          cell["sigma_nu2"] = nu2;
          cell["sigma_gamma2"] = gamma2;
          cell["n"] = cfg.n;
          cell["p"] = cfg.p;
          cell["s"] = cfg.s;
          cell["n_trials"] = cfg.n_trials;
          cell["n_completed"] = res.n_completed;
          cell["n_skipped"] = res.n_skipped;
          cell["ave_cov_f"] = res.ave_cov_f;
          cell["ave_cov_ci"] = res.ave_cov_ci;
          cell["ave_len_ci"] = res.ave_len_ci;
          cell["ave_loss_oracle"] = res.ave_loss_oracle;
          cell["ave_loss_ew"] = res.ave_loss_ew;
          cell["ave_cov_f_ls"] = res.ave_cov_f_ls;
          cell["ave_cov_ci_ls"] = res.ave_cov_ci_ls;
          cell["ave_len_ci_ls"] = res.ave_len_ci_ls;
          cell["ave_loss_ls"] = res.ave_loss_ls;
          cell["ave_u"] = res.ave_u;
          cells.push_back(cell);

          if (!opts.trials_prefix.empty()) {
            write_trials_csv(opts.trials_prefix + std::to_string(cell_index) + ".csv", res);
          }
          ++cell_index;
        }
      }
    }
  }

  json out;
  out["schema"] = "mixedlm/simulate-result/1";
  out["seed"] = seed;
  out["cells"] = cells;
  emit(out, opts.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossed random effects with high-dimensional fixed effects: "
               "projection F-test, variance interval, shrinkage prediction"};
  app.require_subcommand(1);

  Opts opts;
  CLI::App* ftest = app.add_subcommand("ftest", "test the target variance component");
  CLI::App* ci = app.add_subcommand("ci", "confidence interval for the target variance");
  CLI::App* eb = app.add_subcommand("eb", "shrinkage estimate of the group-level mean");
  CLI::App* project = app.add_subcommand("project", "dump projection blocks and spectra");
  CLI::App* simulate = app.add_subcommand("simulate", "run the synthetic study grid");
  for (CLI::App* sub : {ftest, ci, eb, project, simulate}) add_common_options(sub, opts);
  simulate->add_option("--trials-prefix", opts.trials_prefix,
                       "write per-trial CSVs with this path prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  json config;
  try {
    config = read_config(opts.config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return run_simulate(config, opts);
    const RunSettings settings = settings_from(config, opts);
    if (ftest->parsed()) return run_ftest(settings, opts);
    if (ci->parsed()) return run_ci(settings, opts);
    if (eb->parsed()) return run_eb(settings, opts);
    if (project->parsed()) return run_project(settings, opts);
  } catch (const json::exception& e) {
    std::cerr << "error: bad config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
