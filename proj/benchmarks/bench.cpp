#include <benchmark/benchmark.h>

#include "mixedlm/ew.hpp"
#include "mixedlm/inference.hpp"
#include "mixedlm/projections.hpp"
#include "mixedlm/rng.hpp"
#include "mixedlm/special.hpp"

namespace {

using namespace mixedlm;

// Crossed two-factor indicators with n rows down-sampled from the v x r grid.
void crossed(int v, int r, int n, Matrix& z, Matrix& w, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> cells = rng.sample_without_replacement(v * r, n);
  z = Matrix(n, v);
  w = Matrix(n, r);
  for (int i = 0; i < n; ++i) {
    z(i, cells[static_cast<std::size_t>(i)] / r) = 1.0;
    w(i, cells[static_cast<std::size_t>(i)] % r) = 1.0;
  }
}

Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

Vector gaussian_vector(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vector x(static_cast<std::size_t>(n));
  for (double& t : x) t = rng.normal();
  return x;
}

void BM_BuildProjections(benchmark::State& state) {
  const int v = static_cast<int>(state.range(0));
  const int r = v;
  const int n = 8 * v;
  Matrix z, w;
  crossed(v, r, n, z, w, 1);
  for (auto _ : state) {
    ProjectionSet pset = build_projections(z, w);
    benchmark::DoNotOptimize(pset.rank_wz);
  }
}
BENCHMARK(BM_BuildProjections)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_Whiten(benchmark::State& state) {
  const int v = static_cast<int>(state.range(0));
  const int n = 8 * v;
  Matrix z, w;
  crossed(v, v, n, z, w, 2);
  const ProjectionSet pset = build_projections(z, w);
  for (auto _ : state) {
    Whitening wh = whiten(pset, z, w);
    benchmark::DoNotOptimize(wh.d.data());
  }
}
BENCHMARK(BM_Whiten)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_LsFit(benchmark::State& state) {
  const int rows = 175;
  const int cols = static_cast<int>(state.range(0));
  const Matrix design = gaussian_matrix(rows, cols, 3);
  const Vector y = gaussian_vector(rows, 4);
  for (auto _ : state) {
    auto fit = ls_fit(design, y);
    benchmark::DoNotOptimize(fit.second);
  }
}
BENCHMARK(BM_LsFit)->Arg(3)->Arg(10);

void BM_ExactEw(benchmark::State& state) {
  const int rows = 60;
  const int p = static_cast<int>(state.range(0));
  const Matrix x = gaussian_matrix(rows, p, 5);
  Vector y = gaussian_vector(rows, 6);
  for (int i = 0; i < rows; ++i) y[static_cast<std::size_t>(i)] += x(i, 0) - 0.5 * x(i, 1);
  EwConfig cfg;
  cfg.u = 2;
  for (auto _ : state) {
    EwFit fit = exact_ew(y, x, cfg);
    benchmark::DoNotOptimize(fit.beta_hat.data());
  }
}
BENCHMARK(BM_ExactEw)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_MhEw(benchmark::State& state) {
  const int rows = 150;
  const int p = 200;
  const Matrix x = gaussian_matrix(rows, p, 7);
  Vector y = gaussian_vector(rows, 8);
  for (int i = 0; i < rows; ++i) y[static_cast<std::size_t>(i)] += x(i, 0) + x(i, 1) - x(i, 2);
  EwConfig cfg;
  cfg.u = 3;
  cfg.chain_len = static_cast<int>(state.range(0));
  cfg.burn_in = cfg.chain_len / 5;
  cfg.n_chains = 1;
  cfg.seed = 9;
  for (auto _ : state) {
    EwFit fit = mh_ew(y, x, cfg);
    benchmark::DoNotOptimize(fit.beta_hat.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.chain_len);
}
BENCHMARK(BM_MhEw)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_FUpperQuantile(benchmark::State& state) {
  const FDist dist(24, 151);
  for (auto _ : state) {
    benchmark::DoNotOptimize(f_upper_quantile(dist, 0.05));
  }
}
BENCHMARK(BM_FUpperQuantile);

void BM_SpdSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix g = gaussian_matrix(n, n + 5, 10);
  Matrix m = gram_rows(g);
  for (int i = 0; i < n; ++i) m(i, i) += 1.0;
  const Vector rhs = gaussian_vector(n, 11);
  for (auto _ : state) {
    Vector sol = spd_solve(m, rhs);
    benchmark::DoNotOptimize(sol.data());
  }
}
BENCHMARK(BM_SpdSolve)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
