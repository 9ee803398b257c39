#include <benchmark/benchmark.h>

#include "lvct/linops.hpp"
#include "lvct/phantom.hpp"
#include "lvct/solvers.hpp"

using namespace lvct;

namespace {

struct Setup {
  SystemMatrix H;
  SvdFactors factors;
  Sinogram g;
  explicit Setup(int side)
      : H(normalized(build_system_matrix(make_limited_geometry(60.0, side), side))),
        factors(svd(H)),
        g(apply(H, rasterize(generate_phantom(1), side))) {}
};

Setup& setup64() {
  static Setup s(64);
  return s;
}

void bm_svd_factorization(benchmark::State& state) {
  int side = static_cast<int>(state.range(0));
  SystemMatrix H = normalized(build_system_matrix(make_limited_geometry(60.0, side), side));
  for (auto _ : state) {
    SvdFactors f = svd(H);
    benchmark::DoNotOptimize(f.singular_values);
  }
}

void bm_pseudoinverse_apply(benchmark::State& state) {
  Setup& s = setup64();
  for (auto _ : state) {
    Vector f = pseudoinverse_apply(s.factors, s.g.values);
    benchmark::DoNotOptimize(f);
  }
}

void bm_pgd_iterations(benchmark::State& state) {
  Setup& s = setup64();
  SolverConfig config;
  config.max_iters = static_cast<int>(state.range(0));
  config.rel_change_tol = 1e-300;  // run the full budget
  Image zero(64);
  for (auto _ : state) {
    auto [img, report] = solve_ls_nn(s.H, s.g, zero, config);
    benchmark::DoNotOptimize(img.pixels);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_fista_tv_iterations(benchmark::State& state) {
  Setup& s = setup64();
  SolverConfig config;
  config.tv_lambda = 0.01;
  config.max_iters = static_cast<int>(state.range(0));
  config.rel_change_tol = 1e-300;
  for (auto _ : state) {
    auto [img, report] = solve_pls_tv(s.H, s.g, config);
    benchmark::DoNotOptimize(img.pixels);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_tv_prox(benchmark::State& state) {
  Image f = rasterize(generate_phantom(2), 64);
  for (auto _ : state) {
    Vector p = tv_prox(f.pixels, 64, 0.1, 20);
    benchmark::DoNotOptimize(p);
  }
}

BENCHMARK(bm_svd_factorization)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_pseudoinverse_apply);
BENCHMARK(bm_pgd_iterations)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fista_tv_iterations)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_tv_prox);

}  // namespace
