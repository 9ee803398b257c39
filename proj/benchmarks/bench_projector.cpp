#include <benchmark/benchmark.h>

#include "lvct/phantom.hpp"
#include "lvct/projector.hpp"

using namespace lvct;

namespace {

SystemMatrix cached_system(int side) {
  // one matrix per size, shared across apply/adjoint benchmarks
  static SystemMatrix h64 = normalized(build_system_matrix(make_limited_geometry(60.0, 64), 64));
  static SystemMatrix h128 =
      normalized(build_system_matrix(make_limited_geometry(60.0, 128), 128));
  return side == 64 ? h64 : h128;
}

void bm_build_system_matrix(benchmark::State& state) {
  int side = static_cast<int>(state.range(0));
  ScanGeometry geom = make_limited_geometry(60.0, side);
  for (auto _ : state) {
    SystemMatrix H = build_system_matrix(geom, side);
    benchmark::DoNotOptimize(H.weights);
  }
}

void bm_project(benchmark::State& state) {
  int side = static_cast<int>(state.range(0));
  SystemMatrix H = cached_system(side);
  Image f = rasterize(generate_phantom(1), side);
  for (auto _ : state) {
    Sinogram g = apply(H, f);
    benchmark::DoNotOptimize(g.values);
  }
}

void bm_backproject(benchmark::State& state) {
  int side = static_cast<int>(state.range(0));
  SystemMatrix H = cached_system(side);
  Sinogram g = apply(H, rasterize(generate_phantom(1), side));
  for (auto _ : state) {
    Vector f = apply_adjoint(H, g.values);
    benchmark::DoNotOptimize(f);
  }
}

void bm_rasterize(benchmark::State& state) {
  int side = static_cast<int>(state.range(0));
  EllipsePhantom phantom = generate_phantom(1);
  for (auto _ : state) {
    Image f = rasterize(phantom, side);
    benchmark::DoNotOptimize(f.pixels);
  }
}

BENCHMARK(bm_build_system_matrix)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_project)->Arg(64)->Arg(128);
BENCHMARK(bm_backproject)->Arg(64)->Arg(128);
BENCHMARK(bm_rasterize)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
