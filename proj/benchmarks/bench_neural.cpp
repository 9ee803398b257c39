#include <benchmark/benchmark.h>

#include "lvct/linops.hpp"
#include "lvct/phantom.hpp"
#include "lvct/recon.hpp"

using namespace lvct;

namespace {

NetworkSpec full_scale_spec() {
  NetworkSpec spec;  // depth 8, width 32 defaults
  return spec;
}

void bm_forward(benchmark::State& state) {
  int side = static_cast<int>(state.range(0));
  Network net = init_network(full_scale_spec(), 1);
  Image f = rasterize(generate_phantom(1), side);
  for (auto _ : state) {
    Image out = forward(net, f);
    benchmark::DoNotOptimize(out.pixels);
  }
}

void bm_backward(benchmark::State& state) {
  int side = static_cast<int>(state.range(0));
  Network net = init_network(full_scale_spec(), 1);
  Image f = rasterize(generate_phantom(1), side);
  Image target = rasterize(generate_phantom(2), side);
  for (auto _ : state) {
    Gradients grads = backward(net, f, target);
    benchmark::DoNotOptimize(grads.loss);
  }
}

void bm_train_iteration(benchmark::State& state) {
  Network net = init_network(full_scale_spec(), 1);
  std::vector<TrainPair> pairs;
  for (std::uint64_t s = 0; s < 8; ++s) {
    TrainPair p;
    p.input = rasterize(generate_phantom(s), 64);
    p.target = rasterize(generate_phantom(s + 100), 64);
    pairs.push_back(std::move(p));
  }
  TrainConfig config;
  config.batch_size = 8;
  config.iterations = 1;
  config.seed = 3;
  for (auto _ : state) {
    Network out = train(net, pairs, config);
    benchmark::DoNotOptimize(out.layers.front().weights);
  }
}

void bm_reconstruct(benchmark::State& state) {
  static SystemMatrix H =
      normalized(build_system_matrix(make_limited_geometry(60.0, 64), 64));
  static SvdFactors factors = svd(H);
  Network net = init_network(full_scale_spec(), 1);
  Sinogram g = apply(H, rasterize(generate_phantom(1), 64));
  ReconConfig config;
  config.n_outer = static_cast<int>(state.range(0));
  for (auto _ : state) {
    ReconResult res = reconstruct(g, H, &factors, net, config);
    benchmark::DoNotOptimize(res.image.pixels);
  }
}

BENCHMARK(bm_forward)->Arg(64)->Arg(128);
BENCHMARK(bm_backward)->Arg(64)->Arg(128);
BENCHMARK(bm_train_iteration)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_reconstruct)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace
