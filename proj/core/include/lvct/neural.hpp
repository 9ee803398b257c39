#pragma once

#include <cstdint>
#include <vector>

#include "lvct/types.hpp"

namespace lvct {

enum class WeightInit { glorot_uniform, he_uniform };

// Residual CNN: a stack of 3x3 same-padded conv layers (1 -> width -> ... ->
// width -> 1 channels), ReLU after every layer except the last; the stack
// output is added to the input. With all-zero parameters the net is exactly
// the identity map.
struct NetworkSpec {
  int depth = 8;
  int width = 32;
  int kernel = 3;        // fixed; checked
  bool residual = true;  // fixed; checked
  bool use_relu = true;  // turn off only to probe the linear path in tests
  WeightInit init = WeightInit::glorot_uniform;

  void validate() const;
};

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  // One row per output channel; taps ordered (in_channel * 9 + ky*3 + kx).
  Matrix weights;
  Vector biases;
  // ADAM first/second moments, same shapes as the parameters.
  Matrix w_m, w_v;
  Vector b_m, b_v;
};

struct Network {
  NetworkSpec spec;
  std::vector<ConvLayer> layers;
  std::uint64_t init_seed = 0;

  std::size_t parameter_count() const;
  void reset_moments();
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  int iterations = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (iterations < 0) throw std::invalid_argument("TrainConfig: iterations must be >= 0");
  }
};

struct TrainPair {
  Image input;
  Image target;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  double loss = 0.0;
};

// Fan-scaled uniform initialization (Glorot by default, He optional),
// zero biases; bit-deterministic per seed.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

// out = f + residual_stack(f).
Image forward(const Network& net, const Image& f);

// Gradients of the per-example loss 1/(2n) * ||forward(f) - target||^2
// (n = pixel count) with respect to every weight and bias.
Gradients backward(const Network& net, const Image& f, const Image& target);

Gradients zero_gradients(const Network& net);

// In-place ADAM update on a flat parameter array; exposed so the optimizer
// can be exercised on scalar problems. t is the 1-based step number used for
// bias correction.
void adam_update(double* param, const double* grad, double* m, double* v,
                 std::ptrdiff_t count, double lr, std::int64_t t,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Applies one ADAM step (step number t >= 1) to all network parameters.
void adam_step(Network& net, const Gradients& grads, const TrainConfig& config,
               std::int64_t t);

// Minibatch training: per-epoch Fisher-Yates shuffle, batch-mean gradients
// accumulated in a fixed order, `iterations` ADAM steps. Deterministic per
// (seed, dataset).
Network train(Network net, const std::vector<TrainPair>& dataset,
              const TrainConfig& config);

// Mean of the per-example losses over a dataset.
double mean_loss(const Network& net, const std::vector<TrainPair>& dataset);

}  // namespace lvct
