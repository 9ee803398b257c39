#include "lvct/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lvct/rng.hpp"

namespace lvct {

void NetworkSpec::validate() const {
  if (depth < 2) throw std::invalid_argument("NetworkSpec: depth must be >= 2");
  if (width < 1) throw std::invalid_argument("NetworkSpec: width must be >= 1");
  if (kernel != 3) throw std::invalid_argument("NetworkSpec: only 3x3 kernels supported");
  if (!residual) throw std::invalid_argument("NetworkSpec: network is residual by design");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const ConvLayer& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

void Network::reset_moments() {
  for (ConvLayer& l : layers) {
    l.w_m.setZero();
    l.w_v.setZero();
    l.b_m.setZero();
    l.b_v.setZero();
  }
}

namespace {

// Channel-major stack of side x side planes.
struct FeatureMap {
  int channels = 0;
  int side = 0;
  Vector data;

  FeatureMap() = default;
  FeatureMap(int ch, int s) : channels(ch), side(s), data(Vector::Zero(ch * s * s)) {}
  double* plane(int c) { return data.data() + static_cast<std::ptrdiff_t>(c) * side * side; }
  const double* plane(int c) const {
    return data.data() + static_cast<std::ptrdiff_t>(c) * side * side;
  }
};

// dst(r,c) += w * src(r+sy, c+sx) over the in-range region; everything a 3x3
// same-padded convolution (and its transpose) needs, one tap at a time.
void accumulate_shifted(double* dst, const double* src, int side, double w, int sy,
                        int sx) {
  int r_lo = std::max(0, -sy), r_hi = side - std::max(0, sy);
  int c_lo = std::max(0, -sx), c_hi = side - std::max(0, sx);
  int len = c_hi - c_lo;
  for (int r = r_lo; r < r_hi; ++r) {
    double* __restrict__ out = dst + r * side + c_lo;
    const double* __restrict__ in = src + (r + sy) * side + c_lo + sx;
    for (int c = 0; c < len; ++c) out[c] += w * in[c];
  }
}

// sum over (r,c) of a(r,c) * b(r+sy, c+sx): the weight-gradient pairing.
double dot_shifted(const double* a, const double* b, int side, int sy, int sx) {
  int r_lo = std::max(0, -sy), r_hi = side - std::max(0, sy);
  int c_lo = std::max(0, -sx), c_hi = side - std::max(0, sx);
  int len = c_hi - c_lo;
  double acc = 0.0;
  for (int r = r_lo; r < r_hi; ++r) {
    const double* __restrict__ pa = a + r * side + c_lo;
    const double* __restrict__ pb = b + (r + sy) * side + c_lo + sx;
    for (int c = 0; c < len; ++c) acc += pa[c] * pb[c];
  }
  return acc;
}

void conv_forward(const ConvLayer& layer, const FeatureMap& in, FeatureMap& out) {
  int side = in.side;
  int plane = side * side;
  for (int oc = 0; oc < layer.out_channels; ++oc) {
    double* z = out.plane(oc);
    std::fill(z, z + plane, layer.biases[oc]);
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      const double* a = in.plane(ic);
      for (int k = 0; k < 9; ++k)
        accumulate_shifted(z, a, side, layer.weights(oc, ic * 9 + k), k / 3 - 1,
                           k % 3 - 1);
    }
  }
}

void relu_inplace(FeatureMap& m) {
  m.data = m.data.cwiseMax(0.0);
}

// Forward pass keeping every layer's input; acts[0] is the image, acts[l+1]
// the (post-ReLU) output of layer l. The ReLU mask is recoverable from the
// stored activations (positive entries), so pre-activations are not kept.
void forward_stack(const Network& net, const Image& f, std::vector<FeatureMap>& acts) {
  int depth = net.spec.depth;
  acts.resize(depth + 1);
  acts[0] = FeatureMap(1, f.side);
  acts[0].data = f.pixels;
  for (int l = 0; l < depth; ++l) {
    const ConvLayer& layer = net.layers[l];
    acts[l + 1] = FeatureMap(layer.out_channels, f.side);
    conv_forward(layer, acts[l], acts[l + 1]);
    if (net.spec.use_relu && l + 1 < depth) relu_inplace(acts[l + 1]);
  }
}

}  // namespace

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  net.init_seed = seed;
  Rng rng(seed);
  net.layers.resize(spec.depth);
  for (int l = 0; l < spec.depth; ++l) {
    ConvLayer& layer = net.layers[l];
    layer.in_channels = (l == 0) ? 1 : spec.width;
    layer.out_channels = (l == spec.depth - 1) ? 1 : spec.width;
    int fan_in = layer.in_channels * 9;
    int fan_out = layer.out_channels * 9;
    double limit = (spec.init == WeightInit::glorot_uniform)
                       ? std::sqrt(6.0 / (fan_in + fan_out))
                       : std::sqrt(6.0 / fan_in);
    layer.weights.resize(layer.out_channels, fan_in);
    for (int oc = 0; oc < layer.out_channels; ++oc)
      for (int j = 0; j < fan_in; ++j) layer.weights(oc, j) = rng.uniform(-limit, limit);
    layer.biases = Vector::Zero(layer.out_channels);
    layer.w_m = Matrix::Zero(layer.out_channels, fan_in);
    layer.w_v = layer.w_m;
    layer.b_m = Vector::Zero(layer.out_channels);
    layer.b_v = layer.b_m;
  }
  return net;
}

Image forward(const Network& net, const Image& f) {
  if (f.side < net.spec.kernel)
    throw std::invalid_argument("forward: image smaller than the kernel support");
  FeatureMap cur(1, f.side);
  cur.data = f.pixels;
  FeatureMap next;
  for (int l = 0; l < net.spec.depth; ++l) {
    const ConvLayer& layer = net.layers[l];
    next = FeatureMap(layer.out_channels, f.side);
    conv_forward(layer, cur, next);
    if (net.spec.use_relu && l + 1 < net.spec.depth) relu_inplace(next);
    cur = std::move(next);
  }
  Image out(f.side);
  out.pixels = f.pixels + cur.data;
  return out;
}

Gradients zero_gradients(const Network& net) {
  Gradients g;
  g.weights.reserve(net.layers.size());
  g.biases.reserve(net.layers.size());
  for (const ConvLayer& l : net.layers) {
    g.weights.emplace_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.biases.emplace_back(Vector::Zero(l.biases.size()));
  }
  return g;
}

namespace {

// Adds this example's gradients into `grads`; returns the example loss.
double backward_accumulate(const Network& net, const Image& f, const Image& target,
                           Gradients& grads) {
  if (f.side != target.side) throw std::invalid_argument("backward: shape mismatch");
  if (f.side < net.spec.kernel)
    throw std::invalid_argument("backward: image smaller than the kernel support");
  int depth = net.spec.depth;
  int side = f.side;
  int plane = side * side;

  std::vector<FeatureMap> acts;
  forward_stack(net, f, acts);

  // out = f + z_last; loss = 1/(2n) ||out - target||^2
  Vector err = f.pixels + acts[depth].data - target.pixels;
  double loss = 0.5 * err.squaredNorm() / plane;

  FeatureMap delta(1, side);  // d loss / d z_last
  delta.data = err / plane;

  for (int l = depth - 1; l >= 0; --l) {
    const ConvLayer& layer = net.layers[l];
    const FeatureMap& in = acts[l];
    Matrix& gw = grads.weights[l];
    Vector& gb = grads.biases[l];
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      const double* d = delta.plane(oc);
      gb[oc] += std::accumulate(d, d + plane, 0.0);
      for (int ic = 0; ic < layer.in_channels; ++ic) {
        const double* a = in.plane(ic);
        for (int k = 0; k < 9; ++k)
          gw(oc, ic * 9 + k) += dot_shifted(d, a, side, k / 3 - 1, k % 3 - 1);
      }
    }
    if (l == 0) break;
    FeatureMap prev_delta(layer.in_channels, side);
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      const double* d = delta.plane(oc);
      for (int ic = 0; ic < layer.in_channels; ++ic) {
        double* pd = prev_delta.plane(ic);
        for (int k = 0; k < 9; ++k)
          accumulate_shifted(pd, d, side, layer.weights(oc, ic * 9 + k), -(k / 3 - 1),
                             -(k % 3 - 1));
      }
    }
    if (net.spec.use_relu) {
      // acts[l] is post-ReLU: zero entries were clipped, so they gate.
      const double* a = acts[l].data.data();
      double* pd = prev_delta.data.data();
      for (int i = 0; i < prev_delta.data.size(); ++i)
        if (a[i] <= 0.0) pd[i] = 0.0;
    }
    delta = std::move(prev_delta);
  }
  grads.loss += loss;
  return loss;
}

}  // namespace

Gradients backward(const Network& net, const Image& f, const Image& target) {
  Gradients g = zero_gradients(net);
  g.loss = 0.0;
  backward_accumulate(net, f, target, g);
  return g;
}

void adam_update(double* param, const double* grad, double* m, double* v,
                 std::ptrdiff_t count, double lr, std::int64_t t, double beta1,
                 double beta2, double eps) {
  if (t < 1) throw std::invalid_argument("adam_update: step number must be >= 1");
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

void adam_step(Network& net, const Gradients& grads, const TrainConfig& config,
               std::int64_t t) {
  config.validate();
  if (grads.weights.size() != net.layers.size())
    throw std::invalid_argument("adam_step: gradient/layer count mismatch");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    ConvLayer& layer = net.layers[l];
    adam_update(layer.weights.data(), grads.weights[l].data(), layer.w_m.data(),
                layer.w_v.data(), layer.weights.size(), config.learning_rate, t);
    adam_update(layer.biases.data(), grads.biases[l].data(), layer.b_m.data(),
                layer.b_v.data(), layer.biases.size(), config.learning_rate, t);
  }
}

Network train(Network net, const std::vector<TrainPair>& dataset,
              const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  std::size_t pos = order.size();  // trigger a shuffle on first use

  Gradients acc = zero_gradients(net);
  for (std::int64_t t = 1; t <= config.iterations; ++t) {
    for (Matrix& gw : acc.weights) gw.setZero();
    for (Vector& gb : acc.biases) gb.setZero();
    acc.loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      if (pos == order.size()) {
        rng.shuffle(order);
        pos = 0;
      }
      const TrainPair& pair = dataset[order[pos++]];
      backward_accumulate(net, pair.input, pair.target, acc);
    }
    double scale = 1.0 / config.batch_size;
    for (Matrix& gw : acc.weights) gw *= scale;
    for (Vector& gb : acc.biases) gb *= scale;
    adam_step(net, acc, config, t);
  }
  return net;
}

double mean_loss(const Network& net, const std::vector<TrainPair>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("mean_loss: empty dataset");
  double total = 0.0;
  for (const TrainPair& pair : dataset) {
    Image out = forward(net, pair.input);
    total += 0.5 * (out.pixels - pair.target.pixels).squaredNorm() / out.size();
  }
  return total / dataset.size();
}

}  // namespace lvct
