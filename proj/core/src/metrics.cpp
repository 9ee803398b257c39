#include "lvct/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lvct {

double rmse(const Image& a, const Image& b) {
  if (a.side != b.side) throw std::invalid_argument("rmse: size mismatch");
  return std::sqrt((a.pixels - b.pixels).squaredNorm() / a.size());
}

namespace {

// Separable 'valid' convolution with a normalized Gaussian window.
// Input is side x side, output (side-w+1) x (side-w+1).
Matrix gaussian_filter_valid(const Vector& img, int side, const Vector& kernel) {
  int w = static_cast<int>(kernel.size());
  int out = side - w + 1;
  Matrix rows(out, side);  // filtered along rows (vertical pass)
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < side; ++c) {
      double acc = 0.0;
      for (int k = 0; k < w; ++k) acc += kernel[k] * img[(r + k) * side + c];
      rows(r, c) = acc;
    }
  Matrix full(out, out);  // then along columns (horizontal pass)
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < out; ++c) {
      double acc = 0.0;
      for (int k = 0; k < w; ++k) acc += kernel[k] * rows(r, c + k);
      full(r, c) = acc;
    }
  return full;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  if (a.side != b.side) throw std::invalid_argument("ssim: size mismatch");
  if (a.side < params.window)
    throw std::invalid_argument("ssim: image smaller than the window");
  if (params.window % 2 == 0 || params.window < 3)
    throw std::invalid_argument("ssim: window must be odd and >= 3");

  double lo = std::min(a.pixels.minCoeff(), b.pixels.minCoeff());
  double hi = std::max(a.pixels.maxCoeff(), b.pixels.maxCoeff());
  double range = hi - lo;
  if (range == 0.0) return 1.0;  // both images are the same constant
  double c1 = params.k1 * range * params.k1 * range;
  double c2 = params.k2 * range * params.k2 * range;

  Vector kernel(params.window);
  int half = params.window / 2;
  for (int i = 0; i < params.window; ++i) {
    double d = i - half;
    kernel[i] = std::exp(-0.5 * d * d / (params.sigma * params.sigma));
  }
  kernel /= kernel.sum();

  int side = a.side;
  Vector aa = a.pixels.cwiseProduct(a.pixels);
  Vector bb = b.pixels.cwiseProduct(b.pixels);
  Vector ab = a.pixels.cwiseProduct(b.pixels);
  Matrix mu_a = gaussian_filter_valid(a.pixels, side, kernel);
  Matrix mu_b = gaussian_filter_valid(b.pixels, side, kernel);
  Matrix m_aa = gaussian_filter_valid(aa, side, kernel);
  Matrix m_bb = gaussian_filter_valid(bb, side, kernel);
  Matrix m_ab = gaussian_filter_valid(ab, side, kernel);

  double total = 0.0;
  int out = side - params.window + 1;
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < out; ++c) {
      double ma = mu_a(r, c), mb = mu_b(r, c);
      double va = m_aa(r, c) - ma * ma;
      double vb = m_bb(r, c) - mb * mb;
      double cov = m_ab(r, c) - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / (out * out);
}

EvalResult decomposed_rmse(const Image& estimate, const Image& truth,
                           const SpaceProjectors& projectors,
                           const SsimParams& params) {
  if (estimate.side != truth.side)
    throw std::invalid_argument("decomposed_rmse: size mismatch");
  EvalResult result;
  result.rmse = rmse(estimate, truth);
  result.ssim = ssim(estimate, truth, params);
  Vector diff = estimate.pixels - truth.pixels;
  Vector meas = projectors.measurable(diff);
  Vector null = diff - meas;
  result.rmse_meas = std::sqrt(meas.squaredNorm() / diff.size());
  result.rmse_null = std::sqrt(null.squaredNorm() / diff.size());
  return result;
}

}  // namespace lvct
