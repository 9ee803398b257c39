#pragma once

#include "lvct/linops.hpp"

namespace lvct {

// sqrt(mean of squared pixel differences).
double rmse(const Image& a, const Image& b);

struct SsimParams {
  int window = 11;      // odd
  double sigma = 1.5;   // Gaussian window width
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean local SSIM over all fully-interior windows. The stabilizing dynamic
// range is the joint min-to-max range of both images, which keeps the metric
// symmetric in its arguments. Identical constant images score 1.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

struct EvalResult {
  double rmse = 0.0;
  double ssim = 0.0;
  double rmse_meas = 0.0;  // error inside the measurable subspace
  double rmse_null = 0.0;  // error in the invisible complement
};

// Full evaluation of an estimate against truth, with the error split along
// the scan's measurable/null decomposition (rmse^2 = rmse_meas^2 + rmse_null^2).
EvalResult decomposed_rmse(const Image& estimate, const Image& truth,
                           const SpaceProjectors& projectors,
                           const SsimParams& params = {});

}  // namespace lvct
