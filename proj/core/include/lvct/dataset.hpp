#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvct/phantom.hpp"
#include "lvct/projector.hpp"

namespace lvct {

// How the measured data relates to the reconstruction operator H:
//   inverse_crime     g = H * truth (same discrete model both ways)
//   model_error       g = analytic ellipse integrals (H never sees them)
//   model_error_noise model_error plus Gaussian noise on g
enum class Scenario { inverse_crime, model_error, model_error_noise };
enum class Split { train, val, test };

const char* to_string(Scenario s);
const char* to_string(Split s);
Scenario scenario_from_string(const std::string& s);

struct DataItem {
  EllipsePhantom phantom;
  Image truth;
  Sinogram clean;
  Sinogram noisy;  // meaningful only when has_noise
  bool has_noise = false;
};

struct Dataset {
  Split split = Split::train;
  std::vector<DataItem> items;
};

// The sinogram a reconstruction is allowed to see.
const Sinogram& measured(const DataItem& item);

// g + iid Gaussian noise with sigma = fraction * max(g); deterministic per
// seed; fraction 0 returns g unchanged.
Sinogram add_noise(const Sinogram& g, double fraction, std::uint64_t seed);

// Split seed ranges are disjoint by construction: phantom i of a split uses
// seed base_seed + split_offset(split) + i.
std::uint64_t split_offset(Split split);

struct DatasetParams {
  Scenario scenario = Scenario::inverse_crime;
  int count = 0;
  std::uint64_t base_seed = 1;
  double noise_fraction = 0.02;  // used only in model_error_noise
  PhantomConfig phantom;
};

Dataset generate_items(const DatasetParams& params, Split split, const SystemMatrix& H_raw);

}  // namespace lvct
