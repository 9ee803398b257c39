#include "lvct/dataset.hpp"

#include <stdexcept>

#include "lvct/rng.hpp"

namespace lvct {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::inverse_crime: return "inverse_crime";
    case Scenario::model_error: return "model_error";
    case Scenario::model_error_noise: return "model_error_noise";
  }
  throw std::logic_error("to_string: bad scenario");
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw std::logic_error("to_string: bad split");
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "inverse_crime") return Scenario::inverse_crime;
  if (s == "model_error") return Scenario::model_error;
  if (s == "model_error_noise") return Scenario::model_error_noise;
  throw std::invalid_argument("unknown scenario: " + s);
}

const Sinogram& measured(const DataItem& item) {
  return item.has_noise ? item.noisy : item.clean;
}

Sinogram add_noise(const Sinogram& g, double fraction, std::uint64_t seed) {
  if (fraction < 0.0) throw std::invalid_argument("add_noise: fraction must be >= 0");
  if (fraction == 0.0) return g;
  double sigma = fraction * g.values.maxCoeff();
  Rng rng(seed);
  Sinogram out = g;
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    out.values[i] += rng.normal(0.0, sigma);
  return out;
}

std::uint64_t split_offset(Split split) {
  switch (split) {
    case Split::train: return 0;
    case Split::val: return 1'000'000;
    case Split::test: return 2'000'000;
  }
  throw std::logic_error("split_offset: bad split");
}

Dataset generate_items(const DatasetParams& params, Split split,
                       const SystemMatrix& H_raw) {
  if (params.count < 0) throw std::invalid_argument("generate_items: negative count");
  Dataset ds;
  ds.split = split;
  ds.items.reserve(static_cast<std::size_t>(params.count));
  for (int i = 0; i < params.count; ++i) {
    std::uint64_t seed = params.base_seed + split_offset(split) + static_cast<std::uint64_t>(i);
    DataItem item;
    item.phantom = generate_phantom(seed, params.phantom);
    item.truth = rasterize(item.phantom, H_raw.side);
    if (params.scenario == Scenario::inverse_crime)
      item.clean = apply(H_raw, item.truth);
    else
      item.clean = analytic_sinogram(item.phantom, H_raw.geometry);
    if (params.scenario == Scenario::model_error_noise && params.noise_fraction > 0.0) {
      item.noisy = add_noise(item.clean, params.noise_fraction, derive_seed(seed, 1));
      item.has_noise = true;
    }
    ds.items.push_back(std::move(item));
  }
  return ds;
}

}  // namespace lvct
