#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lvct/linops.hpp"
#include "lvct/neural.hpp"
#include "lvct/phantom.hpp"

namespace lvct {

// All pixel/measurement payloads are flat little-endian float32 binaries
// (`<base>.f32`) with a JSON sidecar (`<base>.json`) describing the shape;
// weight files and the SVD cache follow the same pattern. Images destined
// for eyeballs go out as 8-bit min-max-scaled PGM.

void write_image(const std::filesystem::path& base, const Image& img);
Image read_image(const std::filesystem::path& base);

void write_sinogram(const std::filesystem::path& base, const Sinogram& g,
                    const ScanGeometry& geometry);
Sinogram read_sinogram(const std::filesystem::path& base,
                       ScanGeometry* geometry_out = nullptr);

void write_pgm(const std::filesystem::path& path, const Image& img);

// Weights: manifest (architecture, seed, free-form metadata) + one float32
// blob, layers in order, each layer's weights row-by-row then its biases.
void save_network(const std::filesystem::path& base, const Network& net,
                  const std::string& metadata = "");
Network load_network(const std::filesystem::path& base);

// SVD factor cache. Stored in float64: the projector identities the factors
// must satisfy sit at 1e-8, far below float32 resolution. Keyed by a hash of
// the geometry, image side, and truncation tolerance.
std::string factor_cache_key(const ScanGeometry& geometry, int side,
                             double truncation_tol);
void save_factors(const std::filesystem::path& dir, const std::string& key,
                  const SvdFactors& factors);
std::optional<SvdFactors> try_load_factors(const std::filesystem::path& dir,
                                           const std::string& key);

// Phantom manifests: one JSON object per line (seed + ellipse parameters).
void write_phantoms_jsonl(const std::filesystem::path& path,
                          const std::vector<EllipsePhantom>& phantoms);
std::vector<EllipsePhantom> read_phantoms_jsonl(const std::filesystem::path& path);

// Shortest round-trippable decimal form, identical across runs ("%.17g"
// would be exact too, but 9 significant digits keeps reports readable while
// staying deterministic).
std::string format_double(double value);

}  // namespace lvct
