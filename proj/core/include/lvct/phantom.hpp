#pragma once

#include <cstdint>
#include <vector>

#include "lvct/types.hpp"

namespace lvct {

struct Ellipse {
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_axis_a = 0.0;
  double semi_axis_b = 0.0;
  double rotation = 0.0;  // radians, counter-clockwise
  double amplitude = 0.0;

  bool contains(double x, double y) const;
  // Tight axis-aligned bounding box stays inside [-1,1]^2.
  bool fits_unit_square() const;
};

// One main ellipse (index 0) plus several minor inserts whose centers lie
// inside the main one -- the structure of a head phantom without claiming
// anatomy.
struct EllipsePhantom {
  std::vector<Ellipse> ellipses;
  std::uint64_t seed = 0;
};

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct PhantomConfig {
  ParamRange main_center{-0.15, 0.15};  // both coordinates
  ParamRange main_axis{0.5, 0.8};       // both semi-axes
  ParamRange main_amplitude{0.8, 1.0};
  ParamRange minor_axis{0.05, 0.25};
  // Minor amplitudes are uniform on ±[amplitude_floor, amplitude_cap]:
  // signed contrast, but never so faint the insert is invisible.
  double minor_amplitude_cap = 0.4;
  double minor_amplitude_floor = 0.05;
  int min_minor = 2;
  int max_minor = 7;
  int max_attempts = 10000;

  void validate() const;
};

// Deterministic in `seed`. Throws std::runtime_error if rejection sampling
// exceeds config.max_attempts (unsatisfiable ranges).
EllipsePhantom generate_phantom(std::uint64_t seed, const PhantomConfig& config = {});

// Point-samples ellipse membership at pixel centers; overlaps add.
Image rasterize(const EllipsePhantom& phantom, int side);

// Exact line integral of one ellipse along the ray with direction angle
// `theta` (radians) at signed detector offset `s`.
double ellipse_line_integral(const Ellipse& e, double theta, double s);

// Closed-form sinogram: sum of per-ellipse chord integrals for every ray.
Sinogram analytic_sinogram(const EllipsePhantom& phantom, const ScanGeometry& geometry);

}  // namespace lvct
