#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lvct {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Square grayscale image on [-1,1]^2, row-major: pixel (r,c) at r*side + c.
// Row 0 is the top of the image (y = +1 edge), column 0 the left (x = -1).
struct Image {
  int side = 0;
  Vector pixels;

  Image() = default;
  explicit Image(int side_) : side(side_), pixels(Vector::Zero(side_ * side_)) {
    if (side_ <= 0) throw std::invalid_argument("Image: side must be positive");
  }

  double& at(int r, int c) { return pixels[r * side + c]; }
  double at(int r, int c) const { return pixels[r * side + c]; }
  int size() const { return side * side; }
};

// Stacked projection data, row-major: view v, detector d at v*num_detectors + d.
struct Sinogram {
  int num_views = 0;
  int num_detectors = 0;
  Vector values;

  Sinogram() = default;
  Sinogram(int views, int detectors)
      : num_views(views), num_detectors(detectors),
        values(Vector::Zero(views * detectors)) {
    if (views <= 0 || detectors <= 0)
      throw std::invalid_argument("Sinogram: dimensions must be positive");
  }

  double& at(int v, int d) { return values[v * num_detectors + d]; }
  double at(int v, int d) const { return values[v * num_detectors + d]; }
  int size() const { return num_views * num_detectors; }
};

// Parallel-beam acquisition over a limited arc. View k looks along direction
// (cos θ_k, sin θ_k) with θ_k = angle_start + k * (angle_end - angle_start) /
// num_views, i.e. one view per degree when the arc length in degrees equals
// num_views and the endpoint is excluded. Detector i sits at signed offset
// (i - (num_detectors-1)/2) * detector_spacing along (-sin θ, cos θ),
// centered on the rotation axis.
struct ScanGeometry {
  int num_views = 0;
  double angle_start_deg = 0.0;
  double angle_end_deg = 0.0;
  int num_detectors = 0;
  double detector_spacing = 0.0;

  double view_angle_rad(int k) const {
    double span = angle_end_deg - angle_start_deg;
    return (angle_start_deg + span * k / num_views) * std::numbers::pi / 180.0;
  }
  double detector_offset(int i) const {
    return (i - 0.5 * (num_detectors - 1)) * detector_spacing;
  }
  int ray_count() const { return num_views * num_detectors; }

  void validate() const {
    if (num_views < 1 || num_detectors < 1)
      throw std::invalid_argument("ScanGeometry: need at least one view and detector");
    if (!(angle_end_deg > angle_start_deg))
      throw std::invalid_argument("ScanGeometry: angle_end must exceed angle_start");
    if (!(detector_spacing > 0.0))
      throw std::invalid_argument("ScanGeometry: detector_spacing must be positive");
  }
};

// Spacing such that the detector array spans the image diagonal (no ray that
// hits [-1,1]^2 can miss the array at any view angle).
inline double default_detector_spacing(int num_detectors) {
  return 2.0 * std::numbers::sqrt2 / num_detectors;
}

// Arc of `coverage_deg` degrees starting at `angle_start_deg`, one view per
// degree, detectors spanning the image diagonal.
inline ScanGeometry make_limited_geometry(double coverage_deg, int num_detectors,
                                          double angle_start_deg = 0.0) {
  ScanGeometry g;
  g.num_views = static_cast<int>(std::lround(coverage_deg));
  g.angle_start_deg = angle_start_deg;
  g.angle_end_deg = angle_start_deg + coverage_deg;
  g.num_detectors = num_detectors;
  g.detector_spacing = default_detector_spacing(num_detectors);
  g.validate();
  return g;
}

}  // namespace lvct
