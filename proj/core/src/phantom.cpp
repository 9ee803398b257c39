#include "lvct/phantom.hpp"

#include <cmath>
#include <stdexcept>

#include "lvct/rng.hpp"

namespace lvct {

bool Ellipse::contains(double x, double y) const {
  double dx = x - center_x;
  double dy = y - center_y;
  double c = std::cos(rotation), s = std::sin(rotation);
  double u = dx * c + dy * s;   // along semi_axis_a
  double v = -dx * s + dy * c;  // along semi_axis_b
  double ua = u / semi_axis_a;
  double vb = v / semi_axis_b;
  return ua * ua + vb * vb <= 1.0;
}

bool Ellipse::fits_unit_square() const {
  double c = std::cos(rotation), s = std::sin(rotation);
  double a2 = semi_axis_a * semi_axis_a, b2 = semi_axis_b * semi_axis_b;
  double half_x = std::sqrt(a2 * c * c + b2 * s * s);
  double half_y = std::sqrt(a2 * s * s + b2 * c * c);
  return std::abs(center_x) + half_x <= 1.0 && std::abs(center_y) + half_y <= 1.0;
}

void PhantomConfig::validate() const {
  auto ordered = [](const ParamRange& r) { return r.lo <= r.hi; };
  if (!ordered(main_center) || !ordered(main_axis) || !ordered(main_amplitude) ||
      !ordered(minor_axis))
    throw std::invalid_argument("PhantomConfig: range with min > max");
  if (main_axis.lo <= 0.0 || minor_axis.lo <= 0.0)
    throw std::invalid_argument("PhantomConfig: semi-axes must be positive");
  if (minor_amplitude_floor < 0.0 || minor_amplitude_floor > minor_amplitude_cap)
    throw std::invalid_argument("PhantomConfig: bad minor amplitude band");
  if (min_minor < 0 || min_minor > max_minor)
    throw std::invalid_argument("PhantomConfig: bad minor-count range");
  if (max_attempts < 1)
    throw std::invalid_argument("PhantomConfig: max_attempts must be positive");
}

namespace {

// Each rejected draw burns one attempt from a shared budget; the budget
// turns unsatisfiable configs into an error instead of a hang.
void spend(int& attempts_left) {
  if (--attempts_left < 0)
    throw std::runtime_error(
        "generate_phantom: rejection sampling exceeded max_attempts; "
        "config ranges likely unsatisfiable");
}

}  // namespace

EllipsePhantom generate_phantom(std::uint64_t seed, const PhantomConfig& config) {
  config.validate();
  Rng rng(seed);
  int attempts_left = config.max_attempts;

  EllipsePhantom phantom;
  phantom.seed = seed;

  Ellipse main;
  for (;;) {
    main.center_x = rng.uniform(config.main_center.lo, config.main_center.hi);
    main.center_y = rng.uniform(config.main_center.lo, config.main_center.hi);
    main.semi_axis_a = rng.uniform(config.main_axis.lo, config.main_axis.hi);
    main.semi_axis_b = rng.uniform(config.main_axis.lo, config.main_axis.hi);
    main.rotation = rng.uniform(0.0, std::numbers::pi);
    main.amplitude = rng.uniform(config.main_amplitude.lo, config.main_amplitude.hi);
    if (main.fits_unit_square()) break;
    spend(attempts_left);
  }
  phantom.ellipses.push_back(main);

  int minor_count =
      config.min_minor +
      static_cast<int>(rng.uniform_int(
          static_cast<std::uint64_t>(config.max_minor - config.min_minor) + 1));

  for (int i = 0; i < minor_count; ++i) {
    Ellipse e;
    e.semi_axis_a = rng.uniform(config.minor_axis.lo, config.minor_axis.hi);
    e.semi_axis_b = rng.uniform(config.minor_axis.lo, config.minor_axis.hi);
    e.rotation = rng.uniform(0.0, std::numbers::pi);
    for (;;) {
      double amp = rng.uniform(-config.minor_amplitude_cap, config.minor_amplitude_cap);
      if (std::abs(amp) >= config.minor_amplitude_floor) {
        e.amplitude = amp;
        break;
      }
      spend(attempts_left);
    }
    // Center: uniform over the main ellipse's bounding box, kept when it
    // falls inside the main ellipse and the insert stays in the unit square.
    double c = std::cos(main.rotation), s = std::sin(main.rotation);
    double a2 = main.semi_axis_a * main.semi_axis_a;
    double b2 = main.semi_axis_b * main.semi_axis_b;
    double half_x = std::sqrt(a2 * c * c + b2 * s * s);
    double half_y = std::sqrt(a2 * s * s + b2 * c * c);
    for (;;) {
      e.center_x = rng.uniform(main.center_x - half_x, main.center_x + half_x);
      e.center_y = rng.uniform(main.center_y - half_y, main.center_y + half_y);
      if (main.contains(e.center_x, e.center_y) && e.fits_unit_square()) break;
      spend(attempts_left);
    }
    phantom.ellipses.push_back(e);
  }
  return phantom;
}

Image rasterize(const EllipsePhantom& phantom, int side) {
  if (side < 2) throw std::invalid_argument("rasterize: side must be >= 2");
  Image img(side);
  double step = 2.0 / side;
  for (int r = 0; r < side; ++r) {
    double y = 1.0 - (r + 0.5) * step;
    for (int col = 0; col < side; ++col) {
      double x = -1.0 + (col + 0.5) * step;
      double value = 0.0;
      for (const Ellipse& e : phantom.ellipses)
        if (e.contains(x, y)) value += e.amplitude;
      img.at(r, col) = value;
    }
  }
  return img;
}

double ellipse_line_integral(const Ellipse& e, double theta, double s) {
  // Offset of the ellipse center along the detector axis (-sin θ, cos θ).
  double s0 = -e.center_x * std::sin(theta) + e.center_y * std::cos(theta);
  // Projected half-width of the ellipse perpendicular to the ray.
  double rel = theta - e.rotation;
  double sa = std::sin(rel), ca = std::cos(rel);
  double w2 = e.semi_axis_a * e.semi_axis_a * sa * sa +
              e.semi_axis_b * e.semi_axis_b * ca * ca;
  double ds = s - s0;
  double chord2 = w2 - ds * ds;
  if (chord2 <= 0.0) return 0.0;
  return 2.0 * e.amplitude * e.semi_axis_a * e.semi_axis_b * std::sqrt(chord2) / w2;
}

Sinogram analytic_sinogram(const EllipsePhantom& phantom, const ScanGeometry& geometry) {
  geometry.validate();
  Sinogram sino(geometry.num_views, geometry.num_detectors);
  for (int v = 0; v < geometry.num_views; ++v) {
    double theta = geometry.view_angle_rad(v);
    for (int d = 0; d < geometry.num_detectors; ++d) {
      double s = geometry.detector_offset(d);
      double sum = 0.0;
      for (const Ellipse& e : phantom.ellipses) sum += ellipse_line_integral(e, theta, s);
      sino.at(v, d) = sum;
    }
  }
  return sino;
}

}  // namespace lvct
