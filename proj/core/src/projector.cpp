#include "lvct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lvct/rng.hpp"

namespace lvct {

namespace {

// Cells crossed by the ray p(t) = origin + t * dir (|dir| = 1) inside
// [-1,1]^2, with intersection lengths. Merges the sorted x- and y-gridline
// crossing times and reads off the cell of each segment from its midpoint;
// equivalent to Siddon's traversal but immune to axis-degenerate rays.
void trace_ray(double ox, double oy, double dx, double dy, int side,
               std::vector<std::pair<int, double>>& cells) {
  cells.clear();
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  auto clip_slab = [&](double o, double d) {
    if (std::abs(d) < 1e-14) return std::abs(o) <= 1.0;
    double ta = (-1.0 - o) / d, tb = (1.0 - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return true;
  };
  if (!clip_slab(ox, dx) || !clip_slab(oy, dy)) return;
  if (!(t1 - t0 > 1e-14)) return;

  double w = 2.0 / side;
  std::vector<double> ts;
  ts.reserve(2 * side + 2);
  ts.push_back(t0);
  ts.push_back(t1);
  if (std::abs(dx) > 1e-14) {
    for (int j = 1; j < side; ++j) {
      double t = (-1.0 + j * w - ox) / dx;
      if (t > t0 && t < t1) ts.push_back(t);
    }
  }
  if (std::abs(dy) > 1e-14) {
    for (int j = 1; j < side; ++j) {
      double t = (-1.0 + j * w - oy) / dy;
      if (t > t0 && t < t1) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    double len = ts[i + 1] - ts[i];
    if (len <= 1e-14) continue;
    double tm = 0.5 * (ts[i] + ts[i + 1]);
    double x = ox + tm * dx;
    double y = oy + tm * dy;
    int c = std::clamp(static_cast<int>(std::floor((x + 1.0) / w)), 0, side - 1);
    int r = std::clamp(static_cast<int>(std::floor((1.0 - y) / w)), 0, side - 1);
    cells.emplace_back(r * side + c, len);
  }
}

}  // namespace

SystemMatrix build_system_matrix(const ScanGeometry& geometry, int side,
                                 std::size_t memory_budget_bytes) {
  geometry.validate();
  if (side < 2) throw std::invalid_argument("build_system_matrix: side must be >= 2");

  // A ray crosses at most 2*side cells; triplets + CSR storage both bounded.
  std::size_t rays = static_cast<std::size_t>(geometry.ray_count());
  std::size_t worst_nnz = rays * (2 * static_cast<std::size_t>(side) + 1);
  std::size_t predicted = worst_nnz * (sizeof(double) + 2 * sizeof(int));
  if (predicted > memory_budget_bytes)
    throw std::invalid_argument("build_system_matrix: geometry/side exceed memory budget");

  SystemMatrix H;
  H.geometry = geometry;
  H.side = side;
  H.weights.resize(geometry.ray_count(), side * side);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(worst_nnz / 2);
  std::vector<std::pair<int, double>> cells;
  for (int v = 0; v < geometry.num_views; ++v) {
    double theta = geometry.view_angle_rad(v);
    double dx = std::cos(theta), dy = std::sin(theta);
    for (int d = 0; d < geometry.num_detectors; ++d) {
      double s = geometry.detector_offset(d);
      // Ray passes through s * (-sin, cos), the detector axis point.
      trace_ray(-s * dy, s * dx, dx, dy, side, cells);
      int row = v * geometry.num_detectors + d;
      for (auto& [col, len] : cells) triplets.emplace_back(row, col, len);
    }
  }
  H.weights.setFromTriplets(triplets.begin(), triplets.end());
  H.weights.makeCompressed();
  H.norm_estimate = estimate_norm(H);
  return H;
}

Vector apply(const SystemMatrix& H, const Vector& f) {
  if (f.size() != H.cols()) throw std::invalid_argument("apply: size mismatch");
  return H.weights * f;
}

Vector apply_adjoint(const SystemMatrix& H, const Vector& g) {
  if (g.size() != H.rows()) throw std::invalid_argument("apply_adjoint: size mismatch");
  return H.weights.transpose() * g;
}

Sinogram apply(const SystemMatrix& H, const Image& f) {
  if (f.side != H.side) throw std::invalid_argument("apply: image side mismatch");
  Sinogram g(H.geometry.num_views, H.geometry.num_detectors);
  g.values = H.weights * f.pixels;
  return g;
}

Image apply_adjoint(const SystemMatrix& H, const Sinogram& g) {
  if (g.num_views != H.geometry.num_views || g.num_detectors != H.geometry.num_detectors)
    throw std::invalid_argument("apply_adjoint: sinogram shape mismatch");
  Image f(H.side);
  f.pixels = H.weights.transpose() * g.values;
  return f;
}

double estimate_norm(const SystemMatrix& H, int max_iters, double tol) {
  // Power iteration on H^T H from a fixed random start.
  Rng rng(0x9d2c5680u);
  Vector v(H.cols());
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector u = H.weights * v;
    Vector w = H.weights.transpose() * u;
    double norm = w.norm();
    if (norm == 0.0) return 0.0;  // zero operator
    v = w / norm;
    double next = std::sqrt(norm);  // ||H^T H v||^(1/2) -> sigma_max
    if (it > 0 && std::abs(next - sigma) <= tol * next) return next;
    sigma = next;
  }
  return sigma;
}

SystemMatrix normalized(const SystemMatrix& H) {
  if (!(H.norm_estimate > 0.0))
    throw std::invalid_argument("normalized: norm_estimate must be positive");
  SystemMatrix out = H;
  out.weights = H.weights / H.norm_estimate;
  out.norm_estimate = 1.0;
  return out;
}

}  // namespace lvct
