#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lvct/projector.hpp"
#include "lvct/rng.hpp"
#include "lvct/types.hpp"

namespace lvct_test {

// Wraps an arbitrary dense matrix as a SystemMatrix so solver code can be
// exercised on problems with known answers. The geometry is a dummy single
// view with one detector per row.
inline lvct::SystemMatrix dense_system(const lvct::Matrix& A, int side) {
  if (A.cols() != static_cast<Eigen::Index>(side) * side)
    throw std::invalid_argument("dense_system: cols must equal side^2");
  lvct::SystemMatrix H;
  H.side = side;
  H.geometry.num_views = 1;
  H.geometry.angle_start_deg = 0.0;
  H.geometry.angle_end_deg = 1.0;
  H.geometry.num_detectors = static_cast<int>(A.rows());
  H.geometry.detector_spacing = 1.0;
  H.weights = A.sparseView();
  H.norm_estimate = lvct::estimate_norm(H);
  return H;
}

inline lvct::Image random_image(int side, lvct::Rng& rng, double lo = 0.0,
                                double hi = 1.0) {
  lvct::Image f(side);
  for (int i = 0; i < f.size(); ++i) f.pixels[i] = rng.uniform(lo, hi);
  return f;
}

inline lvct::Matrix random_matrix(int rows, int cols, lvct::Rng& rng,
                                  double lo = -1.0, double hi = 1.0) {
  lvct::Matrix A(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) A(i, j) = rng.uniform(lo, hi);
  return A;
}

inline lvct::Image make_image(int side, const std::vector<double>& values) {
  lvct::Image f(side);
  if (static_cast<int>(values.size()) != f.size())
    throw std::invalid_argument("make_image: wrong value count");
  for (int i = 0; i < f.size(); ++i) f.pixels[i] = values[i];
  return f;
}

inline double rel_err(const lvct::Vector& a, const lvct::Vector& b) {
  double denom = b.norm();
  return denom > 0.0 ? (a - b).norm() / denom : (a - b).norm();
}

// Unique scratch directory, removed (recursively) on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      std::filesystem::path candidate = base / (tag + "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        break;
      }
      if (i > 10000) throw std::runtime_error("TempDir: cannot create scratch dir");
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path_.string() : (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace lvct_test
