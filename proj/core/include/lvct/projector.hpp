#pragma once

#include <Eigen/Sparse>
#include <cstddef>

#include "lvct/types.hpp"

namespace lvct {

// Discrete parallel-beam forward operator. Entry (ray, pixel) is the length
// of the intersection of that ray with the pixel's square cell, so H*f is a
// line-length-weighted sum of pixel values: the usual ray-tracing model for
// piecewise-constant images.
struct SystemMatrix {
  ScanGeometry geometry;
  int side = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> weights;
  double norm_estimate = 0.0;  // largest singular value, by power iteration

  int rows() const { return static_cast<int>(weights.rows()); }
  int cols() const { return static_cast<int>(weights.cols()); }
};

// Builds the operator row by row (one row per (view, detector) ray).
// Throws std::invalid_argument if the predicted storage exceeds
// `memory_budget_bytes`.
SystemMatrix build_system_matrix(const ScanGeometry& geometry, int side,
                                 std::size_t memory_budget_bytes = std::size_t{1} << 30);

Sinogram apply(const SystemMatrix& H, const Image& f);
Image apply_adjoint(const SystemMatrix& H, const Sinogram& g);

// Vector-level products (same operator, no Image/Sinogram framing).
Vector apply(const SystemMatrix& H, const Vector& f);
Vector apply_adjoint(const SystemMatrix& H, const Vector& g);

// Largest singular value via power iteration on H^T H; deterministic.
double estimate_norm(const SystemMatrix& H, int max_iters = 500, double tol = 1e-12);

// Copy of H with weights scaled so norm_estimate == 1. Solvers assume this
// scaling: it makes the fixed gradient step size provably stable. Measured
// data must be scaled by the same factor (divide g by H.norm_estimate).
SystemMatrix normalized(const SystemMatrix& H);

}  // namespace lvct
