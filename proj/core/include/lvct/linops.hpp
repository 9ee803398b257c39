#pragma once

#include "lvct/projector.hpp"

namespace lvct {

// Thin (rank-truncated) SVD of the system matrix: H = U diag(s) V^T with
// orthonormal U (m x r), V (n x r) and strictly positive s sorted descending.
struct SvdFactors {
  Matrix left;             // U
  Vector singular_values;  // s
  Matrix right;            // V
  int side = 0;            // image side for n = side^2 (0 for free matrices)

  int rank() const { return static_cast<int>(singular_values.size()); }
  int rows() const { return static_cast<int>(left.rows()); }
  int cols() const { return static_cast<int>(right.rows()); }
};

// Dense SVD with singular values below truncation_tol * sigma_max dropped.
// Guarded: refuses matrices wider than max_cols (dense factorization only).
// Throws std::runtime_error if the factorization fails to converge.
SvdFactors svd(const SystemMatrix& H, double truncation_tol = 1e-10,
               int max_cols = 16384);
SvdFactors svd_dense(const Matrix& A, double truncation_tol = 1e-10);

// Minimum-norm least-squares solution V diag(1/s) U^T g.
Vector pseudoinverse_apply(const SvdFactors& factors, const Vector& g);
Image pseudoinverse_apply(const SvdFactors& factors, const Sinogram& g);

// Orthogonal split of image space into the part the scan can see (row space
// of H, via P = V V^T) and its complement the measurements say nothing about.
// Holds a pointer to the factors; they must outlive the projectors.
class SpaceProjectors {
 public:
  explicit SpaceProjectors(const SvdFactors& factors) : factors_(&factors) {}

  Vector measurable(const Vector& f) const;
  Vector null(const Vector& f) const { return f - measurable(f); }
  Image measurable(const Image& f) const;
  Image null(const Image& f) const;

  const SvdFactors& factors() const { return *factors_; }

 private:
  const SvdFactors* factors_;
};

}  // namespace lvct
