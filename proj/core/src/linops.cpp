#include "lvct/linops.hpp"

#include <stdexcept>

#ifdef LVCT_HAVE_LAPACKE
#include <lapacke.h>
#else
#include <Eigen/SVD>
#endif

namespace lvct {

namespace {

SvdFactors truncate(Matrix&& U, Vector&& s, Matrix&& V, double truncation_tol) {
  int full = static_cast<int>(s.size());
  double sigma_max = full > 0 ? s[0] : 0.0;
  int r = 0;
  while (r < full && s[r] > truncation_tol * sigma_max && s[r] > 0.0) ++r;
  SvdFactors f;
  f.left = U.leftCols(r);
  f.singular_values = s.head(r);
  f.right = V.leftCols(r);
  return f;
}

}  // namespace

SvdFactors svd_dense(const Matrix& A, double truncation_tol) {
  int m = static_cast<int>(A.rows());
  int n = static_cast<int>(A.cols());
  int k = std::min(m, n);

#ifdef LVCT_HAVE_LAPACKE
  // dgesdd destroys its input; Eigen matrices are column-major like LAPACK.
  Matrix work = A;
  Matrix U(m, k), VT(k, n);
  Vector s(k);
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m,
                                   s.data(), U.data(), m, VT.data(), k);
  if (info < 0) throw std::invalid_argument("svd: bad argument to dgesdd");
  if (info > 0) throw std::runtime_error("svd: dgesdd did not converge");
  Matrix V = VT.transpose();
  return truncate(std::move(U), std::move(s), std::move(V), truncation_tol);
#else
  Eigen::BDCSVD<Matrix> solver(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("svd: BDCSVD did not converge");
  Matrix U = solver.matrixU();
  Vector s = solver.singularValues();
  Matrix V = solver.matrixV();
  return truncate(std::move(U), std::move(s), std::move(V), truncation_tol);
#endif
}

SvdFactors svd(const SystemMatrix& H, double truncation_tol, int max_cols) {
  if (H.cols() > max_cols)
    throw std::invalid_argument(
        "svd: matrix wider than the dense-SVD guard; raise max_cols knowingly");
  SvdFactors f = svd_dense(Matrix(H.weights), truncation_tol);
  f.side = H.side;
  return f;
}

Vector pseudoinverse_apply(const SvdFactors& factors, const Vector& g) {
  if (g.size() != factors.rows())
    throw std::invalid_argument("pseudoinverse_apply: size mismatch");
  Vector coeffs = factors.left.transpose() * g;
  coeffs.array() /= factors.singular_values.array();
  return factors.right * coeffs;
}

Image pseudoinverse_apply(const SvdFactors& factors, const Sinogram& g) {
  if (factors.side <= 0)
    throw std::invalid_argument("pseudoinverse_apply: factors carry no image side");
  Image f(factors.side);
  f.pixels = pseudoinverse_apply(factors, g.values);
  return f;
}

Vector SpaceProjectors::measurable(const Vector& f) const {
  if (f.size() != factors_->cols())
    throw std::invalid_argument("SpaceProjectors: size mismatch");
  return factors_->right * (factors_->right.transpose() * f);
}

Image SpaceProjectors::measurable(const Image& f) const {
  Image out(f.side);
  out.pixels = measurable(f.pixels);
  return out;
}

Image SpaceProjectors::null(const Image& f) const {
  Image out(f.side);
  out.pixels = null(f.pixels);
  return out;
}

}  // namespace lvct
