#pragma once

#include <utility>
#include <vector>

#include "lvct/linops.hpp"

namespace lvct {

struct SolverConfig {
  double step_size = 0.75;      // stable for 0 < step < 2 once sigma_max = 1
  double rel_change_tol = 1e-3;  // stop when the iterate's relative l2 change drops below
  int max_iters = 2000;
  double tv_lambda = 0.0;
  int tv_inner_iters = 20;

  void validate() const {
    if (!(step_size > 0.0 && step_size < 2.0))
      throw std::invalid_argument("SolverConfig: step_size must be in (0,2)");
    if (!(rel_change_tol > 0.0))
      throw std::invalid_argument("SolverConfig: rel_change_tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
    if (tv_lambda < 0.0) throw std::invalid_argument("SolverConfig: tv_lambda must be >= 0");
    if (tv_inner_iters < 1)
      throw std::invalid_argument("SolverConfig: tv_inner_iters must be >= 1");
  }
};

struct SolveReport {
  int iterations_run = 0;
  std::vector<double> objective_trace;   // one entry per iteration
  std::vector<double> rel_change_trace;  // ditto
  bool converged = false;
};

// One gradient step on the data term 1/2 ||Hf - g||^2.
Vector gradient_step(const SystemMatrix& H, const Vector& g, const Vector& f,
                     double step);
void clamp_nonneg(Vector& f);

// Minimum-norm least-squares solution via the pseudoinverse.
Image solve_ls(const SvdFactors& factors, const Sinogram& g);

// Non-negative least squares by projected gradient descent.
std::pair<Image, SolveReport> solve_ls_nn(const SystemMatrix& H, const Sinogram& g,
                                          const Image& init, const SolverConfig& config);

// TV-penalized least squares by FISTA from an all-zeros start; TV proximal
// step via a fixed number of dual (Chambolle) iterations, then a clamp to
// f >= 0 each outer iteration.
std::pair<Image, SolveReport> solve_pls_tv(const SystemMatrix& H, const Sinogram& g,
                                           const SolverConfig& config);

// Isotropic total variation (forward differences, reflexive boundary).
double total_variation(const Vector& f, int side);

// prox_{gamma TV}(v): argmin_u 1/2||u - v||^2 + gamma TV(u), approximated by
// `iters` dual projection iterations.
Vector tv_prox(const Vector& v, int side, double gamma, int iters);

struct SweepResult {
  double best_lambda = 0.0;
  Image best_image;
  std::vector<double> rmse_per_lambda;
};

// Grid search over tv_lambda, scored by RMSE against truth; ties go to the
// smaller lambda. The grid is evaluated in ascending order.
SweepResult sweep_lambda(const SystemMatrix& H, const Sinogram& g, const Image& truth,
                         std::vector<double> grid, const SolverConfig& config);

// 12 logarithmically spaced points in [1e-4, 1e1] (post-normalization units).
std::vector<double> default_lambda_grid();

}  // namespace lvct
