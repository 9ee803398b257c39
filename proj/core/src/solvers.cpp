#include "lvct/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lvct/metrics.hpp"

namespace lvct {

Vector gradient_step(const SystemMatrix& H, const Vector& g, const Vector& f,
                     double step) {
  Vector residual = H.weights * f - g;
  return f - step * (H.weights.transpose() * residual);
}

void clamp_nonneg(Vector& f) {
  f = f.cwiseMax(0.0);
}

Image solve_ls(const SvdFactors& factors, const Sinogram& g) {
  return pseudoinverse_apply(factors, g);
}

namespace {

double data_objective(const SystemMatrix& H, const Vector& g, const Vector& f) {
  return 0.5 * (H.weights * f - g).squaredNorm();
}

double rel_change(const Vector& next, const Vector& prev) {
  double base = prev.norm();
  if (base == 0.0) base = 1.0;
  return (next - prev).norm() / base;
}

}  // namespace

std::pair<Image, SolveReport> solve_ls_nn(const SystemMatrix& H, const Sinogram& g,
                                          const Image& init, const SolverConfig& config) {
  config.validate();
  if (init.side != H.side) throw std::invalid_argument("solve_ls_nn: init side mismatch");
  if (g.size() != H.rows()) throw std::invalid_argument("solve_ls_nn: data size mismatch");

  Vector f = init.pixels;
  SolveReport report;
  for (int it = 0; it < config.max_iters; ++it) {
    Vector next = gradient_step(H, g.values, f, config.step_size);
    clamp_nonneg(next);
    double rc = rel_change(next, f);
    f = std::move(next);
    report.objective_trace.push_back(data_objective(H, g.values, f));
    report.rel_change_trace.push_back(rc);
    ++report.iterations_run;
    if (rc < config.rel_change_tol) {
      report.converged = true;
      break;
    }
  }
  Image out(H.side);
  out.pixels = std::move(f);
  return {std::move(out), std::move(report)};
}

double total_variation(const Vector& f, int side) {
  double tv = 0.0;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      double v = f[r * side + c];
      double gx = (c + 1 < side) ? f[r * side + c + 1] - v : 0.0;
      double gy = (r + 1 < side) ? f[(r + 1) * side + c] - v : 0.0;
      tv += std::sqrt(gx * gx + gy * gy);
    }
  }
  return tv;
}

Vector tv_prox(const Vector& v, int side, double gamma, int iters) {
  if (gamma <= 0.0) return v;
  // Dual projection: maximize over a dual field p with |p| <= 1 pointwise,
  // u = v - gamma * div(p). Fixed step 1/4, the usual choice for this scheme.
  int n = side * side;
  Vector px = Vector::Zero(n), py = Vector::Zero(n);
  Vector div = Vector::Zero(n);
  const double tau = 0.25;
  for (int it = 0; it < iters; ++it) {
    // gradient of (div p - v / gamma)
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        int i = r * side + c;
        double d = div[i] - v[i] / gamma;
        double gx = (c + 1 < side) ? (div[i + 1] - v[i + 1] / gamma) - d : 0.0;
        double gy = (r + 1 < side) ? (div[i + side] - v[i + side] / gamma) - d : 0.0;
        double nx = px[i] + tau * gx;
        double ny = py[i] + tau * gy;
        double mag = std::max(1.0, std::sqrt(nx * nx + ny * ny));
        px[i] = nx / mag;
        py[i] = ny / mag;
      }
    }
    // divergence of p: exact negative adjoint of the gradient above
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        int i = r * side + c;
        double dx = (c + 1 < side ? px[i] : 0.0) - (c > 0 ? px[i - 1] : 0.0);
        double dy = (r + 1 < side ? py[i] : 0.0) - (r > 0 ? py[i - side] : 0.0);
        div[i] = dx + dy;
      }
    }
  }
  return v - gamma * div;
}

std::pair<Image, SolveReport> solve_pls_tv(const SystemMatrix& H, const Sinogram& g,
                                           const SolverConfig& config) {
  config.validate();
  if (g.size() != H.rows()) throw std::invalid_argument("solve_pls_tv: data size mismatch");
  int n = H.cols();

  Vector f = Vector::Zero(n);
  Vector z = f;  // extrapolated point
  double theta = 1.0;
  SolveReport report;
  for (int it = 0; it < config.max_iters; ++it) {
    Vector candidate = gradient_step(H, g.values, z, config.step_size);
    Vector next = tv_prox(candidate, H.side, config.step_size * config.tv_lambda,
                          config.tv_inner_iters);
    clamp_nonneg(next);

    double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    z = next + ((theta - 1.0) / theta_next) * (next - f);
    theta = theta_next;

    double rc = rel_change(next, f);
    f = std::move(next);
    report.objective_trace.push_back(data_objective(H, g.values, f) +
                                     config.tv_lambda * total_variation(f, H.side));
    report.rel_change_trace.push_back(rc);
    ++report.iterations_run;
    if (rc < config.rel_change_tol) {
      report.converged = true;
      break;
    }
  }
  Image out(H.side);
  out.pixels = std::move(f);
  return {std::move(out), std::move(report)};
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(12);
  double lo = std::log10(1e-4), hi = std::log10(1e1);
  for (int i = 0; i < 12; ++i)
    grid[i] = std::pow(10.0, lo + (hi - lo) * i / 11.0);
  return grid;
}

SweepResult sweep_lambda(const SystemMatrix& H, const Sinogram& g, const Image& truth,
                         std::vector<double> grid, const SolverConfig& config) {
  if (grid.empty()) throw std::invalid_argument("sweep_lambda: empty grid");
  std::sort(grid.begin(), grid.end());  // ascending, so ties keep the smaller lambda

  SweepResult result;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    SolverConfig c = config;
    c.tv_lambda = lambda;
    auto [image, report] = solve_pls_tv(H, g, c);
    double err = rmse(image, truth);
    result.rmse_per_lambda.push_back(err);
    if (err < best) {
      best = err;
      result.best_lambda = lambda;
      result.best_image = std::move(image);
    }
  }
  return result;
}

}  // namespace lvct
