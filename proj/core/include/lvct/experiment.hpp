#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lvct/dataset.hpp"
#include "lvct/metrics.hpp"
#include "lvct/recon.hpp"

namespace lvct {

struct ExperimentConfig {
  Scenario scenario = Scenario::inverse_crime;
  double angular_range_deg = 60.0;
  double angle_start_deg = 0.0;
  int side = 64;
  int num_detectors = 64;
  int train_images = 500;
  int val_images = 100;
  int test_images = 100;
  double noise_fraction = 0.02;  // takes effect only in model_error_noise
  std::uint64_t seed = 1;

  NetworkSpec network;       // depth 8, width 32
  TrainConfig train;         // lr 1e-4, batch 64; iterations below
  int train_iterations = 20000;  // per stage
  SolverConfig solver;
  int n_outer = 5;
  int n_collect = 10;
  bool collect_post_q = false;

  std::vector<double> lambda_grid;  // empty = default 12-point log grid
  int sweep_images = 8;             // validation images scored in the sweep
  bool oracle_lambda = false;       // per-test-image truth-scored selection

  double svd_truncation_tol = 1e-10;
  PhantomConfig phantom;
  std::string output_dir = "experiment_out";
  std::string svd_cache_dir;  // empty = <output_dir>/svd_cache

  ScanGeometry geometry() const {
    return make_limited_geometry(angular_range_deg, num_detectors, angle_start_deg);
  }
  // Exact least squares when the data are exactly in range (inverse crime),
  // non-negative PGD otherwise.
  ROperatorKind r_operator() const {
    return scenario == Scenario::inverse_crime ? ROperatorKind::pseudoinverse
                                               : ROperatorKind::nonneg_pgd;
  }
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

// Resolves output_dir against LVCT_EXPERIMENT_ROOT when it is relative and
// the variable is set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

Dataset generate_dataset(const ExperimentConfig& config, Split split,
                         const SystemMatrix& H_raw);

struct MethodStats {
  double mean_rmse = 0.0;
  double mean_ssim = 0.0;
  double std_rmse = 0.0;
  double std_ssim = 0.0;
  bool failed = false;
};

struct TraceStats {
  // Aggregates over the test set from the proposed (n_outer) runs.
  std::vector<double> mean_rmse_null_q;  // index k-1
  std::vector<double> mean_rmse_meas_r;
  double max_meas_ratio = 0.0;  // max over images, k of rmse_meas_R / ||truth||
};

struct ExperimentSummary {
  std::map<std::string, MethodStats> methods;  // baseline, pls_tv, single_pass, proposed
  TraceStats trace;
  double chosen_lambda = 0.0;  // NaN in oracle mode
  std::filesystem::path output_dir;
};

// Full pipeline: operator + SVD, datasets, two-stage training, lambda
// selection, four-method test evaluation, report files. Stage failures abort
// with a stage-tagged exception; per-method failures during evaluation are
// recorded as failed report rows instead.
ExperimentSummary run_experiment(const ExperimentConfig& config);

}  // namespace lvct
