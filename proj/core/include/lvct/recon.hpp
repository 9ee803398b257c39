#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "lvct/neural.hpp"
#include "lvct/solvers.hpp"

namespace lvct {

// The data-fidelity operator R used inside the alternation. The
// pseudoinverse flavor returns H+g plus the warm start's null-space
// component (it cannot know anything the data does not constrain, so it
// leaves that part alone); the PGD flavor runs non-negative least squares
// from the warm start.
enum class ROperatorKind { pseudoinverse, nonneg_pgd };

struct ReconConfig {
  int n_outer = 5;
  ROperatorKind r_operator = ROperatorKind::pseudoinverse;
  SolverConfig solver;

  void validate() const {
    if (n_outer < 1) throw std::invalid_argument("ReconConfig: n_outer must be >= 1");
    solver.validate();
  }
};

struct IterationRecord {
  double rmse_meas_R = std::numeric_limits<double>::quiet_NaN();
  double rmse_meas_Q = std::numeric_limits<double>::quiet_NaN();
  double rmse_null_Q = std::numeric_limits<double>::quiet_NaN();
  bool r_converged = true;
};

// One entry per outer iteration; RMSE fields are filled only when truth is
// supplied (and factors are available to split the error).
struct IterationTrace {
  std::vector<Image> f_R;
  std::vector<Image> f_Q;
  std::vector<IterationRecord> records;
};

struct ReconResult {
  Image image;
  IterationTrace trace;
};

// One application of R. `factors` is required for the pseudoinverse kind.
Image apply_r_operator(const Sinogram& g, const Image& warm, const SystemMatrix& H,
                       const SvdFactors* factors, const ReconConfig& config,
                       bool* converged = nullptr);

// The bare alternation skeleton: starting from f = 0, apply f <- q(r(f))
// n_outer times and return the final f. `on_iterate`, if set, observes
// (k, f_r, f_q) after each round. reconstruct() is this loop with the
// concrete R and Q plugged in; it is exposed so the alternation can be
// studied with other choices of the two maps.
using VectorMap = std::function<Vector(const Vector&)>;
Vector alternate(int n_outer, int size, const VectorMap& r, const VectorMap& q,
                 const std::function<void(int, const Vector&, const Vector&)>& on_iterate = {});

// The alternation: f_Q <- 0; repeat n_outer times { f_R <- R(f_Q), f_Q <-
// Q(f_R) }; returns the last f_Q. H must be the normalized operator and g
// scaled accordingly.
ReconResult reconstruct(const Sinogram& g, const SystemMatrix& H,
                        const SvdFactors* factors, const Network& net,
                        const ReconConfig& config, const Image* truth = nullptr);

struct SupervisedItem {
  Image truth;
  Sinogram data;
};

// First stage: the network learns to map R(0; g_i) to the true image.
std::vector<TrainPair> stage1_pairs(const std::vector<SupervisedItem>& items,
                                    const SystemMatrix& H, const SvdFactors* factors,
                                    const ReconConfig& config);
Network train_stage1(const std::vector<SupervisedItem>& items, const SystemMatrix& H,
                     const SvdFactors* factors, const ReconConfig& config,
                     const NetworkSpec& spec, const TrainConfig& train_config);

// Second stage: run the alternation with the frozen stage-1 network for
// n_collect iterations per image, pair every intermediate f_R^(k) (or
// f_Q^(k) when collect_post_q) with the truth, and fine-tune on the union
// with fresh ADAM moments.
std::vector<TrainPair> stage2_pairs(const Network& stage1, const std::vector<SupervisedItem>& items,
                                    const SystemMatrix& H, const SvdFactors* factors,
                                    const ReconConfig& config, int n_collect,
                                    bool collect_post_q = false);
Network train_stage2(const Network& stage1, const std::vector<SupervisedItem>& items,
                     const SystemMatrix& H, const SvdFactors* factors,
                     const ReconConfig& config, int n_collect,
                     const TrainConfig& train_config, bool collect_post_q = false);

}  // namespace lvct
