#include "lvct/recon.hpp"

#include <cmath>
#include <stdexcept>

#include "lvct/metrics.hpp"

namespace lvct {

Image apply_r_operator(const Sinogram& g, const Image& warm, const SystemMatrix& H,
                       const SvdFactors* factors, const ReconConfig& config,
                       bool* converged) {
  if (converged) *converged = true;
  switch (config.r_operator) {
    case ROperatorKind::pseudoinverse: {
      if (!factors)
        throw std::invalid_argument("apply_r_operator: pseudoinverse needs SVD factors");
      Image out(warm.side);
      SpaceProjectors proj(*factors);
      out.pixels = pseudoinverse_apply(*factors, g.values) + proj.null(warm.pixels);
      return out;
    }
    case ROperatorKind::nonneg_pgd: {
      auto [image, report] = solve_ls_nn(H, g, warm, config.solver);
      if (converged) *converged = report.converged;
      return image;
    }
  }
  throw std::logic_error("apply_r_operator: unknown operator kind");
}

Vector alternate(int n_outer, int size, const VectorMap& r, const VectorMap& q,
                 const std::function<void(int, const Vector&, const Vector&)>& on_iterate) {
  if (n_outer < 1) throw std::invalid_argument("alternate: n_outer must be >= 1");
  Vector f = Vector::Zero(size);
  for (int k = 0; k < n_outer; ++k) {
    Vector f_r = r(f);
    f = q(f_r);
    if (on_iterate) on_iterate(k, f_r, f);
  }
  return f;
}

ReconResult reconstruct(const Sinogram& g, const SystemMatrix& H,
                        const SvdFactors* factors, const Network& net,
                        const ReconConfig& config, const Image* truth) {
  config.validate();
  if (g.num_views != H.geometry.num_views || g.num_detectors != H.geometry.num_detectors)
    throw std::invalid_argument("reconstruct: sinogram does not match the operator");

  ReconResult result;
  result.trace.f_R.reserve(config.n_outer);
  result.trace.f_Q.reserve(config.n_outer);

  bool want_metrics = truth != nullptr && factors != nullptr;
  double n = static_cast<double>(H.side) * H.side;

  bool r_converged = true;
  auto r = [&](const Vector& f) {
    Image warm(H.side);
    warm.pixels = f;
    return apply_r_operator(g, warm, H, factors, config, &r_converged).pixels;
  };
  auto q = [&](const Vector& f) {
    Image in(H.side);
    in.pixels = f;
    return forward(net, in).pixels;
  };
  auto observe = [&](int, const Vector& f_r, const Vector& f_q) {
    IterationRecord record;
    record.r_converged = r_converged;
    if (want_metrics) {
      SpaceProjectors proj(*factors);
      Vector diff_r = proj.measurable(f_r - truth->pixels);
      record.rmse_meas_R = std::sqrt(diff_r.squaredNorm() / n);
      Vector diff_q = f_q - truth->pixels;
      Vector meas_q = proj.measurable(diff_q);
      record.rmse_meas_Q = std::sqrt(meas_q.squaredNorm() / n);
      record.rmse_null_Q = std::sqrt((diff_q - meas_q).squaredNorm() / n);
    }
    Image img_r(H.side), img_q(H.side);
    img_r.pixels = f_r;
    img_q.pixels = f_q;
    result.trace.f_R.push_back(std::move(img_r));
    result.trace.f_Q.push_back(std::move(img_q));
    result.trace.records.push_back(record);
  };

  Vector final_q = alternate(config.n_outer, H.side * H.side, r, q, observe);
  result.image = Image(H.side);
  result.image.pixels = std::move(final_q);
  return result;
}

std::vector<TrainPair> stage1_pairs(const std::vector<SupervisedItem>& items,
                                    const SystemMatrix& H, const SvdFactors* factors,
                                    const ReconConfig& config) {
  if (items.empty()) throw std::invalid_argument("stage1_pairs: empty dataset");
  std::vector<TrainPair> pairs;
  pairs.reserve(items.size());
  for (const SupervisedItem& item : items) {
    Image zero(H.side);
    TrainPair p;
    p.input = apply_r_operator(item.data, zero, H, factors, config);
    p.target = item.truth;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

Network train_stage1(const std::vector<SupervisedItem>& items, const SystemMatrix& H,
                     const SvdFactors* factors, const ReconConfig& config,
                     const NetworkSpec& spec, const TrainConfig& train_config) {
  Network net = init_network(spec, train_config.seed);
  return train(std::move(net), stage1_pairs(items, H, factors, config), train_config);
}

std::vector<TrainPair> stage2_pairs(const Network& stage1,
                                    const std::vector<SupervisedItem>& items,
                                    const SystemMatrix& H, const SvdFactors* factors,
                                    const ReconConfig& config, int n_collect,
                                    bool collect_post_q) {
  if (items.empty()) throw std::invalid_argument("stage2_pairs: empty dataset");
  if (n_collect < 1) throw std::invalid_argument("stage2_pairs: n_collect must be >= 1");

  ReconConfig collect = config;
  collect.n_outer = n_collect;
  std::vector<TrainPair> pairs;
  pairs.reserve(items.size() * static_cast<std::size_t>(n_collect));
  for (const SupervisedItem& item : items) {
    ReconResult run = reconstruct(item.data, H, factors, stage1, collect);
    const std::vector<Image>& inputs = collect_post_q ? run.trace.f_Q : run.trace.f_R;
    for (const Image& input : inputs) {
      TrainPair p;
      p.input = input;
      p.target = item.truth;
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

Network train_stage2(const Network& stage1, const std::vector<SupervisedItem>& items,
                     const SystemMatrix& H, const SvdFactors* factors,
                     const ReconConfig& config, int n_collect,
                     const TrainConfig& train_config, bool collect_post_q) {
  std::vector<TrainPair> pairs =
      stage2_pairs(stage1, items, H, factors, config, n_collect, collect_post_q);
  Network net = stage1;
  net.reset_moments();  // fine-tune restarts the optimizer, not the weights
  return train(std::move(net), pairs, train_config);
}

}  // namespace lvct
