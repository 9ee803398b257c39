#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "lvct/metrics.hpp"
#include "lvct/phantom.hpp"
#include "lvct/recon.hpp"

using namespace lvct;

namespace {

struct Problem {
  SystemMatrix H;
  SvdFactors factors;
  Image truth;
  Sinogram g;
};

// Limited-view setup (80 rays, 144 pixels) with consistent data on the
// normalized operator.
Problem make_problem(std::uint64_t seed) {
  Problem p;
  p.H = normalized(build_system_matrix(make_limited_geometry(8.0, 10), 12));
  p.factors = svd(p.H);
  p.truth = rasterize(generate_phantom(seed), 12);
  p.g = apply(p.H, p.truth);
  return p;
}

NetworkSpec tiny_spec(int depth = 3, int width = 4) {
  NetworkSpec spec;
  spec.depth = depth;
  spec.width = width;
  return spec;
}

}  // namespace

TEST_CASE("the alternation skeleton applies q after r, n times, from zero") {
  auto r = [](const Vector& f) { return Vector(f.array() + 1.0); };
  auto q = [](const Vector& f) { return Vector(2.0 * f); };
  std::vector<double> seen_r, seen_q;
  Vector out = alternate(2, 3, r, q, [&](int k, const Vector& fr, const Vector& fq) {
    CHECK(k == static_cast<int>(seen_r.size()));
    seen_r.push_back(fr[0]);
    seen_q.push_back(fq[0]);
  });
  // 0 -> r -> 1 -> q -> 2 -> r -> 3 -> q -> 6
  CHECK(out[0] == 6.0);
  CHECK(seen_r == std::vector<double>{1.0, 3.0});
  CHECK(seen_q == std::vector<double>{2.0, 6.0});
  CHECK_THROWS_AS(alternate(0, 3, r, q), std::invalid_argument);
}

TEST_CASE("one outer iteration is exactly the network applied to R of zero") {
  Problem p = make_problem(42);
  Network net = init_network(tiny_spec(), 5);
  ReconConfig config;
  config.n_outer = 1;

  ReconResult res = reconstruct(p.g, p.H, &p.factors, net, config);
  REQUIRE(res.trace.f_R.size() == 1);
  REQUIRE(res.trace.f_Q.size() == 1);

  Image r0 = apply_r_operator(p.g, Image(12), p.H, &p.factors, config);
  Image expected = forward(net, r0);
  CHECK((res.image.pixels - expected.pixels).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((res.trace.f_R[0].pixels - r0.pixels).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("clamp-Q with one-gradient-step-R reproduces projected gradient bit for bit") {
  Problem p = make_problem(7);
  const double step = 0.75;

  auto r = [&](const Vector& f) { return gradient_step(p.H, p.g.values, f, step); };
  auto q = [&](const Vector& f) {
    Vector clamped = f;
    clamp_nonneg(clamped);
    return clamped;
  };

  std::vector<Vector> alternation_iterates;
  alternate(50, p.H.cols(), r, q, [&](int, const Vector&, const Vector& fq) {
    alternation_iterates.push_back(fq);
  });

  for (int k : {1, 7, 23, 50}) {
    SolverConfig solver;
    solver.step_size = step;
    solver.max_iters = k;
    solver.rel_change_tol = 1e-300;  // disable the early stop
    auto [image, report] = solve_ls_nn(p.H, p.g, Image(12), solver);
    CHECK(report.iterations_run == k);
    CHECK((image.pixels - alternation_iterates[k - 1]).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("an identity network leaves the pure-R fixed point") {
  Problem p = make_problem(12);
  Network net = init_network(tiny_spec(), 1);
  for (ConvLayer& layer : net.layers) {
    layer.weights.setZero();
    layer.biases.setZero();
  }
  ReconConfig config;
  config.n_outer = 5;

  ReconResult res = reconstruct(p.g, p.H, &p.factors, net, config);
  Image ls = solve_ls(p.factors, p.g);
  CHECK(lvct_test::rel_err(res.image.pixels, ls.pixels) < 1e-8);
  // after the first iteration nothing changes: R sees its own output back
  for (int k = 1; k < 5; ++k)
    CHECK(lvct_test::rel_err(res.trace.f_Q[k].pixels, res.trace.f_Q[0].pixels) < 1e-8);
}

TEST_CASE("the pseudoinverse R keeps the warm start's invisible component") {
  Problem p = make_problem(19);
  Rng rng(3);
  Image warm = lvct_test::random_image(12, rng, -1.0, 1.0);
  ReconConfig config;

  Image out = apply_r_operator(p.g, warm, p.H, &p.factors, config);
  SpaceProjectors proj(p.factors);
  Vector expected = pseudoinverse_apply(p.factors, p.g.values) + proj.null(warm.pixels);
  CHECK((out.pixels - expected).lpNorm<Eigen::Infinity>() == 0.0);
  // visible part solved, invisible part untouched
  CHECK((proj.null(out.pixels) - proj.null(warm.pixels)).norm() <=
        1e-10 * std::max(1.0, warm.pixels.norm()));
}

TEST_CASE("the PGD flavor of R is the non-negative solver warm-started") {
  Problem p = make_problem(23);
  Rng rng(4);
  Image warm = lvct_test::random_image(12, rng);
  ReconConfig config;
  config.r_operator = ROperatorKind::nonneg_pgd;
  config.solver.max_iters = 40;
  config.solver.rel_change_tol = 1e-300;

  bool converged = true;
  Image out = apply_r_operator(p.g, warm, p.H, nullptr, config, &converged);
  auto [expected, report] = solve_ls_nn(p.H, p.g, warm, config.solver);
  CHECK((out.pixels - expected.pixels).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(converged == report.converged);
  CHECK_FALSE(converged);  // 40 iterations at an impossible tolerance
}

TEST_CASE("reconstruct validates its inputs") {
  Problem p = make_problem(2);
  Network net = init_network(tiny_spec(), 9);
  ReconConfig config;
  config.n_outer = 0;
  CHECK_THROWS_AS(reconstruct(p.g, p.H, &p.factors, net, config), std::invalid_argument);

  config = {};
  Sinogram wrong(3, 3);
  CHECK_THROWS_AS(reconstruct(wrong, p.H, &p.factors, net, config), std::invalid_argument);
  CHECK_THROWS_AS(apply_r_operator(p.g, Image(12), p.H, nullptr, config),
                  std::invalid_argument);
}

TEST_CASE("iteration records split the error when truth is available") {
  Problem p = make_problem(31);
  Network net = init_network(tiny_spec(), 13);
  ReconConfig config;
  config.n_outer = 3;

  ReconResult res = reconstruct(p.g, p.H, &p.factors, net, config, &p.truth);
  REQUIRE(res.trace.records.size() == 3);
  SpaceProjectors proj(p.factors);
  for (int k = 0; k < 3; ++k) {
    const IterationRecord& rec = res.trace.records[k];
    EvalResult split = decomposed_rmse(res.trace.f_Q[k], p.truth, proj);
    CHECK(rec.rmse_meas_Q == doctest::Approx(split.rmse_meas).epsilon(1e-12));
    CHECK(rec.rmse_null_Q == doctest::Approx(split.rmse_null).epsilon(1e-12));
    CHECK(std::isfinite(rec.rmse_meas_R));
    CHECK(rec.r_converged);
  }

  ReconResult blind = reconstruct(p.g, p.H, &p.factors, net, config);
  CHECK(std::isnan(blind.trace.records[0].rmse_meas_Q));
  CHECK(std::isnan(blind.trace.records[0].rmse_null_Q));
}

TEST_CASE("stage-one pairs map R(0) to the truth") {
  Problem p = make_problem(3);
  std::vector<SupervisedItem> items;
  for (std::uint64_t s = 0; s < 4; ++s) {
    SupervisedItem item;
    item.truth = rasterize(generate_phantom(200 + s), 12);
    item.data = apply(p.H, item.truth);
    items.push_back(std::move(item));
  }
  ReconConfig config;
  std::vector<TrainPair> pairs = stage1_pairs(items, p.H, &p.factors, config);
  REQUIRE(pairs.size() == 4);

  SpaceProjectors proj(p.factors);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK((pairs[i].target.pixels - items[i].truth.pixels).norm() == 0.0);
    // consistent data: R(0) is the visible part of the truth
    Vector visible = proj.measurable(items[i].truth.pixels);
    CHECK(lvct_test::rel_err(pairs[i].input.pixels, visible) < 1e-8);
  }
  CHECK_THROWS_AS(stage1_pairs({}, p.H, &p.factors, config), std::invalid_argument);
}

TEST_CASE("stage-two pairs collect every intermediate of the frozen alternation") {
  Problem p = make_problem(6);
  std::vector<SupervisedItem> items;
  for (std::uint64_t s = 0; s < 3; ++s) {
    SupervisedItem item;
    item.truth = rasterize(generate_phantom(300 + s), 12);
    item.data = apply(p.H, item.truth);
    items.push_back(std::move(item));
  }
  Network stage1 = init_network(tiny_spec(), 21);
  ReconConfig config;

  std::vector<TrainPair> pairs = stage2_pairs(stage1, items, p.H, &p.factors, config, 4);
  REQUIRE(pairs.size() == 12);  // 3 items x 4 intermediates

  // the k=1 input of each item is R(0), i.e. the stage-one input
  std::vector<TrainPair> s1 = stage1_pairs(items, p.H, &p.factors, config);
  for (std::size_t i = 0; i < items.size(); ++i) {
    CHECK((pairs[i * 4].input.pixels - s1[i].input.pixels).lpNorm<Eigen::Infinity>() ==
          0.0);
    for (int k = 0; k < 4; ++k)
      CHECK((pairs[i * 4 + k].target.pixels - items[i].truth.pixels).norm() == 0.0);
  }

  // post-Q collection pairs the network outputs instead
  std::vector<TrainPair> post_q =
      stage2_pairs(stage1, items, p.H, &p.factors, config, 2, true);
  ReconConfig two = config;
  two.n_outer = 2;
  ReconResult run = reconstruct(items[0].data, p.H, &p.factors, stage1, two);
  CHECK((post_q[0].input.pixels - run.trace.f_Q[0].pixels).lpNorm<Eigen::Infinity>() ==
        0.0);
  CHECK((post_q[1].input.pixels - run.trace.f_Q[1].pixels).lpNorm<Eigen::Infinity>() ==
        0.0);

  CHECK_THROWS_AS(stage2_pairs(stage1, items, p.H, &p.factors, config, 0),
                  std::invalid_argument);
}

TEST_CASE("fine-tuning on alternation intermediates does not hurt validation error") {
  SystemMatrix H = normalized(build_system_matrix(make_limited_geometry(12.0, 16), 16));
  SvdFactors factors = svd(H);

  auto make_items = [&](std::uint64_t base, int count) {
    std::vector<SupervisedItem> items;
    for (int i = 0; i < count; ++i) {
      SupervisedItem item;
      item.truth = rasterize(generate_phantom(base + i), 16);
      item.data = apply(H, item.truth);
      items.push_back(std::move(item));
    }
    return items;
  };
  std::vector<SupervisedItem> train_items = make_items(100, 50);
  std::vector<SupervisedItem> val_items = make_items(900, 50);

  ReconConfig config;
  config.n_outer = 3;
  NetworkSpec spec = tiny_spec(3, 8);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 8;
  tc.iterations = 300;
  tc.seed = 2;

  Network stage1 = train_stage1(train_items, H, &factors, config, spec, tc);
  TrainConfig tc2 = tc;
  tc2.seed = 3;
  Network stage2 = train_stage2(stage1, train_items, H, &factors, config, 3, tc2);

  auto mean_val_rmse = [&](const Network& net) {
    double total = 0.0;
    for (const SupervisedItem& item : val_items) {
      ReconResult res = reconstruct(item.data, H, &factors, net, config);
      total += rmse(res.image, item.truth);
    }
    return total / val_items.size();
  };
  double r1 = mean_val_rmse(stage1);
  double r2 = mean_val_rmse(stage2);
  CHECK(r2 <= r1);
  // and the trained alternation must beat the untrained pseudoinverse alone
  Network identity = init_network(tiny_spec(3, 8), 1);
  for (ConvLayer& layer : identity.layers) {
    layer.weights.setZero();
    layer.biases.setZero();
  }
  CHECK(r2 < mean_val_rmse(identity));
}
