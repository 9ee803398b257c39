#include "lvct/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include "CLI11.hpp"

#include "lvct/experiment.hpp"
#include "lvct/io.hpp"
#include "lvct/rng.hpp"

namespace lvct {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::string output_override;
};

ExperimentConfig load(const CommonOpts& opts) {
  ExperimentConfig cfg = load_config(opts.config_path);
  if (!opts.output_override.empty()) cfg.output_dir = opts.output_override;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--output", opts.output_override,
                  "override the config's output directory");
}

// Shared preamble for commands that need the operator and its SVD.
struct Operator {
  SystemMatrix H_raw;
  SystemMatrix H;
  SvdFactors factors;
  double sigma = 0.0;
};

Operator make_operator(const ExperimentConfig& cfg, const fs::path& out) {
  Operator op;
  op.H_raw = build_system_matrix(cfg.geometry(), cfg.side);
  op.sigma = op.H_raw.norm_estimate;
  op.H = normalized(op.H_raw);
  fs::path cache =
      cfg.svd_cache_dir.empty() ? out / "svd_cache" : fs::path(cfg.svd_cache_dir);
  std::string key = factor_cache_key(cfg.geometry(), cfg.side, cfg.svd_truncation_tol);
  if (auto cached = try_load_factors(cache, key)) {
    op.factors = std::move(*cached);
  } else {
    op.factors = svd(op.H, cfg.svd_truncation_tol);
    save_factors(cache, key, op.factors);
  }
  return op;
}

ReconConfig recon_config(const ExperimentConfig& cfg) {
  ReconConfig rc;
  rc.n_outer = cfg.n_outer;
  rc.r_operator = cfg.r_operator();
  rc.solver = cfg.solver;
  return rc;
}

std::vector<SupervisedItem> supervised(const Dataset& ds, double sigma) {
  std::vector<SupervisedItem> items;
  items.reserve(ds.items.size());
  for (const DataItem& d : ds.items) {
    SupervisedItem s;
    s.truth = d.truth;
    s.data = measured(d);
    s.data.values /= sigma;
    items.push_back(std::move(s));
  }
  return items;
}

int cmd_gen_data(const CommonOpts& opts, const std::string& split_name) {
  ExperimentConfig cfg = load(opts);
  fs::path out = resolve_output_dir(cfg);
  fs::create_directories(out);

  SystemMatrix H_raw = build_system_matrix(cfg.geometry(), cfg.side);
  std::vector<Split> splits;
  if (split_name == "all")
    splits = {Split::train, Split::val, Split::test};
  else if (split_name == "train")
    splits = {Split::train};
  else if (split_name == "val")
    splits = {Split::val};
  else if (split_name == "test")
    splits = {Split::test};
  else
    throw std::invalid_argument("gen-data: unknown split '" + split_name + "'");

  for (Split split : splits) {
    Dataset ds = generate_dataset(cfg, split, H_raw);
    fs::path dir = out / to_string(split);
    fs::create_directories(dir);
    std::vector<EllipsePhantom> phantoms;
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
      const DataItem& item = ds.items[i];
      phantoms.push_back(item.phantom);
      char tag[32];
      std::snprintf(tag, sizeof(tag), "%05zu", i);
      write_image(dir / (std::string(tag) + "_truth"), item.truth);
      write_sinogram(dir / (std::string(tag) + "_clean"), item.clean, cfg.geometry());
      if (item.has_noise)
        write_sinogram(dir / (std::string(tag) + "_noisy"), item.noisy, cfg.geometry());
    }
    write_phantoms_jsonl(out / ("phantoms_" + std::string(to_string(split)) + ".jsonl"),
                         phantoms);
    std::cout << to_string(split) << ": " << ds.items.size() << " items -> " << dir
              << "\n";
  }
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& stage_sel) {
  ExperimentConfig cfg = load(opts);
  fs::path out = resolve_output_dir(cfg);
  fs::create_directories(out);
  Operator op = make_operator(cfg, out);

  Dataset train_ds = generate_dataset(cfg, Split::train, op.H_raw);
  std::vector<SupervisedItem> items = supervised(train_ds, op.sigma);
  ReconConfig rc = recon_config(cfg);

  TrainConfig tc = cfg.train;
  tc.iterations = cfg.train_iterations;

  Network stage1;
  if (stage_sel == "1" || stage_sel == "both") {
    tc.seed = derive_seed(cfg.seed, 11);
    stage1 = train_stage1(items, op.H, &op.factors, rc, cfg.network, tc);
    save_network(out / "weights_stage1", stage1, "stage1");
    std::cout << "stage 1 trained (" << items.size() << " pairs) -> "
              << (out / "weights_stage1") << "\n";
  } else {
    stage1 = load_network(out / "weights_stage1");
  }
  if (stage_sel == "2" || stage_sel == "both") {
    tc.seed = derive_seed(cfg.seed, 12);
    Network stage2 = train_stage2(stage1, items, op.H, &op.factors, rc, cfg.n_collect,
                                  tc, cfg.collect_post_q);
    save_network(out / "weights_stage2", stage2, "stage2");
    std::cout << "stage 2 trained (" << items.size() * cfg.n_collect << " pairs) -> "
              << (out / "weights_stage2") << "\n";
  }
  return 0;
}

int cmd_reconstruct(const CommonOpts& opts, const std::string& weights,
                    const std::string& sinogram, const std::string& output,
                    int n_override) {
  ExperimentConfig cfg = load(opts);
  fs::path out = resolve_output_dir(cfg);
  Operator op = make_operator(cfg, out);
  Network net = load_network(weights);

  Sinogram g = read_sinogram(sinogram);
  g.values /= op.sigma;
  ReconConfig rc = recon_config(cfg);
  if (n_override > 0) rc.n_outer = n_override;

  ReconResult result = reconstruct(g, op.H, &op.factors, net, rc);
  write_image(output, result.image);
  write_pgm(output + ".pgm", result.image);
  std::cout << "reconstructed (n=" << rc.n_outer << ") -> " << output << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& weights) {
  ExperimentConfig cfg = load(opts);
  fs::path out = resolve_output_dir(cfg);
  fs::create_directories(out);
  Operator op = make_operator(cfg, out);
  Network net = load_network(weights.empty() ? (out / "weights_stage2").string()
                                             : weights);

  Dataset test_ds = generate_dataset(cfg, Split::test, op.H_raw);
  std::vector<SupervisedItem> items = supervised(test_ds, op.sigma);
  ReconConfig rc = recon_config(cfg);
  SpaceProjectors proj(op.factors);

  std::vector<EvalResult> singles, proposed;
  for (const SupervisedItem& item : items) {
    ReconResult run = reconstruct(item.data, op.H, &op.factors, net, rc, &item.truth);
    singles.push_back(decomposed_rmse(run.trace.f_Q.front(), item.truth, proj));
    proposed.push_back(decomposed_rmse(run.image, item.truth, proj));
  }
  auto report = [](const char* name, const std::vector<EvalResult>& evals) {
    double r = 0.0, s = 0.0;
    for (const EvalResult& e : evals) {
      r += e.rmse;
      s += e.ssim;
    }
    std::cout << name << ": mean_rmse=" << format_double(r / evals.size())
              << " mean_ssim=" << format_double(s / evals.size()) << "\n";
  };
  report("single_pass", singles);
  report("proposed", proposed);
  return 0;
}

int cmd_sweep_lambda(const CommonOpts& opts) {
  ExperimentConfig cfg = load(opts);
  fs::path out = resolve_output_dir(cfg);
  fs::create_directories(out);
  Operator op = make_operator(cfg, out);

  Dataset val_ds = generate_dataset(cfg, Split::val, op.H_raw);
  std::vector<SupervisedItem> items = supervised(val_ds, op.sigma);
  int use = std::min<int>(cfg.sweep_images, static_cast<int>(items.size()));
  if (use == 0) throw std::runtime_error("sweep-lambda: no validation images");

  std::vector<double> grid =
      cfg.lambda_grid.empty() ? default_lambda_grid() : cfg.lambda_grid;
  std::sort(grid.begin(), grid.end());

  double best = std::numeric_limits<double>::infinity(), best_lambda = grid.front();
  std::ofstream csv(out / "lambda_sweep.csv");
  csv << "lambda,mean_rmse\n";
  for (double lambda : grid) {
    SolverConfig sc = cfg.solver;
    sc.tv_lambda = lambda;
    double total = 0.0;
    for (int i = 0; i < use; ++i) {
      auto [img, rep] = solve_pls_tv(op.H, items[i].data, sc);
      total += rmse(img, items[i].truth);
    }
    double mean = total / use;
    csv << format_double(lambda) << "," << format_double(mean) << "\n";
    std::cout << "lambda=" << format_double(lambda)
              << " mean_rmse=" << format_double(mean) << "\n";
    if (mean < best) {
      best = mean;
      best_lambda = lambda;
    }
  }
  std::cout << "best lambda: " << format_double(best_lambda) << "\n";
  return 0;
}

int cmd_run_all(const CommonOpts& opts) {
  ExperimentConfig cfg = load(opts);
  ExperimentSummary summary = run_experiment(cfg);
  for (const char* name : {"baseline", "pls_tv", "single_pass", "proposed"}) {
    auto it = summary.methods.find(name);
    if (it == summary.methods.end()) continue;
    if (it->second.failed) {
      std::cout << name << ": FAILED\n";
    } else {
      std::cout << name << ": mean_rmse=" << format_double(it->second.mean_rmse)
                << " mean_ssim=" << format_double(it->second.mean_ssim) << "\n";
    }
  }
  std::cout << "report: " << (summary.output_dir / "report.csv") << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"limited-view CT reconstruction with a learned quasi-projection"};
  app.require_subcommand(1);

  CommonOpts gen_opts;
  std::string gen_split = "all";
  CLI::App* gen = app.add_subcommand("gen-data", "generate phantom datasets");
  add_common(gen, gen_opts);
  gen->add_option("--split", gen_split, "train|val|test|all");

  CommonOpts train_opts;
  std::string stage = "both";
  CLI::App* tr = app.add_subcommand("train", "two-stage network training");
  add_common(tr, train_opts);
  tr->add_option("--stage", stage, "1|2|both")
      ->check(CLI::IsMember({"1", "2", "both"}));

  CommonOpts rec_opts;
  std::string rec_weights, rec_sinogram, rec_output = "reconstruction";
  int rec_n = 0;
  CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct one sinogram");
  add_common(rec, rec_opts);
  rec->add_option("--weights", rec_weights, "weight file base path")->required();
  rec->add_option("--sinogram", rec_sinogram, "sinogram file base path")->required();
  rec->add_option("--image-output", rec_output, "output image base path");
  rec->add_option("--n", rec_n, "override the outer iteration count");

  CommonOpts eval_opts;
  std::string eval_weights;
  CLI::App* ev = app.add_subcommand("evaluate", "test-set evaluation of trained weights");
  add_common(ev, eval_opts);
  ev->add_option("--weights", eval_weights, "weight file base path (default: stage 2)");

  CommonOpts sweep_opts;
  CLI::App* sw = app.add_subcommand("sweep-lambda", "TV strength grid search");
  add_common(sw, sweep_opts);

  CommonOpts all_opts;
  CLI::App* all = app.add_subcommand("run-all", "full experiment pipeline");
  add_common(all, all_opts);

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(gen_opts, gen_split);
    if (tr->parsed()) return cmd_train(train_opts, stage);
    if (rec->parsed())
      return cmd_reconstruct(rec_opts, rec_weights, rec_sinogram, rec_output, rec_n);
    if (ev->parsed()) return cmd_evaluate(eval_opts, eval_weights);
    if (sw->parsed()) return cmd_sweep_lambda(sweep_opts);
    if (all->parsed()) return cmd_run_all(all_opts);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lvct
