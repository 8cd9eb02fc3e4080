// Copyright 2026 The CLNR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// clnr: train, evaluate, sweep and plot contrastive node embeddings.
//
//   clnr train    --config run.cfg [--set key=value ...]
//   clnr eval     --config run.cfg | --dataset DIR (--checkpoint F | --embeddings F)
//   clnr sweep    --config run.cfg --mode dims|perturb --grid 32,512 [--seeds 0,1,2]
//   clnr plot     --results results.csv --out plot.svg
//   clnr gen-sbm  --out DIR --blocks 100,100,100
//   clnr validate DIR
//
// Exit codes: 0 ok, 2 usage or config error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "clnr/cli.hpp"

namespace {

namespace cli = clnr::cli;

clnr::cli::RunConfig config_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  cli::RunConfig c = path.empty() ? cli::RunConfig{} : cli::load_run_config(path);
  for (const auto& o : overrides) cli::apply_override(c, o);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive node representation learning"};
  app.require_subcommand(1);

  // train
  std::string config_path;
  std::vector<std::string> overrides;
  auto* train = app.add_subcommand("train", "Pretrain an encoder and write its artifacts");
  train->add_option("--config", config_path, "Run config (key = value)")->required();
  train->add_option("--set", overrides, "Override a config key (key=value)");

  // eval
  cli::EvalArgs eval_args;
  std::string eval_config;
  std::vector<std::string> eval_overrides;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or stored embeddings");
  eval->add_option("--config", eval_config, "Run config; supplies dataset, probe and view settings");
  eval->add_option("--set", eval_overrides, "Override a config key (key=value)");
  eval->add_option("--dataset", eval_args.dataset, "Bundle directory");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file");
  eval->add_option("--embeddings", eval_args.embeddings, "Embedding matrix (features.bin layout)");
  eval->add_option("--results", eval_args.results, "results.csv to append to");
  eval->add_flag("--no-probe", eval_args.no_probe, "Skip the linear probe");
  eval->add_flag("--no-wd2", eval_args.no_wd2, "Train the probe without weight decay");
  eval->add_flag("--pre-projection", eval_args.pre_projection,
                 "Probe on embeddings before the sphere projection");

  // sweep
  std::string sweep_config, sweep_mode;
  std::vector<std::string> sweep_overrides;
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;
  std::string sweep_results;
  auto* sweep = app.add_subcommand("sweep", "Retrain across an embedding-dimension or edge-noise grid");
  sweep->add_option("--config", sweep_config, "Base run config")->required();
  sweep->add_option("--set", sweep_overrides, "Override a config key (key=value)");
  sweep->add_option("--mode", sweep_mode, "dims or perturb")->required();
  sweep->add_option("--grid", grid, "Grid values")->required()->delimiter(',');
  sweep->add_option("--seeds", seeds, "Seeds (default: the config seed)")->delimiter(',');
  sweep->add_option("--results", sweep_results, "results.csv (default: <out_dir>/results.csv)");

  // plot
  cli::PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Alignment / uniformity scatter as SVG");
  plot->add_option("--results", plot_args.results, "results.csv")->required();
  plot->add_option("--out", plot_args.out, "Output SVG")->required();
  plot->add_option("--x", plot_args.x, "x column")->capture_default_str();
  plot->add_option("--y", plot_args.y, "y column")->capture_default_str();
  plot->add_option("--color", plot_args.color, "Color column")->capture_default_str();

  // gen-sbm
  clnr::SbmConfig sbm;
  sbm.block_sizes = {100, 100, 100};
  std::string sbm_out;
  bool sbm_binary = false;
  auto* gen = app.add_subcommand("gen-sbm", "Write a stochastic block model bundle");
  gen->add_option("--out", sbm_out, "Output bundle directory")->required();
  gen->add_option("--blocks", sbm.block_sizes, "Block sizes")->delimiter(',')->capture_default_str();
  gen->add_option("--p-in", sbm.p_in, "Within-block edge probability")->capture_default_str();
  gen->add_option("--p-out", sbm.p_out, "Across-block edge probability")->capture_default_str();
  gen->add_option("--shift", sbm.class_mean_shift, "Class mean offset")->capture_default_str();
  gen->add_option("--noise", sbm.noise_std, "Feature noise std")->capture_default_str();
  gen->add_option("--feature-dim", sbm.feature_dim, "Feature width (0: one per block)")->capture_default_str();
  gen->add_option("--seed", sbm.seed, "Seed")->capture_default_str();
  gen->add_flag("--binary", sbm_binary, "Write features.bin instead of features.tsv");

  // validate
  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "Load and check a bundle");
  validate->add_option("dir", validate_dir, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*train) return cli::cmd_train(config_with_overrides(config_path, overrides), std::cerr);
    if (*eval) {
      if (!eval_config.empty() || !eval_overrides.empty()) {
        const auto c = config_with_overrides(eval_config, eval_overrides);
        if (eval_args.dataset.empty()) eval_args.dataset = c.dataset;
        if (eval_args.checkpoint.empty() && eval_args.embeddings.empty())
          eval_args.checkpoint = (std::filesystem::path(c.out_dir) / cli::kCheckpointFile).string();
        if (eval_args.results.empty())
          eval_args.results = (std::filesystem::path(c.out_dir) / cli::kResultsFile).string();
        eval_args.seed = c.seed;
        eval_args.probe = cli::to_probe_config(c);
        eval_args.augment.feature_mask = c.pf;
        eval_args.augment.edge_drop = c.pe;
      }
      if (eval_args.dataset.empty()) throw clnr::ConfigError("eval: no dataset (use --dataset or --config)");
      return cli::cmd_eval(eval_args, std::cout);
    }
    if (*sweep) {
      cli::SweepArgs s;
      s.base = config_with_overrides(sweep_config, sweep_overrides);
      s.mode = cli::parse_sweep_mode(sweep_mode);
      s.grid = grid;
      s.seeds = seeds;
      s.results = sweep_results;
      return cli::cmd_sweep(s, std::cout, std::cerr);
    }
    if (*plot) return cli::cmd_plot(plot_args, std::cerr);
    if (*gen) return cli::cmd_gen_sbm(sbm, sbm_out, sbm_binary, std::cerr);
    if (*validate) return cli::cmd_validate(validate_dir, std::cout);
  } catch (const clnr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  }
  return cli::kExitUsage;
}
