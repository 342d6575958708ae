// Copyright 2026 The erbm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// Command-line driver: train, compare, export-figures, export-filters.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "erbm/checkpoint.hpp"
#include "erbm/error.hpp"
#include "erbm/experiment.hpp"
#include "erbm/image_export.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct TrainFlags {
  std::string config_file;
  std::string dataset = "mnist";
  std::string arch = "Ma";
  std::string reg = "none";
  double p = 0.5;
  double l2 = 0.005;
  int epochs = 50;
  int batch_size = 256;
  int cd_steps = 1;
  int reps = 10;
  std::uint64_t seed = 0;
  std::string out = "runs";
  double binarize = 0.5;
  long train_limit = 0;
  long test_limit = 0;
  long hidden = 0;
  double lr = 0.0;
  bool resume = false;
  bool no_images = false;
  bool stochastic = false;
  bool quiet = false;
};

// Values from the config file are applied first; flags given explicitly on
// the command line win.
template <typename T>
void from_json(const nlohmann::json& j, const char* key, const CLI::App& app,
               const char* flag, T& target) {
  if (j.contains(key) && app.count(flag) == 0) target = j.at(key).get<T>();
}

erbm::ExperimentConfig build_config(const TrainFlags& f, const CLI::App& app) {
  TrainFlags merged = f;
  std::optional<double> binarize;
  if (app.count("--binarize") > 0) binarize = f.binarize;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw erbm::Error(erbm::ErrorKind::kIo, "cannot open " + f.config_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw erbm::Error(erbm::ErrorKind::kParse, f.config_file + ": " + e.what());
    }
    try {
      from_json(j, "dataset", app, "--dataset", merged.dataset);
      from_json(j, "arch", app, "--arch", merged.arch);
      from_json(j, "reg", app, "--reg", merged.reg);
      from_json(j, "p", app, "--p", merged.p);
      from_json(j, "l2", app, "--l2", merged.l2);
      from_json(j, "epochs", app, "--epochs", merged.epochs);
      from_json(j, "batch_size", app, "--batch-size", merged.batch_size);
      from_json(j, "cd_steps", app, "--cd-steps", merged.cd_steps);
      from_json(j, "reps", app, "--reps", merged.reps);
      from_json(j, "seed", app, "--seed", merged.seed);
      from_json(j, "out", app, "--out", merged.out);
      from_json(j, "train_limit", app, "--train-limit", merged.train_limit);
      from_json(j, "test_limit", app, "--test-limit", merged.test_limit);
      from_json(j, "hidden", app, "--hidden", merged.hidden);
      from_json(j, "lr", app, "--lr", merged.lr);
      from_json(j, "resume", app, "--resume", merged.resume);
      from_json(j, "no_images", app, "--no-images", merged.no_images);
      from_json(j, "stochastic", app, "--stochastic", merged.stochastic);
      if (j.contains("binarize") && app.count("--binarize") == 0 &&
          !j.at("binarize").is_null()) {
        binarize = j.at("binarize").get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw erbm::Error(erbm::ErrorKind::kInvalidArgument,
                        f.config_file + ": " + e.what());
    }
  }

  erbm::ExperimentConfig config;
  config.dataset = merged.dataset;
  config.architecture = erbm::parse_architecture(merged.arch);
  config.regularizer = erbm::RegularizerKind::parse(merged.reg, merged.p, merged.l2);
  config.repetitions = merged.reps;
  config.epochs = merged.epochs;
  config.batch_size = merged.batch_size;
  config.cd_steps = merged.cd_steps;
  config.seed_base = merged.seed;
  config.output_dir = merged.out;
  config.normalize.binarize_threshold = binarize;
  config.reconstruction = merged.stochastic ? erbm::ReconstructionMode::kStochastic
                                            : erbm::ReconstructionMode::kMeanField;
  config.train_limit = merged.train_limit;
  config.test_limit = merged.test_limit;
  if (merged.hidden > 0) config.hidden_units = merged.hidden;
  if (merged.lr > 0.0) config.learning_rate = merged.lr;
  config.resume = merged.resume;
  config.export_images = !merged.no_images;
  return config;
}

int run_train(const TrainFlags& flags, const CLI::App& app) {
  const erbm::ExperimentConfig config = build_config(flags, app);
  const bool quiet = flags.quiet;
  const auto records = erbm::run_experiment(config, [quiet](const erbm::EpochProgress& e) {
    if (quiet) return;
    std::fprintf(stderr, "rep %d epoch %d/%d  mse %.4f  dropped %llu  %.1fs\n",
                 e.repetition, e.epoch, e.epochs, e.train_mse,
                 static_cast<unsigned long long>(e.dropped), e.seconds);
  });
  for (const auto& r : records) {
    std::printf("rep %d seed %llu  test_mse %.4f  test_ssim %.4f\n", r.repetition,
                static_cast<unsigned long long>(r.seed), r.test_mse, r.test_ssim);
  }
  std::printf("%s\n", erbm::regularizer_dir(config).string().c_str());
  return 0;
}

int run_compare(const std::string& metric, double alpha, const std::string& dir_a,
                const std::string& dir_b) {
  const auto result = erbm::compare_runs(erbm::read_records(dir_a),
                                         erbm::read_records(dir_b),
                                         erbm::parse_metric(metric), alpha);
  std::printf("%s\n", result.table_row.c_str());
  return 0;
}

int run_export_figures(const std::string& dir) {
  for (const auto& path : erbm::export_figures(dir)) {
    std::printf("%s\n", path.string().c_str());
  }
  return 0;
}

int run_export_filters(const std::string& ckpt_path, std::string out, long grid,
                       long patch) {
  const erbm::Checkpoint ckpt = erbm::load_checkpoint(ckpt_path);
  if (out.empty()) {
    out = (std::filesystem::path(ckpt_path).parent_path() / "filters.pgm").string();
  }
  erbm::export_weight_filters(ckpt.params, grid, grid, out, patch, patch);
  std::printf("%s\n", out.c_str());
  return 0;
}

int exit_code(erbm::ErrorKind kind) {
  switch (kind) {
    case erbm::ErrorKind::kIo:
    case erbm::ErrorKind::kParse:
      return kExitData;
    case erbm::ErrorKind::kDivergence:
      return kExitDivergence;
    default:
      return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restricted Boltzmann Machine training with dropout-style regularizers"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "train repetitions of one configuration");
  train_cmd->add_option("--config", train.config_file, "JSON file with any of the flags below");
  train_cmd->add_option("--dataset", train.dataset, "name under $ERBM_DATA_DIR or a directory");
  train_cmd->add_option("--arch", train.arch, "Ma | Mb | Mc | Md");
  train_cmd->add_option("--reg", train.reg, "none | l2 | dropout | dropconnect | edropout");
  train_cmd->add_option("--p", train.p, "drop probability for dropout / dropconnect")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--l2", train.l2, "weight decay coefficient for l2");
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--cd-steps", train.cd_steps);
  train_cmd->add_option("--reps", train.reps);
  train_cmd->add_option("--seed", train.seed, "repetition r uses seed + r");
  train_cmd->add_option("--out", train.out);
  train_cmd->add_option("--binarize", train.binarize, "hard-threshold pixels at this value");
  train_cmd->add_option("--train-limit", train.train_limit, "use the first N training images");
  train_cmd->add_option("--test-limit", train.test_limit, "use the first N test images");
  train_cmd->add_option("--hidden", train.hidden, "override the architecture's hidden units");
  train_cmd->add_option("--lr", train.lr, "override the architecture's learning rate");
  train_cmd->add_flag("--resume", train.resume, "keep repetitions already on disk");
  train_cmd->add_flag("--no-images", train.no_images);
  train_cmd->add_flag("--stochastic", train.stochastic, "sample h and v when reconstructing");
  train_cmd->add_flag("--quiet", train.quiet);

  std::string metric = "mse";
  double alpha = 0.05;
  std::string dir_a, dir_b;
  auto* compare_cmd = app.add_subcommand("compare", "paired Wilcoxon test between two run dirs");
  compare_cmd->add_option("--metric", metric, "mse | ssim");
  compare_cmd->add_option("--alpha", alpha);
  compare_cmd->add_option("DIR_A", dir_a)->required();
  compare_cmd->add_option("DIR_B", dir_b)->required();

  std::string figures_dir;
  auto* figures_cmd = app.add_subcommand("export-figures", "write figure CSVs");
  figures_cmd->add_option("DIR", figures_dir)->required();

  std::string ckpt_path, filters_out;
  long grid = 10;
  long patch = 28;
  auto* filters_cmd = app.add_subcommand("export-filters", "tile learned filters into a PGM");
  filters_cmd->add_option("CKPT", ckpt_path)->required();
  filters_cmd->add_option("--out", filters_out);
  filters_cmd->add_option("--grid", grid);
  filters_cmd->add_option("--patch", patch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train, *train_cmd);
    if (*compare_cmd) return run_compare(metric, alpha, dir_a, dir_b);
    if (*figures_cmd) return run_export_figures(figures_dir);
    if (*filters_cmd) return run_export_filters(ckpt_path, filters_out, grid, patch);
  } catch (const erbm::Error& e) {
    std::cerr << "error (" << erbm::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
