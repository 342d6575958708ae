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
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "erbm/data.hpp"
#include "erbm/metrics.hpp"
#include "erbm/rbm.hpp"
#include "erbm/regularizers.hpp"

namespace erbm {

enum class Architecture { kMa, kMb, kMc, kMd };

struct ArchitectureSpec {
  Index hidden_units;
  double learning_rate;
};

/// Ma = (512, 0.1), Mb = (1024, 0.1), Mc = (1024, 0.03), Md = (1024, 0.01).
ArchitectureSpec architecture_spec(Architecture arch);
Architecture parse_architecture(std::string_view name);
std::string_view architecture_name(Architecture arch);

enum class ReconstructionMode {
  kMeanField,   // v -> P(h|v) -> P(v|h)
  kStochastic,  // v -> h ~ P(h|v) -> v' ~ P(v|h), both binary
};

struct ExperimentConfig {
  std::string dataset = "mnist";  // name under $ERBM_DATA_DIR or a directory
  Architecture architecture = Architecture::kMa;
  RegularizerKind regularizer;
  int repetitions = 10;
  int epochs = 50;
  int batch_size = 256;
  int cd_steps = 1;
  std::uint64_t seed_base = 0;
  std::filesystem::path output_dir = "runs";
  NormalizeOptions normalize;
  ReconstructionMode reconstruction = ReconstructionMode::kMeanField;
  /// Use only the first N train / test images (0 = all).
  Index train_limit = 0;
  Index test_limit = 0;
  /// Overrides of the architecture values, for small experiments.
  std::optional<Index> hidden_units;
  std::optional<double> learning_rate;
  /// Reuse repetitions whose record.json already matches this config.
  bool resume = false;
  bool export_images = true;

  Index effective_hidden_units() const;
  double effective_learning_rate() const;
  void validate() const;
};

/// One trained repetition.
struct RunRecord {
  std::string dataset;
  std::string architecture;
  std::string regularizer;
  double drop_probability = 0.0;
  double l2_coeff = 0.0;
  Index hidden_units = 0;
  double learning_rate = 0.0;
  int epochs = 0;
  int batch_size = 0;
  int cd_steps = 1;
  Index train_size = 0;
  Index test_size = 0;
  std::string reconstruction;
  std::optional<double> binarize_threshold;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::vector<double> train_mse;            // one per epoch
  std::vector<std::uint64_t> dropped;       // one per epoch
  double test_mse = 0.0;
  double test_ssim = 0.0;
  /// Not part of the JSON record (kept in timing.json) so records stay
  /// byte-reproducible.
  double wall_clock_seconds = 0.0;
};

/// Single-line JSON of the deterministic fields.
std::string to_json_line(const RunRecord& record);
RunRecord record_from_json(std::string_view json);

struct EpochProgress {
  int repetition;
  int epoch;  // 1-based
  int epochs;
  double train_mse;
  std::uint64_t dropped;
  double seconds;
};
using ProgressCallback = std::function<void(const EpochProgress&)>;

struct TrainedModel {
  RbmParams<float> params;
  std::vector<double> train_mse;
  std::vector<std::uint64_t> dropped;
};

/// Trains one RBM from scratch. Initialization, shuffling, masks and Gibbs
/// sampling each draw from their own named substream of config.seed.
/// Throws kDivergence when the epoch train MSE turns non-finite or exceeds
/// kDivergenceFactor times its first-epoch value.
inline constexpr double kDivergenceFactor = 10.0;

TrainedModel train_rbm(const RowMatrix<float>& train, Index hidden_units,
                       const TrainConfig& config, const RegularizerKind& kind,
                       const ProgressCallback& progress = {},
                       int repetition = 0);

/// Reconstructions of \p data, after inference-time weight rescaling.
RowMatrix<float> reconstruct(const RbmParams<float>& params,
                             const RegularizerKind& kind,
                             const RowMatrix<float>& data,
                             ReconstructionMode mode, std::uint64_t seed);

std::filesystem::path repetition_dir(const ExperimentConfig& config, int repetition);
std::filesystem::path regularizer_dir(const ExperimentConfig& config);

/// Runs every repetition (seed = seed_base + r) and writes under
/// output_dir/<dataset>/<arch>/<regularizer>/: records.jsonl plus, per
/// repetition, rep<r>/{checkpoint.bin, epochs.csv, record.json, timing.json}.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const ProgressCallback& progress = {});

/// Loads DIR/records.jsonl, or DIR/rep*/record.json when absent.
std::vector<RunRecord> read_records(const std::filesystem::path& dir);

enum class Metric { kMse, kSsim };
Metric parse_metric(std::string_view name);

struct Comparison {
  WilcoxonResult test;
  double mean_a = 0.0;
  double std_a = 0.0;
  double mean_b = 0.0;
  double std_b = 0.0;
  std::string table_row;
};

/// Pairs repetition i of A with repetition i of B.
Comparison compare_runs(const std::vector<RunRecord>& records_a,
                        const std::vector<RunRecord>& records_b, Metric metric,
                        double alpha = 0.05);

enum class FigureKind { kTrainMse, kSsimBars, kDropCounts };

/// Long-format CSV: header "epoch,repetition,value,mean", one row per
/// (epoch, repetition); mean is over repetitions at that epoch. ssim_bars has
/// one row per repetition with epoch = epochs trained.
void emit_figure_data(const std::vector<RunRecord>& records, FigureKind kind,
                      const std::filesystem::path& path);

/// Writes figure CSVs next to every records.jsonl found under \p root.
std::vector<std::filesystem::path> export_figures(const std::filesystem::path& root);

}  // namespace erbm
