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
#include "erbm/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "erbm/checkpoint.hpp"
#include "erbm/error.hpp"
#include "erbm/image_export.hpp"

namespace erbm {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string format_double(double x) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, result.ptr);
}

std::string_view reconstruction_name(ReconstructionMode mode) {
  return mode == ReconstructionMode::kMeanField ? "mean_field" : "stochastic";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  file << text;
  if (!file) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << file.rdbuf();
  return ss.str();
}

Json config_json(const RunRecord& r) {
  Json config;
  config["dataset"] = r.dataset;
  config["architecture"] = r.architecture;
  config["regularizer"] = r.regularizer;
  config["drop_probability"] = r.drop_probability;
  config["l2_coeff"] = r.l2_coeff;
  config["hidden_units"] = r.hidden_units;
  config["learning_rate"] = r.learning_rate;
  config["epochs"] = r.epochs;
  config["batch_size"] = r.batch_size;
  config["cd_steps"] = r.cd_steps;
  config["train_size"] = r.train_size;
  config["test_size"] = r.test_size;
  config["reconstruction"] = r.reconstruction;
  config["binarize_threshold"] =
      r.binarize_threshold ? Json(*r.binarize_threshold) : Json(nullptr);
  return config;
}

RunRecord record_stub(const ExperimentConfig& config, std::string_view dataset,
                      int repetition, Index train_size, Index test_size) {
  RunRecord r;
  r.dataset = std::string(dataset);
  r.architecture = std::string(architecture_name(config.architecture));
  r.regularizer = std::string(config.regularizer.name());
  r.drop_probability = config.regularizer.drop_probability;
  r.l2_coeff = config.regularizer.l2_coeff;
  r.hidden_units = config.effective_hidden_units();
  r.learning_rate = config.effective_learning_rate();
  r.epochs = config.epochs;
  r.batch_size = config.batch_size;
  r.cd_steps = config.cd_steps;
  r.train_size = train_size;
  r.test_size = test_size;
  r.reconstruction = std::string(reconstruction_name(config.reconstruction));
  r.binarize_threshold = config.normalize.binarize_threshold;
  r.repetition = repetition;
  r.seed = config.seed_base + static_cast<std::uint64_t>(repetition);
  return r;
}

double metric_value(const RunRecord& r, Metric metric) {
  return metric == Metric::kMse ? r.test_mse : r.test_ssim;
}

void mean_std(const std::vector<double>& values, double& mean, double& stddev) {
  const double n = static_cast<double>(values.size());
  mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

void truncate_rows(Dataset& data, Index limit) {
  if (limit > 0 && limit < data.size()) {
    RowMatrix<float> head = data.images.topRows(limit);
    data.images = std::move(head);
  }
}

std::string epochs_csv(const RunRecord& r) {
  std::string out = "epoch,train_mse,dropped\n";
  for (size_t e = 0; e < r.train_mse.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_double(r.train_mse[e]) + "," +
           std::to_string(r.dropped[e]) + "\n";
  }
  return out;
}

}  // namespace

ArchitectureSpec architecture_spec(Architecture arch) {
  switch (arch) {
    case Architecture::kMa: return {512, 0.1};
    case Architecture::kMb: return {1024, 0.1};
    case Architecture::kMc: return {1024, 0.03};
    case Architecture::kMd: return {1024, 0.01};
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown architecture");
}

Architecture parse_architecture(std::string_view name) {
  if (name == "Ma" || name == "ma") return Architecture::kMa;
  if (name == "Mb" || name == "mb") return Architecture::kMb;
  if (name == "Mc" || name == "mc") return Architecture::kMc;
  if (name == "Md" || name == "md") return Architecture::kMd;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown architecture '" + std::string(name) + "' (Ma|Mb|Mc|Md)");
}

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::kMa: return "Ma";
    case Architecture::kMb: return "Mb";
    case Architecture::kMc: return "Mc";
    case Architecture::kMd: return "Md";
  }
  return "?";
}

Index ExperimentConfig::effective_hidden_units() const {
  return hidden_units.value_or(architecture_spec(architecture).hidden_units);
}

double ExperimentConfig::effective_learning_rate() const {
  return learning_rate.value_or(architecture_spec(architecture).learning_rate);
}

void ExperimentConfig::validate() const {
  regularizer.validate();
  if (repetitions < 1) throw Error(ErrorKind::kInvalidArgument, "repetitions must be >= 1");
  TrainConfig{effective_learning_rate(), epochs, batch_size, cd_steps, seed_base}.validate();
  if (effective_hidden_units() < 1) {
    throw Error(ErrorKind::kInvalidArgument, "hidden units must be >= 1");
  }
  if (train_limit < 0 || test_limit < 0) {
    throw Error(ErrorKind::kInvalidArgument, "limits must be >= 0");
  }
}

std::string to_json_line(const RunRecord& r) {
  Json j;
  j["config"] = config_json(r);
  j["repetition"] = r.repetition;
  j["seed"] = r.seed;
  j["train_mse"] = r.train_mse;
  j["dropped"] = r.dropped;
  j["test_mse"] = r.test_mse;
  j["test_ssim"] = r.test_ssim;
  return j.dump();
}

RunRecord record_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    const Json& c = j.at("config");
    RunRecord r;
    r.dataset = c.at("dataset").get<std::string>();
    r.architecture = c.at("architecture").get<std::string>();
    r.regularizer = c.at("regularizer").get<std::string>();
    r.drop_probability = c.at("drop_probability").get<double>();
    r.l2_coeff = c.at("l2_coeff").get<double>();
    r.hidden_units = c.at("hidden_units").get<Index>();
    r.learning_rate = c.at("learning_rate").get<double>();
    r.epochs = c.at("epochs").get<int>();
    r.batch_size = c.at("batch_size").get<int>();
    r.cd_steps = c.at("cd_steps").get<int>();
    r.train_size = c.at("train_size").get<Index>();
    r.test_size = c.at("test_size").get<Index>();
    r.reconstruction = c.at("reconstruction").get<std::string>();
    if (!c.at("binarize_threshold").is_null()) {
      r.binarize_threshold = c.at("binarize_threshold").get<double>();
    }
    r.repetition = j.at("repetition").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.train_mse = j.at("train_mse").get<std::vector<double>>();
    r.dropped = j.at("dropped").get<std::vector<std::uint64_t>>();
    r.test_mse = j.at("test_mse").get<double>();
    r.test_ssim = j.at("test_ssim").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("run record: ") + e.what());
  }
}

TrainedModel train_rbm(const RowMatrix<float>& train, Index hidden_units,
                       const TrainConfig& config, const RegularizerKind& kind,
                       const ProgressCallback& progress, int repetition) {
  if (config.epochs < 0) throw Error(ErrorKind::kInvalidArgument, "epochs must be >= 0");
  if (config.epochs > 0) config.validate();
  if (train.rows() == 0) throw Error(ErrorKind::kInvalidArgument, "empty training set");
  const Index m = train.cols();
  const Index n_rows = train.rows();

  TrainedModel model;
  model.params = init_params<float>(m, hidden_units, substream_seed(config.seed, "init"));
  Regularizer<float> regularizer(kind, m, hidden_units,
                                 RandomStream::named(config.seed, "masks"));
  RandomStream gibbs = RandomStream::named(config.seed, "gibbs");
  const BatchPlan plan{config.batch_size, substream_seed(config.seed, "shuffle")};

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = Clock::now();
    double squared_error = 0.0;
    std::uint64_t dropped = 0;
    for (const auto& rows : batch_indices(n_rows, plan, epoch)) {
      const RowMatrix<float> batch = gather_rows<float>(train, rows);
      const CdMasks masks = regularizer.next_masks(batch.rows());
      dropped += regularizer.last_dropped();
      const CdResult<float> step =
          cd_step(model.params, batch, config.cd_steps, masks, gibbs);
      RbmParams<float> next;
      try {
        next = apply_update(model.params, step.delta, config.learning_rate,
                            regularizer.l2_coeff());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNonFinite) throw;
        throw Error(ErrorKind::kDivergence,
                    "epoch " + std::to_string(epoch + 1) +
                        ": parameters became non-finite");
      }
      regularizer.observe(model.params, next, step);
      model.params = std::move(next);
      squared_error += static_cast<double>(step.batch_mse) * static_cast<double>(batch.rows());
    }
    const double mse = squared_error / static_cast<double>(n_rows);
    if (!std::isfinite(mse) ||
        (!model.train_mse.empty() && mse > kDivergenceFactor * model.train_mse.front())) {
      throw Error(ErrorKind::kDivergence,
                  "epoch " + std::to_string(epoch + 1) + ": train MSE " +
                      format_double(mse) + " (first epoch " +
                      (model.train_mse.empty() ? std::string("n/a")
                                               : format_double(model.train_mse.front())) +
                      ")");
    }
    model.train_mse.push_back(mse);
    model.dropped.push_back(dropped);
    if (progress) {
      const double seconds =
          std::chrono::duration<double>(Clock::now() - start).count();
      progress(EpochProgress{repetition, epoch + 1, config.epochs, mse, dropped, seconds});
    }
  }
  return model;
}

RowMatrix<float> reconstruct(const RbmParams<float>& params,
                             const RegularizerKind& kind,
                             const RowMatrix<float>& data,
                             ReconstructionMode mode, std::uint64_t seed) {
  const RbmParams<float> eval = rescale_weights_for_inference(params, kind);
  RowMatrix<float> hidden = hidden_probabilities(eval, data);
  if (mode == ReconstructionMode::kMeanField) return visible_probabilities(eval, hidden);
  RandomStream rng(seed);
  hidden = sample_binary(hidden, rng);
  return sample_binary(visible_probabilities(eval, hidden), rng);
}

std::filesystem::path regularizer_dir(const ExperimentConfig& config) {
  const std::string dataset =
      std::filesystem::path(config.dataset).filename().string().empty()
          ? std::filesystem::path(config.dataset).parent_path().filename().string()
          : std::filesystem::path(config.dataset).filename().string();
  return config.output_dir / dataset /
         std::string(architecture_name(config.architecture)) /
         std::string(config.regularizer.name());
}

std::filesystem::path repetition_dir(const ExperimentConfig& config, int repetition) {
  return regularizer_dir(config) / ("rep" + std::to_string(repetition));
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const ProgressCallback& progress) {
  config.validate();
  const DatasetFiles files = resolve_dataset(config.dataset);
  Dataset train = load_dataset(files.train_images, config.normalize);
  Dataset test = load_dataset(files.test_images, config.normalize);
  truncate_rows(train, config.train_limit);
  truncate_rows(test, config.test_limit);
  if (train.images.cols() != test.images.cols()) {
    throw Error(ErrorKind::kParse, "train and test images differ in size");
  }

  const auto base = regularizer_dir(config);
  std::filesystem::create_directories(base);
  const Index hidden = config.effective_hidden_units();

  std::vector<RunRecord> records;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    RunRecord record = record_stub(config, files.name, rep, train.size(), test.size());
    const auto dir = repetition_dir(config, rep);
    const auto record_path = dir / "record.json";
    if (config.resume && std::filesystem::exists(record_path)) {
      RunRecord cached = record_from_json(read_text(record_path));
      if (config_json(cached) == config_json(record) && cached.seed == record.seed) {
        records.push_back(std::move(cached));
        continue;
      }
    }
    std::filesystem::create_directories(dir);

    const auto start = Clock::now();
    const TrainConfig train_config{config.effective_learning_rate(), config.epochs,
                                   config.batch_size, config.cd_steps, record.seed};
    TrainedModel model;
    try {
      model = train_rbm(train.images, hidden, train_config, config.regularizer,
                        progress, rep);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDivergence) throw;
      throw Error(ErrorKind::kDivergence,
                  "repetition " + std::to_string(rep) + " (seed " +
                      std::to_string(record.seed) + "): " + e.what());
    }
    const RowMatrix<float> recon =
        reconstruct(model.params, config.regularizer, test.images,
                    config.reconstruction, substream_seed(record.seed, "eval"));
    record.train_mse = std::move(model.train_mse);
    record.dropped = std::move(model.dropped);
    record.test_mse = reconstruction_mse(test.images, recon);
    record.test_ssim = test.height >= 11 && test.width >= 11
                           ? mean_ssim(test.images, recon, test.height, test.width)
                           : std::nan("");
    record.wall_clock_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();

    save_checkpoint(dir / "checkpoint.bin",
                    Checkpoint{model.params.cast<double>(), record.seed,
                               static_cast<std::uint64_t>(config.epochs)});
    write_text(dir / "epochs.csv", epochs_csv(record));
    write_text(dir / "record.json", to_json_line(record) + "\n");
    write_text(dir / "timing.json",
               Json{{"wall_clock_seconds", record.wall_clock_seconds}}.dump() + "\n");
    if (config.export_images) {
      const Index grid = 10;
      if (hidden >= grid * grid) {
        export_weight_filters(model.params.cast<double>(), grid, grid,
                              dir / "filters.pgm", test.height, test.width);
      }
      const Index shown = std::min<Index>(kPairsPerSheet, test.size());
      export_reconstruction_sheets(test.images.topRows(shown), recon.topRows(shown),
                                   test.height, test.width, dir);
    }
    records.push_back(std::move(record));
  }

  std::string lines;
  for (const auto& r : records) lines += to_json_line(r) + "\n";
  write_text(base / "records.jsonl", lines);
  return records;
}

std::vector<RunRecord> read_records(const std::filesystem::path& dir) {
  std::vector<RunRecord> records;
  const auto jsonl = dir / "records.jsonl";
  if (std::filesystem::exists(jsonl)) {
    std::istringstream lines(read_text(jsonl));
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty()) records.push_back(record_from_json(line));
    }
  } else if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const auto path = entry.path() / "record.json";
      if (entry.is_directory() && std::filesystem::exists(path)) {
        records.push_back(record_from_json(read_text(path)));
      }
    }
    std::sort(records.begin(), records.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.repetition < b.repetition; });
  }
  if (records.empty()) {
    throw Error(ErrorKind::kIo, "no run records under " + dir.string());
  }
  return records;
}

Metric parse_metric(std::string_view name) {
  if (name == "mse") return Metric::kMse;
  if (name == "ssim") return Metric::kSsim;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown metric '" + std::string(name) + "' (mse|ssim)");
}

Comparison compare_runs(const std::vector<RunRecord>& records_a,
                        const std::vector<RunRecord>& records_b, Metric metric,
                        double alpha) {
  if (records_a.size() != records_b.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "compare: " + std::to_string(records_a.size()) + " vs " +
                    std::to_string(records_b.size()) + " repetitions");
  }
  if (records_a.size() < static_cast<size_t>(kWilcoxonMinPairs)) {
    throw Error(ErrorKind::kInvalidArgument,
                "compare: need at least " + std::to_string(kWilcoxonMinPairs) +
                    " repetitions per side");
  }
  std::vector<double> a, b;
  for (size_t k = 0; k < records_a.size(); ++k) {
    a.push_back(metric_value(records_a[k], metric));
    b.push_back(metric_value(records_b[k], metric));
  }
  Comparison out;
  out.test = wilcoxon_signed_rank(a, b, alpha);
  mean_std(a, out.mean_a, out.std_a);
  mean_std(b, out.mean_b, out.std_b);

  const auto label = [](const RunRecord& r) {
    return r.dataset + "/" + r.architecture + "/" + r.regularizer;
  };
  const bool a_lower = out.mean_a < out.mean_b;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s | %s %.4f +- %.4f | %s %.4f +- %.4f | W=%.1f n=%d p=%.6f | %s",
                metric == Metric::kMse ? "mse" : "ssim", label(records_a.front()).c_str(),
                out.mean_a, out.std_a, label(records_b.front()).c_str(), out.mean_b,
                out.std_b, out.test.statistic, out.test.n_effective, out.test.p_value,
                out.test.significant_at_05
                    ? (std::string("significant, lower mean: ") + (a_lower ? "A" : "B")).c_str()
                    : "not significant");
  out.table_row = buf;
  return out;
}

void emit_figure_data(const std::vector<RunRecord>& records, FigureKind kind,
                      const std::filesystem::path& path) {
  if (records.empty()) throw Error(ErrorKind::kInvalidArgument, "figure data: no records");
  std::string out = "epoch,repetition,value,mean\n";
  if (kind == FigureKind::kSsimBars) {
    double total = 0.0;
    for (const auto& r : records) total += r.test_ssim;
    const double mean = total / static_cast<double>(records.size());
    for (const auto& r : records) {
      out += std::to_string(r.epochs) + "," + std::to_string(r.repetition) + "," +
             format_double(r.test_ssim) + "," + format_double(mean) + "\n";
    }
  } else {
    const size_t epochs = kind == FigureKind::kTrainMse ? records.front().train_mse.size()
                                                        : records.front().dropped.size();
    for (const auto& r : records) {
      if (r.train_mse.size() != epochs || r.dropped.size() != epochs) {
        throw Error(ErrorKind::kInvalidArgument,
                    "figure data: repetitions have different epoch counts");
      }
    }
    for (size_t e = 0; e < epochs; ++e) {
      double total = 0.0;
      for (const auto& r : records) {
        total += kind == FigureKind::kTrainMse ? r.train_mse[e]
                                               : static_cast<double>(r.dropped[e]);
      }
      const double mean = total / static_cast<double>(records.size());
      for (const auto& r : records) {
        const double value = kind == FigureKind::kTrainMse
                                 ? r.train_mse[e]
                                 : static_cast<double>(r.dropped[e]);
        out += std::to_string(e + 1) + "," + std::to_string(r.repetition) + "," +
               format_double(value) + "," + format_double(mean) + "\n";
      }
    }
  }
  write_text(path, out);
}

std::vector<std::filesystem::path> export_figures(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> dirs;
  if (std::filesystem::exists(root / "records.jsonl")) dirs.push_back(root);
  if (std::filesystem::is_directory(root)) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.path().filename() == "records.jsonl" && entry.path().parent_path() != root) {
        dirs.push_back(entry.path().parent_path());
      }
    }
  }
  if (dirs.empty()) throw Error(ErrorKind::kIo, "no records.jsonl under " + root.string());
  std::sort(dirs.begin(), dirs.end());
  std::vector<std::filesystem::path> written;
  for (const auto& dir : dirs) {
    const auto records = read_records(dir);
    for (const auto& [kind, name] :
         {std::pair{FigureKind::kTrainMse, "train_mse.csv"},
          std::pair{FigureKind::kDropCounts, "drop_counts.csv"},
          std::pair{FigureKind::kSsimBars, "ssim_bars.csv"}}) {
      written.push_back(dir / name);
      emit_figure_data(records, kind, written.back());
    }
  }
  return written;
}

}  // namespace erbm
