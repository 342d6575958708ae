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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "erbm/checkpoint.hpp"
#include "erbm/error.hpp"
#include "erbm/experiment.hpp"
#include "erbm/image_export.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

namespace erbm {
namespace {

namespace fs = std::filesystem;
using testing::read_all;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("erbm_test_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_config(const fs::path& dir, RegularizerKind kind) {
  ExperimentConfig config;
  config.dataset = testing::write_stroke_dataset(dir, "strokes", 300, 40).string();
  config.regularizer = kind;
  config.repetitions = 2;
  config.epochs = 3;
  config.batch_size = 32;
  config.hidden_units = 100;
  config.seed_base = 5;
  config.output_dir = dir / "runs";
  return config;
}

RunRecord record_with(int rep, double mse, double ssim_value) {
  RunRecord r;
  r.dataset = "d";
  r.architecture = "Ma";
  r.regularizer = "none";
  r.repetition = rep;
  r.test_mse = mse;
  r.test_ssim = ssim_value;
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST_CASE("architecture table") {
  CHECK(architecture_spec(Architecture::kMa).hidden_units == 512);
  CHECK(architecture_spec(Architecture::kMa).learning_rate == 0.1);
  CHECK(architecture_spec(Architecture::kMb).hidden_units == 1024);
  CHECK(architecture_spec(Architecture::kMb).learning_rate == 0.1);
  CHECK(architecture_spec(Architecture::kMc).hidden_units == 1024);
  CHECK(architecture_spec(Architecture::kMc).learning_rate == 0.03);
  CHECK(architecture_spec(Architecture::kMd).hidden_units == 1024);
  CHECK(architecture_spec(Architecture::kMd).learning_rate == 0.01);
  for (const char* name : {"Ma", "Mb", "Mc", "Md"}) {
    CHECK(architecture_name(parse_architecture(name)) == name);
  }
  CHECK_THROWS_AS(parse_architecture("Me"), Error);
}

TEST_CASE("run records survive a JSON round trip") {
  RunRecord r = record_with(3, 20.5, 0.82);
  r.binarize_threshold = 0.5;
  r.train_mse = {30.25, 25.125};
  r.dropped = {17, 0};
  r.seed = 1234567890123ull;
  const RunRecord back = record_from_json(to_json_line(r));
  CHECK(to_json_line(back) == to_json_line(r));
  CHECK(back.binarize_threshold == 0.5);
  CHECK(back.seed == r.seed);
  CHECK(to_json_line(r).find("wall_clock") == std::string::npos);
  CHECK_THROWS_AS(record_from_json("{\"config\": 3}"), Error);
}

TEST_CASE("run_experiment writes reproducible outputs") {
  const fs::path dir = scratch_dir("repro");
  auto config = small_config(dir, RegularizerKind::dropout(0.5));
  const auto first = run_experiment(config);
  REQUIRE(first.size() == 2);
  CHECK(first[0].seed == 5);
  CHECK(first[1].seed == 6);
  CHECK(first[0].train_mse != first[1].train_mse);
  for (const auto& r : first) {
    CHECK(r.train_mse.size() == 3);
    CHECK(r.dropped.size() == 3);
    CHECK(std::isfinite(r.test_mse));
    CHECK(std::isfinite(r.test_ssim));
  }

  const fs::path rep0 = repetition_dir(config, 0);
  CHECK(rep0 == dir / "runs" / "strokes" / "Ma" / "dropout" / "rep0");
  for (const char* file : {"checkpoint.bin", "epochs.csv", "record.json", "timing.json",
                           "filters.pgm", "reconstructions_0.pgm"}) {
    CHECK(fs::exists(rep0 / file));
  }
  CHECK(lines_of(read_all(rep0 / "epochs.csv")).size() == 4);
  const std::string csv = read_all(rep0 / "epochs.csv");
  const std::string json = read_all(rep0 / "record.json");
  const std::string filters = read_all(rep0 / "filters.pgm");
  const Checkpoint ckpt = load_checkpoint(rep0 / "checkpoint.bin");
  CHECK(ckpt.seed == 5);
  CHECK(ckpt.epochs == 3);
  CHECK(ckpt.params.hidden_count() == 100);

  config.output_dir = dir / "again";
  const auto second = run_experiment(config);
  const fs::path again = repetition_dir(config, 0);
  CHECK(read_all(again / "epochs.csv") == csv);
  CHECK(read_all(again / "record.json") == json);
  CHECK(read_all(again / "filters.pgm") == filters);
  CHECK(read_all(regularizer_dir(config) / "records.jsonl") ==
        read_all(dir / "runs" / "strokes" / "Ma" / "dropout" / "records.jsonl"));

  const auto loaded = read_records(regularizer_dir(config));
  REQUIRE(loaded.size() == 2);
  CHECK(to_json_line(loaded[1]) == to_json_line(second[1]));
  fs::remove_all(dir);
}

TEST_CASE("resume keeps finished repetitions") {
  const fs::path dir = scratch_dir("resume");
  auto config = small_config(dir, RegularizerKind::none());
  run_experiment(config);
  const auto record = repetition_dir(config, 1) / "record.json";
  const std::string before = read_all(record);
  fs::remove(repetition_dir(config, 0) / "record.json");

  config.resume = true;
  int trained = 0;
  run_experiment(config, [&](const EpochProgress& p) { trained += p.epoch == 1; });
  CHECK(trained == 1);
  CHECK(read_all(record) == before);

  // A different configuration is retrained even with resume set.
  config.epochs = 2;
  trained = 0;
  run_experiment(config, [&](const EpochProgress& p) { trained += p.epoch == 1; });
  CHECK(trained == 2);
  fs::remove_all(dir);
}

TEST_CASE("zero epochs evaluates the untrained model") {
  const fs::path dir = scratch_dir("zero");
  auto config = small_config(dir, RegularizerKind::edropout());
  config.epochs = 0;
  config.repetitions = 1;
  const auto records = run_experiment(config);
  REQUIRE(records.size() == 1);
  CHECK(records[0].train_mse.empty());
  CHECK(records[0].dropped.empty());
  CHECK(std::isfinite(records[0].test_mse));
  fs::remove_all(dir);
}

TEST_CASE("missing data is an io error") {
  ExperimentConfig config;
  config.dataset = (fs::temp_directory_path() / "erbm_no_such_dataset").string();
  try {
    run_experiment(config);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
}

TEST_CASE("training with an absurd learning rate is reported as divergence") {
  const auto train = testing::random_unit(64, 20, 3).cast<float>().eval();
  TrainConfig config{1e300, 5, 16, 1, 1};
  try {
    train_rbm(RowMatrix<float>(train), 8, config, RegularizerKind::none());
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDivergence);
  }
}

TEST_CASE("dropout drop counts follow the binomial mean") {
  // 40 batches of 8 rows, 200 hidden units, p = 0.5: 4000 expected drops per
  // epoch, standard deviation about 45.
  const RowMatrix<float> train = testing::random_unit(320, 30, 4).cast<float>();
  const TrainConfig config{0.05, 4, 8, 1, 2};
  const auto dropout = train_rbm(train, 200, config, RegularizerKind::dropout(0.5));
  for (const auto d : dropout.dropped) CHECK(std::abs(static_cast<double>(d) - 4000.0) < 0.02 * 4000.0);

  const auto none = train_rbm(train, 200, config, RegularizerKind::none());
  for (const auto d : none.dropped) CHECK(d == 0);

  const auto connect = train_rbm(train, 20, config, RegularizerKind::drop_connect(0.5));
  // 320 rows per epoch, 30 x 20 connections each.
  for (const auto d : connect.dropped) CHECK(std::abs(static_cast<double>(d) - 96000.0) < 0.02 * 96000.0);
}

TEST_CASE("reconstruct") {
  const RbmParams<float> zero = testing::zero_params(784, 10).cast<float>();
  const RowMatrix<float> data = testing::random_unit(3, 784, 5).cast<float>();
  const auto mean_field = reconstruct(zero, RegularizerKind::none(), data, ReconstructionMode::kMeanField, 0);
  CHECK((mean_field.array() == 0.5f).all());
  const auto sampled = reconstruct(zero, RegularizerKind::none(), data, ReconstructionMode::kStochastic, 1);
  CHECK(((sampled.array() == 0.0f) || (sampled.array() == 1.0f)).all());
  CHECK(sampled == reconstruct(zero, RegularizerKind::none(), data, ReconstructionMode::kStochastic, 1));

  // Dropout models are evaluated with the weights halved.
  auto p = testing::random_params(784, 10, 6, 0.2);
  const auto with = reconstruct(p.cast<float>(), RegularizerKind::dropout(0.5), data,
                                ReconstructionMode::kMeanField, 0);
  p.weights *= 0.5;
  const auto manual = reconstruct(p.cast<float>(), RegularizerKind::none(), data,
                                  ReconstructionMode::kMeanField, 0);
  CHECK((with - manual).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("compare_runs") {
  std::vector<RunRecord> a, b;
  for (int k = 0; k < 10; ++k) {
    a.push_back(record_with(k, 20.0 + 0.01 * k, 0.80 + 0.001 * k));
    b.push_back(record_with(k, 25.0 + 0.013 * k, 0.70 - 0.002 * k));
  }
  const auto c = compare_runs(a, b, Metric::kMse);
  CHECK(c.test.significant_at_05);
  CHECK(c.test.p_value == 2.0 / 1024.0);
  CHECK(c.mean_a == doctest::Approx(20.045).epsilon(1e-12));
  CHECK(c.mean_b == doctest::Approx(25.0585).epsilon(1e-12));
  double ss = 0.0;
  for (int k = 0; k < 10; ++k) ss += std::pow(0.01 * k - 0.045, 2);
  CHECK(c.std_a == doctest::Approx(std::sqrt(ss / 9.0)).epsilon(1e-9));
  CHECK(c.table_row.find("lower mean: A") != std::string::npos);

  const auto swapped = compare_runs(b, a, Metric::kMse);
  CHECK(swapped.test.p_value == c.test.p_value);
  CHECK(swapped.table_row.find("lower mean: B") != std::string::npos);

  const auto s = compare_runs(a, b, Metric::kSsim);
  CHECK(s.mean_a > s.mean_b);
  CHECK(s.test.significant_at_05);

  CHECK_THROWS_AS(compare_runs(a, a, Metric::kMse), Error);
  CHECK_THROWS_AS(compare_runs(a, std::vector<RunRecord>(b.begin(), b.begin() + 9), Metric::kMse), Error);
  CHECK_THROWS_AS(compare_runs(std::vector<RunRecord>(a.begin(), a.begin() + 4),
                               std::vector<RunRecord>(b.begin(), b.begin() + 4), Metric::kMse),
                  Error);
  CHECK(parse_metric("ssim") == Metric::kSsim);
  CHECK_THROWS_AS(parse_metric("psnr"), Error);
}

TEST_CASE("figure data") {
  const fs::path dir = scratch_dir("figures");
  std::vector<RunRecord> records;
  for (int k = 0; k < 10; ++k) {
    RunRecord r = record_with(k, 20.0, 0.8 + 0.01 * k);
    r.epochs = 50;
    for (int e = 0; e < 50; ++e) {
      r.train_mse.push_back(100.0 - e + k);
      r.dropped.push_back(0);
    }
    records.push_back(r);
  }
  emit_figure_data(records, FigureKind::kTrainMse, dir / "train.csv");
  const auto rows = lines_of(read_all(dir / "train.csv"));
  CHECK(rows.size() == 501);
  CHECK(rows[0] == "epoch,repetition,value,mean");
  // Epoch 3, repetition 2: value 100 - 2 + 2, mean over reps 98 + 4.5.
  CHECK(rows[1 + 2 * 10 + 2] == "3,2,100,102.5");

  emit_figure_data(records, FigureKind::kDropCounts, dir / "drops.csv");
  for (const auto& line : lines_of(read_all(dir / "drops.csv"))) {
    if (line[0] != 'e') CHECK(line.substr(line.size() - 4) == ",0,0");
  }
  emit_figure_data(records, FigureKind::kSsimBars, dir / "ssim.csv");
  CHECK(lines_of(read_all(dir / "ssim.csv")).size() == 11);

  CHECK_THROWS_AS(emit_figure_data({}, FigureKind::kTrainMse, dir / "none.csv"), Error);
  records[3].train_mse.pop_back();
  CHECK_THROWS_AS(emit_figure_data(records, FigureKind::kTrainMse, dir / "bad.csv"), Error);
  fs::remove_all(dir);
}

TEST_CASE("export_figures walks a run tree") {
  const fs::path dir = scratch_dir("walk");
  auto config = small_config(dir, RegularizerKind::edropout());
  run_experiment(config);
  const auto written = export_figures(dir / "runs");
  CHECK(written.size() == 3);
  for (const auto& path : written) CHECK(fs::exists(path));
  CHECK_THROWS_AS(export_figures(dir / "empty"), Error);
  fs::remove_all(dir);
}

TEST_CASE("weight filter images") {
  const fs::path dir = scratch_dir("filters");
  const auto flat = tile_weight_filters(Matrix<double>::Zero(784, 6), 2, 3);
  CHECK(flat.height == 56);
  CHECK(flat.width == 84);
  for (const auto px : flat.pixels) CHECK(px == 128);

  Matrix<double> ramp(784, 1);
  for (Index i = 0; i < 784; ++i) ramp(i, 0) = -1.0 + 2.0 * i / 783.0;
  const auto spread = tile_weight_filters(ramp, 1, 1);
  CHECK(*std::min_element(spread.pixels.begin(), spread.pixels.end()) == 0);
  CHECK(*std::max_element(spread.pixels.begin(), spread.pixels.end()) == 255);

  export_weight_filters(testing::random_params(784, 12, 1), 3, 4, dir / "f.pgm");
  const GrayImage back = read_pgm(dir / "f.pgm");
  CHECK(back.height == 3 * 28);
  CHECK(back.width == 4 * 28);
  CHECK(read_all(dir / "f.pgm").substr(0, 2) == "P5");
  CHECK_THROWS_AS(tile_weight_filters(Matrix<double>::Zero(784, 6), 3, 3), Error);
  fs::remove_all(dir);
}

TEST_CASE("reconstruction sheets") {
  const fs::path dir = scratch_dir("sheets");
  RowMatrix<float> originals(20, 784);
  for (Index r = 0; r < 20; ++r) {
    for (Index c = 0; c < 784; ++c) originals(r, c) = static_cast<float>((r * 7 + c) % 256) / 255.0f;
  }
  const RowMatrix<float> gray = RowMatrix<float>::Constant(20, 784, 0.5f);
  const auto files = export_reconstruction_sheets(originals, gray, 28, 28, dir);
  REQUIRE(files.size() == 2);
  const GrayImage sheet = read_pgm(files[0]);
  CHECK(sheet.width == 4 * 2 * 28);
  CHECK(sheet.height == 4 * 28);
  // Pair 5 sits in grid row 1, column 1.
  for (Index r = 0; r < 28; ++r) {
    for (Index c = 0; c < 28; ++c) {
      const size_t at = static_cast<size_t>((28 + r) * sheet.width + 56 + c);
      CHECK(sheet.pixels[at] == (5 * 7 + r * 28 + c) % 256);
      CHECK(sheet.pixels[at + 28] == 128);
    }
  }
  CHECK(export_reconstruction_sheets(originals.topRows(16), gray.topRows(16), 28, 28, dir / "b").size() == 1);
  CHECK_THROWS_AS(export_reconstruction_sheets(RowMatrix<float>(0, 784), RowMatrix<float>(0, 784), 28, 28, dir),
                  Error);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace erbm
