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

#include <span>

#include "erbm/linalg.hpp"

namespace erbm {

/// Mean over rows of the summed squared pixel error:
/// (1/B) sum_b sum_i (x_bi - y_bi)^2.
template <typename T>
double reconstruction_mse(const RowMatrix<T>& original,
                          const RowMatrix<T>& reconstruction);

/// Row-major single-channel image.
template <typename T>
struct ImageView {
  std::span<const T> pixels;
  Index height = 0;
  Index width = 0;
};

struct SsimOptions {
  Index window = 11;
  double sigma = 1.5;
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean structural similarity over every window position that fits entirely
/// inside the image, with a normalized Gaussian window.
template <typename T>
double ssim(ImageView<T> x, ImageView<T> y, const SsimOptions& options = {});

/// Mean SSIM over paired rows of two batches of height x width images.
template <typename T>
double mean_ssim(const RowMatrix<T>& originals, const RowMatrix<T>& reconstructions,
                 Index height, Index width, const SsimOptions& options = {});

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  int n_effective = 0;     // pairs left after dropping zero differences
  double p_value = 1.0;    // two-sided
  bool exact = true;
  bool significant_at_05 = false;
};

inline constexpr int kWilcoxonMinPairs = 5;
inline constexpr int kWilcoxonExactLimit = 20;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped and tied magnitudes get average ranks. The p-value is exact
/// (full sign-assignment distribution) for up to kWilcoxonExactLimit pairs
/// and uses the tie-corrected normal approximation with continuity
/// correction above that. `significant_at_05` reports p < alpha.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> sample_a,
                                    std::span<const double> sample_b,
                                    double alpha = 0.05);

}  // namespace erbm
