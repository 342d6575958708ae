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
#include "erbm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "erbm/error.hpp"

namespace erbm {

namespace {

std::vector<double> gaussian_window(Index size, double sigma) {
  std::vector<double> w(static_cast<size_t>(size * size));
  const double center = static_cast<double>(size - 1) / 2.0;
  double total = 0.0;
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      const double dr = static_cast<double>(r) - center;
      const double dc = static_cast<double>(c) - center;
      const double value = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      w[static_cast<size_t>(r * size + c)] = value;
      total += value;
    }
  }
  for (auto& value : w) value /= total;
  return w;
}

}  // namespace

template <typename T>
double reconstruction_mse(const RowMatrix<T>& original,
                          const RowMatrix<T>& reconstruction) {
  if (original.rows() != reconstruction.rows() ||
      original.cols() != reconstruction.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "reconstruction_mse: shapes " + std::to_string(original.rows()) +
                    "x" + std::to_string(original.cols()) + " and " +
                    std::to_string(reconstruction.rows()) + "x" +
                    std::to_string(reconstruction.cols()));
  }
  if (original.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "reconstruction_mse: empty batch");
  }
  double total = 0.0;
  for (Index r = 0; r < original.rows(); ++r) {
    total += (original.row(r).template cast<double>() -
              reconstruction.row(r).template cast<double>())
                 .squaredNorm();
  }
  return total / static_cast<double>(original.rows());
}

template <typename T>
double ssim(ImageView<T> x, ImageView<T> y, const SsimOptions& options) {
  if (x.height != y.height || x.width != y.width) {
    throw Error(ErrorKind::kDimensionMismatch, "ssim: image shapes differ");
  }
  const Index h = x.height;
  const Index w = x.width;
  if (static_cast<Index>(x.pixels.size()) != h * w ||
      static_cast<Index>(y.pixels.size()) != h * w) {
    throw Error(ErrorKind::kDimensionMismatch,
                "ssim: pixel count does not match height x width");
  }
  const Index win = options.window;
  if (h < win || w < win) {
    throw Error(ErrorKind::kInvalidArgument,
                "ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                    " smaller than the " + std::to_string(win) + "x" +
                    std::to_string(win) + " window");
  }
  const std::vector<double> weights = gaussian_window(win, options.sigma);
  const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
  const double c2 = std::pow(options.k2 * options.dynamic_range, 2);

  double total = 0.0;
  Index count = 0;
  for (Index top = 0; top + win <= h; ++top) {
    for (Index left = 0; left + win <= w; ++left) {
      double mx = 0.0, my = 0.0;
      for (Index r = 0; r < win; ++r) {
        for (Index c = 0; c < win; ++c) {
          const double k = weights[static_cast<size_t>(r * win + c)];
          const auto p = static_cast<size_t>((top + r) * w + left + c);
          mx += k * static_cast<double>(x.pixels[p]);
          my += k * static_cast<double>(y.pixels[p]);
        }
      }
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (Index r = 0; r < win; ++r) {
        for (Index c = 0; c < win; ++c) {
          const double k = weights[static_cast<size_t>(r * win + c)];
          const auto p = static_cast<size_t>((top + r) * w + left + c);
          const double dx = static_cast<double>(x.pixels[p]) - mx;
          const double dy = static_cast<double>(y.pixels[p]) - my;
          vx += k * dx * dx;
          vy += k * dy * dy;
          cov += k * (dx * dy);
        }
      }
      total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

template <typename T>
double mean_ssim(const RowMatrix<T>& originals, const RowMatrix<T>& reconstructions,
                 Index height, Index width, const SsimOptions& options) {
  if (originals.rows() != reconstructions.rows() ||
      originals.cols() != reconstructions.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "mean_ssim: batch shapes differ");
  }
  if (originals.cols() != height * width) {
    throw Error(ErrorKind::kDimensionMismatch,
                "mean_ssim: row length is not height x width");
  }
  if (originals.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "mean_ssim: empty batch");
  }
  const auto len = static_cast<size_t>(height * width);
  double total = 0.0;
  for (Index r = 0; r < originals.rows(); ++r) {
    const ImageView<T> a{{originals.row(r).data(), len}, height, width};
    const ImageView<T> b{{reconstructions.row(r).data(), len}, height, width};
    total += ssim(a, b, options);
  }
  return total / static_cast<double>(originals.rows());
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> sample_a,
                                    std::span<const double> sample_b,
                                    double alpha) {
  if (sample_a.size() != sample_b.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "wilcoxon: samples have " + std::to_string(sample_a.size()) +
                    " and " + std::to_string(sample_b.size()) + " entries");
  }
  std::vector<double> diffs;
  for (size_t k = 0; k < sample_a.size(); ++k) {
    const double d = sample_a[k] - sample_b[k];
    if (!std::isfinite(d)) {
      throw Error(ErrorKind::kNonFinite, "wilcoxon: non-finite difference");
    }
    if (d != 0.0) diffs.push_back(d);
  }
  const int n = static_cast<int>(diffs.size());
  if (n < kWilcoxonMinPairs) {
    throw Error(ErrorKind::kInvalidArgument,
                "wilcoxon: " + std::to_string(n) +
                    " nonzero differences, need at least " +
                    std::to_string(kWilcoxonMinPairs));
  }

  // Ranks are kept doubled so tied averages stay integral.
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int l, int r) {
    return std::abs(diffs[static_cast<size_t>(l)]) <
           std::abs(diffs[static_cast<size_t>(r)]);
  });
  std::vector<int> doubled_rank(static_cast<size_t>(n));
  double tie_term = 0.0;
  for (int start = 0; start < n;) {
    int end = start;
    const double magnitude = std::abs(diffs[static_cast<size_t>(order[static_cast<size_t>(start)])]);
    while (end + 1 < n &&
           std::abs(diffs[static_cast<size_t>(order[static_cast<size_t>(end + 1)])]) == magnitude) {
      ++end;
    }
    for (int k = start; k <= end; ++k) {
      doubled_rank[static_cast<size_t>(order[static_cast<size_t>(k)])] = (start + 1) + (end + 1);
    }
    const double t = end - start + 1;
    tie_term += t * t * t - t;
    start = end + 1;
  }

  int plus2 = 0;
  int total2 = 0;
  for (int k = 0; k < n; ++k) {
    total2 += doubled_rank[static_cast<size_t>(k)];
    if (diffs[static_cast<size_t>(k)] > 0) plus2 += doubled_rank[static_cast<size_t>(k)];
  }
  const int stat2 = std::min(plus2, total2 - plus2);

  WilcoxonResult result;
  result.n_effective = n;
  result.w_plus = plus2 / 2.0;
  result.w_minus = (total2 - plus2) / 2.0;
  result.statistic = stat2 / 2.0;

  if (n <= kWilcoxonExactLimit) {
    // counts[s]: sign assignments whose doubled positive rank sum is s.
    std::vector<std::uint64_t> counts(static_cast<size_t>(total2) + 1, 0);
    counts[0] = 1;
    int reach = 0;
    for (const int r : doubled_rank) {
      for (int s = reach; s >= 0; --s) counts[static_cast<size_t>(s + r)] += counts[static_cast<size_t>(s)];
      reach += r;
    }
    std::uint64_t extreme = 0;
    for (int s = 0; s <= total2; ++s) {
      if (std::min(s, total2 - s) <= stat2) extreme += counts[static_cast<size_t>(s)];
    }
    result.p_value = static_cast<double>(extreme) / std::ldexp(1.0, n);
    result.exact = true;
  } else {
    const double nn = n;
    const double mean = nn * (nn + 1.0) / 4.0;
    const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (result.statistic - mean + 0.5) / std::sqrt(variance);
    result.p_value = std::clamp(std::erfc(-z / std::sqrt(2.0)), 0.0, 1.0);
    result.exact = false;
  }
  result.significant_at_05 = result.p_value < alpha;
  return result;
}

template double reconstruction_mse(const RowMatrix<float>&, const RowMatrix<float>&);
template double reconstruction_mse(const RowMatrix<double>&, const RowMatrix<double>&);
template double ssim(ImageView<float>, ImageView<float>, const SsimOptions&);
template double ssim(ImageView<double>, ImageView<double>, const SsimOptions&);
template double mean_ssim(const RowMatrix<float>&, const RowMatrix<float>&, Index,
                          Index, const SsimOptions&);
template double mean_ssim(const RowMatrix<double>&, const RowMatrix<double>&, Index,
                          Index, const SsimOptions&);

}  // namespace erbm
