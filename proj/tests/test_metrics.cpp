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
#include <random>
#include <vector>

#include <doctest.h>

#include "erbm/error.hpp"
#include "erbm/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace erbm {
namespace {

using testing::random_unit;

std::vector<double> random_image(std::mt19937_64& gen, int pixels) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(static_cast<size_t>(pixels));
  for (auto& x : out) x = u(gen);
  return out;
}

ImageView<double> view(const std::vector<double>& pixels, Index h, Index w) {
  return ImageView<double>{pixels, h, w};
}

TEST_CASE("reconstruction_mse") {
  const auto a = random_unit(3, 784, 1);
  CHECK(reconstruction_mse(a, a) == 0.0);

  const RowMatrix<double> ones = RowMatrix<double>::Ones(1, 784);
  const RowMatrix<double> zeros = RowMatrix<double>::Zero(1, 784);
  CHECK(reconstruction_mse(ones, zeros) == 784.0);

  const auto x = random_unit(2, 50, 2);
  const auto y = random_unit(2, 50, 3);
  const double first = reconstruction_mse(RowMatrix<double>(x.row(0)), RowMatrix<double>(y.row(0)));
  const double second = reconstruction_mse(RowMatrix<double>(x.row(1)), RowMatrix<double>(y.row(1)));
  CHECK(reconstruction_mse(x, y) == doctest::Approx((first + second) / 2).epsilon(1e-14));

  RowMatrix<double> xs(2, 50), ys(2, 50);
  xs << x.row(1), x.row(0);
  ys << y.row(1), y.row(0);
  CHECK(reconstruction_mse(xs, ys) == doctest::Approx(reconstruction_mse(x, y)).epsilon(1e-15));
  CHECK(reconstruction_mse(x, y) > 0.0);

  CHECK_THROWS_AS(reconstruction_mse(x, random_unit(2, 49, 4)), Error);
  CHECK_THROWS_AS(reconstruction_mse(x, random_unit(3, 50, 4)), Error);
  CHECK_THROWS_AS(reconstruction_mse(RowMatrix<double>(0, 50), RowMatrix<double>(0, 50)), Error);
}

TEST_CASE("ssim identity and symmetry on random images") {
  std::mt19937_64 gen(5);
  for (int k = 0; k < 50; ++k) {
    const auto x = random_image(gen, 784);
    const auto y = random_image(gen, 784);
    CHECK(std::abs(ssim(view(x, 28, 28), view(x, 28, 28)) - 1.0) < 1e-9);
    const double xy = ssim(view(x, 28, 28), view(y, 28, 28));
    CHECK(xy == ssim(view(y, 28, 28), view(x, 28, 28)));
    CHECK(std::abs(xy) <= 1.0);
  }
}

TEST_CASE("ssim of constant images is one") {
  const std::vector<double> gray(784, 0.5);
  CHECK(ssim(view(gray, 28, 28), view(gray, 28, 28)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim agrees with a window-by-window oracle") {
  std::mt19937_64 gen(6);
  for (int k = 0; k < 5; ++k) {
    const auto x = random_image(gen, 20 * 24);
    auto y = x;
    for (auto& p : y) p = std::clamp(p + 0.2 * (random_image(gen, 1)[0] - 0.5), 0.0, 1.0);
    CHECK(ssim(view(x, 20, 24), view(y, 20, 24)) ==
          doctest::Approx(oracle::ssim(x, y, 20, 24)).epsilon(1e-10));
  }
}

TEST_CASE("ssim is invariant under translating both images") {
  // A pattern with a zero margin of at least one window on every side, so
  // shifting it only relabels which windows see it.
  std::mt19937_64 gen(7);
  const auto patch = random_image(gen, 14 * 14);
  auto place = [&](int dr, int dc, double scale) {
    std::vector<double> img(40 * 40, 0.0);
    for (int r = 0; r < 14; ++r) {
      for (int c = 0; c < 14; ++c) {
        img[static_cast<size_t>((r + 11 + dr) * 40 + c + 11 + dc)] = scale * patch[static_cast<size_t>(r * 14 + c)];
      }
    }
    return img;
  };
  const double base = ssim(view(place(0, 0, 1.0), 40, 40), view(place(0, 0, 0.6), 40, 40));
  const double moved = ssim(view(place(2, 3, 1.0), 40, 40), view(place(2, 3, 0.6), 40, 40));
  CHECK(moved == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ssim errors") {
  const std::vector<double> small(10 * 10, 0.5);
  CHECK_THROWS_AS(ssim(view(small, 10, 10), view(small, 10, 10)), Error);
  const std::vector<double> a(784, 0.5), b(783, 0.5);
  CHECK_THROWS_AS(ssim(view(a, 28, 28), view(b, 27, 29)), Error);
}

TEST_CASE("mean_ssim averages per-image values") {
  const auto x = random_unit(3, 784, 8);
  const auto y = random_unit(3, 784, 9);
  double total = 0.0;
  for (Index r = 0; r < 3; ++r) {
    const std::vector<double> xr(x.row(r).begin(), x.row(r).end());
    const std::vector<double> yr(y.row(r).begin(), y.row(r).end());
    total += ssim(view(xr, 28, 28), view(yr, 28, 28));
  }
  CHECK(mean_ssim(x, y, 28, 28) == doctest::Approx(total / 3).epsilon(1e-14));
}

TEST_CASE("wilcoxon: all differences of one sign") {
  std::vector<double> a(10), b(10);
  for (int k = 0; k < 10; ++k) {
    a[static_cast<size_t>(k)] = k + 1;
    b[static_cast<size_t>(k)] = k + 2;
  }
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK(r.w_plus == 0.0);
  CHECK(r.w_minus == 55.0);
  CHECK(r.statistic == 0.0);
  CHECK(r.exact);
  // One tail is 1/2^10; the test is two-sided.
  CHECK(r.p_value == 2.0 / 1024.0);
  CHECK(r.significant_at_05);
}

TEST_CASE("wilcoxon: hand example with six differences") {
  const std::vector<double> d{1, -2, 3, -4, 5, 6};
  const std::vector<double> zero(6, 0.0);
  const auto r = wilcoxon_signed_rank(d, zero);
  const auto o = oracle::signed_rank(d);
  CHECK(r.w_plus == 15.0);
  CHECK(r.w_minus == 6.0);
  CHECK(r.statistic == o.statistic);
  CHECK(r.p_value == doctest::Approx(o.p_value).epsilon(1e-15));
  // 2 * P(W+ <= 6) for n = 6 is 2 * 14/64.
  CHECK(r.p_value == doctest::Approx(28.0 / 64.0).epsilon(1e-15));
  CHECK_FALSE(r.significant_at_05);
}

TEST_CASE("wilcoxon exact path matches sign enumeration for n <= 10") {
  std::mt19937_64 gen(10);
  std::uniform_int_distribution<int> magnitude(1, 6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = kWilcoxonMinPairs; n <= 10; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> d(static_cast<size_t>(n));
      // Half the vectors use small integers so ties are common.
      for (auto& x : d) {
        if (trial % 2 == 0) {
          x = magnitude(gen) * (gen() & 1u ? 1.0 : -1.0);
        } else {
          x = u(gen);
          if (x == 0.0) x = 0.5;
        }
      }
      const std::vector<double> zero(d.size(), 0.0);
      const auto r = wilcoxon_signed_rank(d, zero);
      const auto o = oracle::signed_rank(d);
      CHECK(r.exact);
      CHECK(r.n_effective == n);
      CHECK(r.w_plus == o.w_plus);
      CHECK(r.w_minus == o.w_minus);
      CHECK(r.statistic == o.statistic);
      CHECK(r.p_value == doctest::Approx(o.p_value).epsilon(1e-15));
    }
  }
}

TEST_CASE("wilcoxon drops zero differences before ranking") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> b{1, 2.5, 2, 4, 6.5, 5.5, 9, 7};
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK(r.n_effective == 6);
  std::vector<double> d;
  for (size_t k = 0; k < a.size(); ++k) d.push_back(a[k] - b[k]);
  const auto o = oracle::signed_rank(d);
  CHECK(r.statistic == o.statistic);
  CHECK(r.p_value == doctest::Approx(o.p_value).epsilon(1e-15));
}

TEST_CASE("wilcoxon is unchanged by positive scaling and antisymmetric in its inputs") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> g(0.3, 1.0);
  std::vector<double> a(12), b(12);
  for (size_t k = 0; k < 12; ++k) {
    a[k] = g(gen);
    b[k] = g(gen);
  }
  std::vector<double> a3(a), b3(b);
  for (auto& x : a3) x *= 3.0;
  for (auto& x : b3) x *= 3.0;
  const auto r = wilcoxon_signed_rank(a, b);
  const auto s = wilcoxon_signed_rank(a3, b3);
  CHECK(r.statistic == s.statistic);
  CHECK(r.p_value == s.p_value);
  const auto swapped = wilcoxon_signed_rank(b, a);
  CHECK(swapped.p_value == r.p_value);
  CHECK(swapped.w_plus == r.w_minus);
}

TEST_CASE("wilcoxon normal approximation above the exact limit") {
  // n = 25 differences 1..25 with alternating signs, checked against the
  // tie-free normal formula with continuity correction.
  std::vector<double> d;
  for (int k = 1; k <= 25; ++k) d.push_back(k % 3 == 0 ? -k : k);
  const std::vector<double> zero(d.size(), 0.0);
  const auto r = wilcoxon_signed_rank(d, zero);
  CHECK_FALSE(r.exact);
  double minus = 0.0;
  for (const double x : d) {
    if (x < 0) minus += -x;
  }
  CHECK(r.statistic == minus);
  const double mean = 25.0 * 26.0 / 4.0;
  const double sd = std::sqrt(25.0 * 26.0 * 51.0 / 24.0);
  const double z = (minus - mean + 0.5) / sd;
  CHECK(r.p_value == doctest::Approx(std::erfc(-z / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("wilcoxon errors") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, a), Error);
  const std::vector<double> b{1, 2, 3, 4, 5.5, 6.5};
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), Error);  // two nonzero differences
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, std::vector<double>{1, 2}), Error);
}

}  // namespace
}  // namespace erbm
