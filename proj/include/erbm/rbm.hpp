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

#include <concepts>
#include <cstdint>
#include <span>
#include <string>

#include "erbm/error.hpp"
#include "erbm/linalg.hpp"
#include "erbm/masks.hpp"
#include "erbm/random.hpp"

namespace erbm {

/// Bernoulli-Bernoulli RBM parameters: weights (m visible x n hidden), visible
/// bias a (m) and hidden bias b (n).
template <std::floating_point T>
struct RbmParams {
  Matrix<T> weights;
  Vector<T> visible_bias;
  Vector<T> hidden_bias;

  Index visible_count() const { return weights.rows(); }
  Index hidden_count() const { return weights.cols(); }

  /// Throws kDimensionMismatch when the bias lengths disagree with weights.
  void check_consistent() const;
  bool all_finite() const;

  template <std::floating_point U>
  RbmParams<U> cast() const {
    return RbmParams<U>{weights.template cast<U>(),
                        visible_bias.template cast<U>(),
                        hidden_bias.template cast<U>()};
  }
};

template <std::floating_point T>
bool identical(const RbmParams<T>& a, const RbmParams<T>& b) {
  return a.weights.rows() == b.weights.rows() &&
         a.weights.cols() == b.weights.cols() && a.weights == b.weights &&
         a.visible_bias == b.visible_bias && a.hidden_bias == b.hidden_bias;
}

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  int batch_size = 256;
  int cd_steps = 1;
  std::uint64_t seed = 0;

  /// Throws kInvalidArgument on non-positive rate, epochs < 0, batch_size < 1
  /// or cd_steps < 1.
  void validate() const;
};

template <std::floating_point T>
struct UpdateDelta {
  Matrix<T> d_weights;
  Vector<T> d_visible_bias;
  Vector<T> d_hidden_bias;

  static UpdateDelta zeros(Index m, Index n) {
    return UpdateDelta{Matrix<T>::Zero(m, n), Vector<T>::Zero(m),
                       Vector<T>::Zero(n)};
  }
};

/// State of the Gibbs chains of one batch (one chain per row).
template <std::floating_point T>
struct GibbsChainState {
  RowMatrix<T> v0;         // data
  RowMatrix<T> h0_prob;    // P(h | v0), masked
  RowMatrix<T> h0_sample;  // binary draw from h0_prob
  RowMatrix<T> vk;         // binary negative-phase visible sample
  RowMatrix<T> vk_prob;    // real-valued reconstruction P(v | h) of the last step
  RowMatrix<T> hk_prob;    // P(h | vk), masked
};

template <std::floating_point T>
struct CdResult {
  UpdateDelta<T> delta;
  GibbsChainState<T> chain;
  T batch_mse = 0;
};

/// Masks applied during one CD step. Non-owning.
///
/// `weights` holds zero masks (no DropConnect), one mask shared by the whole
/// batch, or one mask per batch row.
struct CdMasks {
  const HiddenMask* hidden = nullptr;
  std::span<const WeightMask> weights;
};

template <std::floating_point T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// E(v, h) = -a.v - b.h - v^T W h.
template <std::floating_point T>
T energy(const RbmParams<T>& params, const Vector<T>& v, const Vector<T>& h);

/// Per-row energies of a batch of (v, h) pairs.
template <std::floating_point T>
Vector<T> energy(const RbmParams<T>& params, const RowMatrix<T>& v,
                 const RowMatrix<T>& h);

/// P(h_j = 1 | v) = sigmoid(sum_i w_ij v_i + b_j).
template <std::floating_point T>
Vector<T> hidden_probabilities(const RbmParams<T>& params, const Vector<T>& v);

template <std::floating_point T>
RowMatrix<T> hidden_probabilities(const RbmParams<T>& params,
                                  const RowMatrix<T>& v);

/// P(v_i = 1 | h) = sigmoid(sum_j w_ij h_j + a_i).
template <std::floating_point T>
Vector<T> visible_probabilities(const RbmParams<T>& params, const Vector<T>& h);

template <std::floating_point T>
RowMatrix<T> visible_probabilities(const RbmParams<T>& params,
                                   const RowMatrix<T>& h);

/// out_i = 1 iff u_i < probs_i, with u_i drawn in storage order.
template <typename Derived>
typename Derived::PlainObject sample_binary(
    const Eigen::DenseBase<Derived>& probs, RandomStream& rng) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject out(probs.rows(), probs.cols());
  const auto& p = probs.derived().eval();
  const Index count = p.size();
  const Scalar* src = p.data();
  Scalar* dst = out.data();
  for (Index k = 0; k < count; ++k) {
    const Scalar prob = src[k];
    if (!(prob >= Scalar(0) && prob <= Scalar(1))) {
      throw Error(ErrorKind::kInvalidArgument,
                  "sample_binary: probability " + std::to_string(prob) +
                      " outside [0, 1]");
    }
    dst[k] = static_cast<Scalar>(rng.uniform()) < prob ? Scalar(1) : Scalar(0);
  }
  return out;
}

/// One Contrastive Divergence step on a batch.
///
/// The positive phase uses v P(h|v); the negative phase runs \p cd_steps
/// Gibbs steps with binary samples and uses v~ P(h~|v~). Hidden units masked
/// out have probability 0 in every phase. Weights masked by DropConnect read
/// as zero while sampling and get zero gradient. All deltas are batch means.
/// cd_steps == 0 is accepted as a test hook meaning v~ = v.
template <std::floating_point T>
CdResult<T> cd_step(const RbmParams<T>& params, const RowMatrix<T>& batch,
                    int cd_steps, const CdMasks& masks, RandomStream& rng);

/// W += eta (dW - l2 W), a += eta da, b += eta db. Throws kNonFinite if the
/// result contains NaN or Inf.
template <std::floating_point T>
RbmParams<T> apply_update(const RbmParams<T>& params,
                          const UpdateDelta<T>& delta, double learning_rate,
                          double l2_coeff);

/// Largest m + n accepted by the enumeration routines below.
inline constexpr Index kMaxEnumeratedUnits = 20;

/// log Z, summing the hidden layer out analytically over all 2^m visible
/// states.
template <std::floating_point T>
double log_partition(const RbmParams<T>& params);

/// Z = sum over all (v, h) of exp(-E(v, h)).
template <std::floating_point T>
double exact_partition(const RbmParams<T>& params);

/// sum over rows v of log P(v). Rows must be binary.
template <std::floating_point T>
double marginal_log_likelihood(const RbmParams<T>& params,
                               const RowMatrix<T>& data);

/// Gaussian(0, 0.01) weights, zero biases.
template <std::floating_point T>
RbmParams<T> init_params(Index visible, Index hidden, std::uint64_t seed);

}  // namespace erbm
