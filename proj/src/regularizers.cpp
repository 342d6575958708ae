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
#include "erbm/regularizers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "erbm/error.hpp"

namespace erbm {

namespace {

void check_probability(const char* what, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(what) + ": probability " + std::to_string(p) +
                    " outside [0, 1]");
  }
}

// Fills \p words with independent bits that are 1 with probability
// keep_fixed / 2^32.
void fill_bernoulli_words(std::uint64_t* words, Index count,
                          std::uint64_t keep_fixed, RandomStream& rng) {
  if (keep_fixed == 0) {
    std::fill(words, words + count, 0);
    return;
  }
  if (keep_fixed >= (std::uint64_t{1} << 32)) {
    std::fill(words, words + count, ~std::uint64_t{0});
    return;
  }
  const int lowest = std::countr_zero(keep_fixed);
  for (Index w = 0; w < count; ++w) {
    std::uint64_t acc = 0;
    for (int bit = lowest; bit < 32; ++bit) {
      const std::uint64_t r = rng.bits();
      acc = ((keep_fixed >> bit) & 1u) ? (acc | r) : (acc & r);
    }
    words[w] = acc;
  }
}

}  // namespace

RegularizerKind RegularizerKind::parse(std::string_view name, double p, double l2) {
  RegularizerKind kind;
  if (name == "none") {
    kind = none();
  } else if (name == "l2") {
    kind = weight_decay(l2);
  } else if (name == "dropout") {
    kind = dropout(p);
  } else if (name == "dropconnect") {
    kind = drop_connect(p);
  } else if (name == "edropout") {
    kind = edropout();
  } else {
    throw Error(ErrorKind::kInvalidArgument,
                "unknown regularizer '" + std::string(name) + "'");
  }
  kind.validate();
  return kind;
}

std::string_view RegularizerKind::name() const {
  switch (type) {
    case RegularizerType::kNone: return "none";
    case RegularizerType::kWeightDecay: return "l2";
    case RegularizerType::kDropout: return "dropout";
    case RegularizerType::kDropConnect: return "dropconnect";
    case RegularizerType::kEDropout: return "edropout";
  }
  return "unknown";
}

void RegularizerKind::validate() const {
  check_probability("regularizer", drop_probability);
  if (!(l2_coeff >= 0.0) || !std::isfinite(l2_coeff)) {
    throw Error(ErrorKind::kInvalidArgument, "l2 coefficient must be >= 0");
  }
}

HiddenMask bernoulli_mask(Index n, double p, RandomStream& rng) {
  check_probability("bernoulli_mask", p);
  HiddenMask mask;
  mask.bits.resize(static_cast<size_t>(n));
  for (auto& bit : mask.bits) bit = rng.uniform() < p ? 0 : 1;
  return mask;
}

WeightMask dropconnect_mask(Index m, Index n, double p, RandomStream& rng) {
  check_probability("dropconnect_mask", p);
  WeightMask mask(m, n);
  const double keep = 1.0 - p;
  const auto keep_fixed =
      static_cast<std::uint64_t>(std::floor(std::ldexp(keep, 32)));
  fill_bernoulli_words(mask.column_words(0), mask.words_per_column() * n,
                       keep_fixed, rng);
  mask.clear_padding();
  return mask;
}

Vector<double> importance_level(const Vector<double>& p_trained,
                                const Vector<double>& p_initial,
                                double delta_energy) {
  if (p_trained.size() != p_initial.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "importance_level: P_tr has " + std::to_string(p_trained.size()) +
                    " entries, P_i has " + std::to_string(p_initial.size()));
  }
  if ((p_initial.array() < 0.0).any() || (p_trained.array() < 0.0).any()) {
    throw Error(ErrorKind::kInvalidArgument,
                "importance_level: probabilities must be >= 0");
  }
  const double energy = std::max(std::abs(delta_energy), kImportanceEpsilon);
  return (p_trained.array() / p_initial.array().max(kImportanceEpsilon) / energy)
      .matrix();
}

Vector<double> rescale_importance(const Vector<double>& raw) {
  if (raw.size() == 0) return raw;
  if ((raw.array() < 0.0).any() || !raw.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument,
                "rescale_importance: entries must be finite and >= 0");
  }
  const double peak = raw.maxCoeff();
  if (peak <= 0.0) return Vector<double>::Zero(raw.size());
  Vector<double> out = raw / peak;
  // The argmax divides to exactly 1; clamp guards the others against rounding.
  return out.cwiseMin(1.0);
}

HiddenMask edropout_mask(const Vector<double>& importance, RandomStream& rng) {
  HiddenMask mask;
  mask.bits.resize(static_cast<size_t>(importance.size()));
  for (Index j = 0; j < importance.size(); ++j) {
    check_probability("edropout_mask", importance[j]);
    mask.bits[static_cast<size_t>(j)] = importance[j] < rng.uniform() ? 1 : 0;
  }
  return mask;
}

ImportanceState ImportanceState::initial(Index n) {
  return ImportanceState{Vector<double>::Ones(n), Vector<double>::Ones(n), 0.0,
                         Vector<double>::Zero(n)};
}

template <std::floating_point T>
ImportanceState edropout_update_state(const RbmParams<T>& params_pre,
                                      const RbmParams<T>& params_post,
                                      const RowMatrix<T>& batch,
                                      const RowMatrix<T>& h_sampled) {
  if (batch.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "edropout_update_state: empty batch");
  }
  if (params_pre.visible_count() != params_post.visible_count() ||
      params_pre.hidden_count() != params_post.hidden_count()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "edropout_update_state: parameter shapes differ");
  }
  ImportanceState state;
  state.p_initial = hidden_probabilities(params_pre, batch)
                        .template cast<double>()
                        .colwise()
                        .mean()
                        .transpose();
  state.p_trained = hidden_probabilities(params_post, batch)
                        .template cast<double>()
                        .colwise()
                        .mean()
                        .transpose();
  const double energy_pre =
      energy(params_pre, batch, h_sampled).template cast<double>().mean();
  const double energy_post =
      energy(params_post, batch, h_sampled).template cast<double>().mean();
  state.delta_energy = std::abs(energy_post - energy_pre);
  state.importance = rescale_importance(
      importance_level(state.p_trained, state.p_initial, state.delta_energy));
  return state;
}

template <std::floating_point T>
RbmParams<T> rescale_weights_for_inference(const RbmParams<T>& params,
                                           const RegularizerKind& kind) {
  switch (kind.type) {
    case RegularizerType::kDropout:
    case RegularizerType::kDropConnect: {
      RbmParams<T> out = params;
      out.weights *= static_cast<T>(1.0 - kind.drop_probability);
      return out;
    }
    default:
      return params;
  }
}

template <std::floating_point T>
Regularizer<T>::Regularizer(RegularizerKind kind, Index visible, Index hidden,
                            RandomStream rng)
    : kind_(kind),
      visible_(visible),
      hidden_(hidden),
      rng_(std::move(rng)),
      importance_(ImportanceState::initial(hidden)) {
  kind_.validate();
}

template <std::floating_point T>
double Regularizer<T>::l2_coeff() const {
  return kind_.type == RegularizerType::kWeightDecay ? kind_.l2_coeff : 0.0;
}

template <std::floating_point T>
CdMasks Regularizer<T>::next_masks(Index rows) {
  last_dropped_ = 0;
  switch (kind_.type) {
    case RegularizerType::kDropout:
      hidden_mask_ = bernoulli_mask(hidden_, kind_.drop_probability, rng_);
      last_dropped_ = static_cast<std::uint64_t>(hidden_mask_.dropped());
      return CdMasks{&hidden_mask_, {}};
    case RegularizerType::kEDropout:
      hidden_mask_ = edropout_mask(importance_.importance, rng_);
      last_dropped_ = static_cast<std::uint64_t>(hidden_mask_.dropped());
      return CdMasks{&hidden_mask_, {}};
    case RegularizerType::kDropConnect:
      weight_masks_.clear();
      weight_masks_.reserve(static_cast<size_t>(rows));
      for (Index r = 0; r < rows; ++r) {
        weight_masks_.push_back(
            dropconnect_mask(visible_, hidden_, kind_.drop_probability, rng_));
        last_dropped_ += static_cast<std::uint64_t>(weight_masks_.back().dropped());
      }
      return CdMasks{nullptr, weight_masks_};
    default:
      return CdMasks{};
  }
}

template <std::floating_point T>
void Regularizer<T>::observe(const RbmParams<T>& params_pre,
                             const RbmParams<T>& params_post,
                             const CdResult<T>& step) {
  if (kind_.type != RegularizerType::kEDropout) return;
  importance_ = edropout_update_state(params_pre, params_post, step.chain.v0,
                                      step.chain.h0_sample);
}

#define ERBM_INSTANTIATE(T)                                                   \
  template ImportanceState edropout_update_state(                             \
      const RbmParams<T>&, const RbmParams<T>&, const RowMatrix<T>&,          \
      const RowMatrix<T>&);                                                   \
  template RbmParams<T> rescale_weights_for_inference(const RbmParams<T>&,    \
                                                      const RegularizerKind&); \
  template class Regularizer<T>;

ERBM_INSTANTIATE(float)
ERBM_INSTANTIATE(double)

#undef ERBM_INSTANTIATE

}  // namespace erbm
