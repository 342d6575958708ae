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
#include <string>
#include <string_view>
#include <vector>

#include "erbm/linalg.hpp"
#include "erbm/masks.hpp"
#include "erbm/random.hpp"
#include "erbm/rbm.hpp"

namespace erbm {

enum class RegularizerType { kNone, kWeightDecay, kDropout, kDropConnect, kEDropout };

/// Which regularizer a model is trained with, plus its single parameter.
/// `drop_probability` is the probability that a unit (or connection) is
/// removed, so the keep probability is 1 - p.
struct RegularizerKind {
  RegularizerType type = RegularizerType::kNone;
  double l2_coeff = 0.0;
  double drop_probability = 0.0;

  static RegularizerKind none() { return {}; }
  static RegularizerKind weight_decay(double l2) {
    return {RegularizerType::kWeightDecay, l2, 0.0};
  }
  static RegularizerKind dropout(double p) {
    return {RegularizerType::kDropout, 0.0, p};
  }
  static RegularizerKind drop_connect(double p) {
    return {RegularizerType::kDropConnect, 0.0, p};
  }
  static RegularizerKind edropout() { return {RegularizerType::kEDropout, 0.0, 0.0}; }

  /// Parses none | l2 | dropout | dropconnect | edropout.
  static RegularizerKind parse(std::string_view name, double p, double l2);

  /// CLI / directory name of the regularizer.
  std::string_view name() const;

  void validate() const;
};

/// Each unit is dropped (0) with probability p, kept (1) otherwise.
HiddenMask bernoulli_mask(Index n, double p, RandomStream& rng);

/// Each connection is dropped with probability p. Bits are produced 64 at a
/// time by combining raw random words along the binary expansion of the keep
/// probability (exact for p = 0.5, within 2^-32 otherwise).
WeightMask dropconnect_mask(Index m, Index n, double p, RandomStream& rng);

/// Floor applied to both P_i and |dE| before dividing.
inline constexpr double kImportanceEpsilon = 1e-8;

/// (p_trained / p_initial) / |delta_energy|, elementwise.
Vector<double> importance_level(const Vector<double>& p_trained,
                                const Vector<double>& p_initial,
                                double delta_energy);

/// raw / max(raw); all zeros when max(raw) == 0.
Vector<double> rescale_importance(const Vector<double>& raw);

/// s_j = 1 iff importance_j < u_j with u_j uniform in [0, 1). A unit is kept
/// with probability 1 - importance_j.
HiddenMask edropout_mask(const Vector<double>& importance, RandomStream& rng);

struct ImportanceState {
  Vector<double> p_initial;
  Vector<double> p_trained;
  double delta_energy = 0.0;
  Vector<double> importance;

  /// Before any update has been observed: zero importance, so nothing drops.
  static ImportanceState initial(Index n);
};

/// Importance after one parameter update. P_i and P_tr are batch means of
/// P(h | v) under the parameters before and after the update; dE is the change
/// in batch-mean energy of (v, h_sampled).
template <std::floating_point T>
ImportanceState edropout_update_state(const RbmParams<T>& params_pre,
                                      const RbmParams<T>& params_post,
                                      const RowMatrix<T>& batch,
                                      const RowMatrix<T>& h_sampled);

/// Dropout and DropConnect multiply W by the keep probability 1 - p; all
/// other kinds return the parameters unchanged.
template <std::floating_point T>
RbmParams<T> rescale_weights_for_inference(const RbmParams<T>& params,
                                           const RegularizerKind& kind);

/// Per-training-run mask provider. Produces the masks for every batch and
/// tracks the E-Dropout importance state.
template <std::floating_point T>
class Regularizer {
 public:
  Regularizer(RegularizerKind kind, Index visible, Index hidden, RandomStream rng);

  const RegularizerKind& kind() const { return kind_; }
  double l2_coeff() const;

  /// Draws the masks for the next batch of \p rows examples. The returned
  /// view stays valid until the next call.
  CdMasks next_masks(Index rows);

  /// Units (Dropout, E-Dropout) or connections (DropConnect) removed by the
  /// last next_masks() call, summed over every mask drawn.
  std::uint64_t last_dropped() const { return last_dropped_; }

  /// Feeds one completed update back; only E-Dropout uses it.
  void observe(const RbmParams<T>& params_pre, const RbmParams<T>& params_post,
               const CdResult<T>& step);

  const ImportanceState& importance() const { return importance_; }

 private:
  RegularizerKind kind_;
  Index visible_;
  Index hidden_;
  RandomStream rng_;
  HiddenMask hidden_mask_;
  std::vector<WeightMask> weight_masks_;
  ImportanceState importance_;
  std::uint64_t last_dropped_ = 0;
};

}  // namespace erbm
