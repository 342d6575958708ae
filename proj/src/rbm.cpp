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
#include "erbm/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace erbm {

namespace {

std::string dims(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void require_length(const char* what, Index actual, Index expected) {
  if (actual != expected) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(what) + ": expected length " +
                    std::to_string(expected) + ", got " +
                    std::to_string(actual));
  }
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
void apply_sigmoid(RowMatrix<T>& m) {
  m = (T(1) + (-m.array()).exp()).inverse().matrix();
}

template <typename T>
void apply_sigmoid(Vector<T>& m) {
  m = (T(1) + (-m.array()).exp()).inverse().matrix();
}

// -F(v) = a.v + sum_j softplus(b_j + (W^T v)_j), computed in double.
template <typename T>
double negative_free_energy(const RbmParams<T>& params,
                            const Vector<double>& v) {
  const Vector<double> pre = params.weights.template cast<double>().transpose() * v +
                             params.hidden_bias.template cast<double>();
  double total = params.visible_bias.template cast<double>().dot(v);
  for (Index j = 0; j < pre.size(); ++j) total += softplus(pre[j]);
  return total;
}

void check_enumerable(Index m, Index n) {
  if (m + n > kMaxEnumeratedUnits) {
    throw Error(ErrorKind::kSizeGuard,
                "enumeration limited to m + n <= " +
                    std::to_string(kMaxEnumeratedUnits) + ", got " +
                    std::to_string(m + n));
  }
}

void check_masks(const CdMasks& masks, Index batch_rows, Index m, Index n) {
  if (masks.hidden != nullptr) require_length("hidden mask", masks.hidden->size(), n);
  const auto count = static_cast<Index>(masks.weights.size());
  if (count != 0 && count != 1 && count != batch_rows) {
    throw Error(ErrorKind::kDimensionMismatch,
                "weight masks: expected 0, 1 or " + std::to_string(batch_rows) +
                    " masks, got " + std::to_string(count));
  }
  for (const auto& mask : masks.weights) {
    if (mask.rows() != m || mask.cols() != n) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "weight mask: expected " + dims(m, n) + ", got " +
                      dims(mask.rows(), mask.cols()));
    }
  }
}

// DropConnect path: each row sees its own masked weight matrix, so the chain
// is run example by example.
template <typename T>
CdResult<T> cd_step_masked_weights(const RbmParams<T>& params,
                                   const RowMatrix<T>& batch, int cd_steps,
                                   const CdMasks& masks, RandomStream& rng) {
  const Index rows = batch.rows();
  const Index m = params.visible_count();
  const Index n = params.hidden_count();
  const bool shared = masks.weights.size() == 1;

  Vector<T> keep = Vector<T>::Ones(n);
  if (masks.hidden != nullptr) keep = masks.hidden->as_vector<T>();

  CdResult<T> result;
  result.delta = UpdateDelta<T>::zeros(m, n);
  auto& chain = result.chain;
  chain.v0 = batch;
  chain.h0_prob.resize(rows, n);
  chain.h0_sample.resize(rows, n);
  chain.vk.resize(rows, m);
  chain.vk_prob.resize(rows, m);
  chain.hk_prob.resize(rows, n);

  Matrix<T> mask(m, n);
  Matrix<T> masked(m, n);
  Vector<T> v(m), v_prob(m), v_sample(m);
  Vector<T> h_prob(n), h_sample(n), hk_prob(n);

  auto hidden = [&](const Vector<T>& visible, Vector<T>& out) {
    out.noalias() = masked.transpose() * visible;
    out += params.hidden_bias;
    apply_sigmoid(out);
    out.array() *= keep.array();
  };

  for (Index r = 0; r < rows; ++r) {
    if (!shared || r == 0) {
      masks.weights[shared ? 0 : static_cast<size_t>(r)].expand_into(mask);
      masked = params.weights.cwiseProduct(mask);
    }
    v = batch.row(r).transpose();
    hidden(v, h_prob);
    h_sample = sample_binary(h_prob, rng);
    if (cd_steps == 0) {
      v_sample = v;
      v_prob = v;
      hk_prob = h_prob;
    } else {
      Vector<T> h = h_sample;
      for (int step = 0; step < cd_steps; ++step) {
        v_prob.noalias() = masked * h;
        v_prob += params.visible_bias;
        apply_sigmoid(v_prob);
        v_sample = sample_binary(v_prob, rng);
        hidden(v_sample, hk_prob);
        if (step + 1 < cd_steps) h = sample_binary(hk_prob, rng);
      }
    }
    for (Index j = 0; j < n; ++j) {
      result.delta.d_weights.col(j).array() +=
          mask.col(j).array() *
          (v.array() * h_prob[j] - v_sample.array() * hk_prob[j]);
    }
    result.delta.d_visible_bias += v - v_sample;
    result.delta.d_hidden_bias += h_prob - hk_prob;

    chain.h0_prob.row(r) = h_prob.transpose();
    chain.h0_sample.row(r) = h_sample.transpose();
    chain.vk.row(r) = v_sample.transpose();
    chain.vk_prob.row(r) = v_prob.transpose();
    chain.hk_prob.row(r) = hk_prob.transpose();
  }

  const T scale = T(1) / static_cast<T>(rows);
  result.delta.d_weights *= scale;
  result.delta.d_visible_bias *= scale;
  result.delta.d_hidden_bias *= scale;
  result.batch_mse = (chain.v0 - chain.vk_prob).rowwise().squaredNorm().mean();
  return result;
}

}  // namespace

template <std::floating_point T>
void RbmParams<T>::check_consistent() const {
  require_length("visible bias", visible_bias.size(), weights.rows());
  require_length("hidden bias", hidden_bias.size(), weights.cols());
}

template <std::floating_point T>
bool RbmParams<T>::all_finite() const {
  return weights.allFinite() && visible_bias.allFinite() &&
         hidden_bias.allFinite();
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::kInvalidArgument, "learning rate must be positive");
  }
  if (epochs < 0) throw Error(ErrorKind::kInvalidArgument, "epochs must be >= 0");
  if (batch_size < 1) {
    throw Error(ErrorKind::kInvalidArgument, "batch size must be >= 1");
  }
  if (cd_steps < 1) throw Error(ErrorKind::kInvalidArgument, "cd steps must be >= 1");
}

template <std::floating_point T>
T energy(const RbmParams<T>& params, const Vector<T>& v, const Vector<T>& h) {
  params.check_consistent();
  require_length("energy: v", v.size(), params.visible_count());
  require_length("energy: h", h.size(), params.hidden_count());
  return -params.visible_bias.dot(v) - params.hidden_bias.dot(h) -
         v.dot(params.weights * h);
}

template <std::floating_point T>
Vector<T> energy(const RbmParams<T>& params, const RowMatrix<T>& v,
                 const RowMatrix<T>& h) {
  params.check_consistent();
  require_length("energy: v columns", v.cols(), params.visible_count());
  require_length("energy: h columns", h.cols(), params.hidden_count());
  require_length("energy: h rows", h.rows(), v.rows());
  const RowMatrix<T> vw = v * params.weights;
  return -(v * params.visible_bias) - (h * params.hidden_bias) -
         vw.cwiseProduct(h).rowwise().sum();
}

template <std::floating_point T>
Vector<T> hidden_probabilities(const RbmParams<T>& params, const Vector<T>& v) {
  params.check_consistent();
  require_length("hidden_probabilities: v", v.size(), params.visible_count());
  Vector<T> out = params.weights.transpose() * v + params.hidden_bias;
  apply_sigmoid(out);
  return out;
}

template <std::floating_point T>
RowMatrix<T> hidden_probabilities(const RbmParams<T>& params,
                                  const RowMatrix<T>& v) {
  params.check_consistent();
  require_length("hidden_probabilities: columns", v.cols(),
                 params.visible_count());
  RowMatrix<T> out(v.rows(), params.hidden_count());
  out.noalias() = v * params.weights;
  out.rowwise() += params.hidden_bias.transpose();
  apply_sigmoid(out);
  return out;
}

template <std::floating_point T>
Vector<T> visible_probabilities(const RbmParams<T>& params, const Vector<T>& h) {
  params.check_consistent();
  require_length("visible_probabilities: h", h.size(), params.hidden_count());
  Vector<T> out = params.weights * h + params.visible_bias;
  apply_sigmoid(out);
  return out;
}

template <std::floating_point T>
RowMatrix<T> visible_probabilities(const RbmParams<T>& params,
                                   const RowMatrix<T>& h) {
  params.check_consistent();
  require_length("visible_probabilities: columns", h.cols(),
                 params.hidden_count());
  RowMatrix<T> out(h.rows(), params.visible_count());
  out.noalias() = h * params.weights.transpose();
  out.rowwise() += params.visible_bias.transpose();
  apply_sigmoid(out);
  return out;
}

template <std::floating_point T>
CdResult<T> cd_step(const RbmParams<T>& params, const RowMatrix<T>& batch,
                    int cd_steps, const CdMasks& masks, RandomStream& rng) {
  params.check_consistent();
  const Index rows = batch.rows();
  const Index m = params.visible_count();
  const Index n = params.hidden_count();
  if (rows == 0) throw Error(ErrorKind::kInvalidArgument, "cd_step: empty batch");
  require_length("cd_step: batch columns", batch.cols(), m);
  if (cd_steps < 0) {
    throw Error(ErrorKind::kInvalidArgument, "cd_step: negative step count");
  }
  check_masks(masks, rows, m, n);
  if (!masks.weights.empty()) {
    return cd_step_masked_weights(params, batch, cd_steps, masks, rng);
  }

  Vector<T> keep;
  if (masks.hidden != nullptr) keep = masks.hidden->as_vector<T>();
  auto hidden = [&](const RowMatrix<T>& v) {
    RowMatrix<T> p = hidden_probabilities(params, v);
    if (masks.hidden != nullptr) p.array().rowwise() *= keep.transpose().array();
    return p;
  };

  CdResult<T> result;
  auto& chain = result.chain;
  chain.v0 = batch;
  chain.h0_prob = hidden(batch);
  chain.h0_sample = sample_binary(chain.h0_prob, rng);
  if (cd_steps == 0) {
    chain.vk = batch;
    chain.vk_prob = batch;
    chain.hk_prob = chain.h0_prob;
  } else {
    RowMatrix<T> h = chain.h0_sample;
    for (int step = 0; step < cd_steps; ++step) {
      chain.vk_prob = visible_probabilities(params, h);
      chain.vk = sample_binary(chain.vk_prob, rng);
      chain.hk_prob = hidden(chain.vk);
      if (step + 1 < cd_steps) h = sample_binary(chain.hk_prob, rng);
    }
  }

  const T scale = T(1) / static_cast<T>(rows);
  auto& delta = result.delta;
  delta.d_weights.noalias() = chain.v0.transpose() * chain.h0_prob;
  delta.d_weights.noalias() -= chain.vk.transpose() * chain.hk_prob;
  delta.d_weights *= scale;
  delta.d_visible_bias = (chain.v0 - chain.vk).colwise().sum().transpose() * scale;
  delta.d_hidden_bias =
      (chain.h0_prob - chain.hk_prob).colwise().sum().transpose() * scale;
  result.batch_mse = (chain.v0 - chain.vk_prob).rowwise().squaredNorm().mean();
  return result;
}

template <std::floating_point T>
RbmParams<T> apply_update(const RbmParams<T>& params,
                          const UpdateDelta<T>& delta, double learning_rate,
                          double l2_coeff) {
  params.check_consistent();
  if (delta.d_weights.rows() != params.weights.rows() ||
      delta.d_weights.cols() != params.weights.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "apply_update: delta is " +
                    dims(delta.d_weights.rows(), delta.d_weights.cols()) +
                    ", params are " +
                    dims(params.weights.rows(), params.weights.cols()));
  }
  require_length("apply_update: visible delta", delta.d_visible_bias.size(),
                 params.visible_count());
  require_length("apply_update: hidden delta", delta.d_hidden_bias.size(),
                 params.hidden_count());

  const T eta = static_cast<T>(learning_rate);
  RbmParams<T> out = params;
  if (l2_coeff != 0.0) {
    out.weights += eta * (delta.d_weights - static_cast<T>(l2_coeff) * params.weights);
  } else {
    out.weights += eta * delta.d_weights;
  }
  out.visible_bias += eta * delta.d_visible_bias;
  out.hidden_bias += eta * delta.d_hidden_bias;
  if (!out.all_finite()) {
    throw Error(ErrorKind::kNonFinite, "apply_update produced NaN or Inf");
  }
  return out;
}

template <std::floating_point T>
double log_partition(const RbmParams<T>& params) {
  params.check_consistent();
  const Index m = params.visible_count();
  check_enumerable(m, params.hidden_count());
  const std::uint64_t states = std::uint64_t{1} << m;
  std::vector<double> terms(states);
  Vector<double> v(m);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < states; ++s) {
    for (Index i = 0; i < m; ++i) v[i] = static_cast<double>((s >> i) & 1u);
    terms[s] = negative_free_energy(params, v);
    peak = std::max(peak, terms[s]);
  }
  double sum = 0.0;
  for (const double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

template <std::floating_point T>
double exact_partition(const RbmParams<T>& params) {
  return std::exp(log_partition(params));
}

template <std::floating_point T>
double marginal_log_likelihood(const RbmParams<T>& params,
                               const RowMatrix<T>& data) {
  const double log_z = log_partition(params);
  require_length("marginal_log_likelihood: columns", data.cols(),
                 params.visible_count());
  double total = 0.0;
  for (Index r = 0; r < data.rows(); ++r) {
    const Vector<double> v = data.row(r).transpose().template cast<double>();
    for (Index i = 0; i < v.size(); ++i) {
      if (v[i] != 0.0 && v[i] != 1.0) {
        throw Error(ErrorKind::kInvalidArgument,
                    "marginal_log_likelihood: data must be binary");
      }
    }
    total += negative_free_energy(params, v) - log_z;
  }
  return total;
}

template <std::floating_point T>
RbmParams<T> init_params(Index visible, Index hidden, std::uint64_t seed) {
  if (visible < 1 || hidden < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "init_params: layer sizes must be positive");
  }
  RandomStream rng(seed);
  RbmParams<T> params{Matrix<T>(visible, hidden), Vector<T>::Zero(visible),
                      Vector<T>::Zero(hidden)};
  T* w = params.weights.data();
  for (Index k = 0; k < params.weights.size(); ++k) {
    w[k] = static_cast<T>(0.01 * rng.normal());
  }
  return params;
}

#define ERBM_INSTANTIATE(T)                                                    \
  template struct RbmParams<T>;                                                \
  template T energy(const RbmParams<T>&, const Vector<T>&, const Vector<T>&);  \
  template Vector<T> energy(const RbmParams<T>&, const RowMatrix<T>&,          \
                            const RowMatrix<T>&);                              \
  template Vector<T> hidden_probabilities(const RbmParams<T>&,                 \
                                          const Vector<T>&);                   \
  template RowMatrix<T> hidden_probabilities(const RbmParams<T>&,              \
                                             const RowMatrix<T>&);             \
  template Vector<T> visible_probabilities(const RbmParams<T>&,                \
                                           const Vector<T>&);                  \
  template RowMatrix<T> visible_probabilities(const RbmParams<T>&,             \
                                              const RowMatrix<T>&);            \
  template CdResult<T> cd_step(const RbmParams<T>&, const RowMatrix<T>&, int,  \
                               const CdMasks&, RandomStream&);                 \
  template RbmParams<T> apply_update(const RbmParams<T>&,                      \
                                     const UpdateDelta<T>&, double, double);   \
  template double log_partition(const RbmParams<T>&);                          \
  template double exact_partition(const RbmParams<T>&);                        \
  template double marginal_log_likelihood(const RbmParams<T>&,                 \
                                          const RowMatrix<T>&);                \
  template RbmParams<T> init_params<T>(Index, Index, std::uint64_t);

ERBM_INSTANTIATE(float)
ERBM_INSTANTIATE(double)

#undef ERBM_INSTANTIATE

}  // namespace erbm
