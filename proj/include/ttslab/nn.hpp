// Copyright 2026 The ttslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Building blocks shared by the GAN networks and the reference classifier.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ttslab/autodiff.hpp"

namespace ttslab::nn {

/// Seedable generator with a serializable state. Draws are defined in terms
/// of raw 64-bit outputs so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::int64_t index(std::int64_t n);
  double normal();
  /// Normal(0, std) resampled until it lies within two standard deviations.
  double truncated_normal(double std);

  std::string state() const;
  void set_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Rounds every element to the nearest single-precision value. Parameters
/// and optimizer moments are kept on this grid so a float32 checkpoint
/// captures training state exactly.
void round_to_float(ad::Tensor& t);

/// Ordered collection of named trainable tensors.
class ParameterSet {
 public:
  ad::Var& add(const std::string& name, ad::Tensor init);
  const std::vector<std::string>& names() const { return names_; }
  std::vector<ad::Var>& vars() { return vars_; }
  const std::vector<ad::Var>& vars() const { return vars_; }
  ad::Var& at(const std::string& name);
  const ad::Var& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::int64_t count() const;
  void set_requires_grad(bool on);

 private:
  std::vector<std::string> names_;
  std::vector<ad::Var> vars_;
  std::map<std::string, std::size_t> index_;
};

/// Affine map over the last axis: y = x W + b, W of shape [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::int64_t in, std::int64_t out, Rng& rng,
         bool bias = true);
  ad::Var operator()(const ad::Var& x) const;
  std::int64_t in_features() const { return in_; }
  std::int64_t out_features() const { return out_; }

 private:
  ad::Var weight_;
  ad::Var bias_;
  std::int64_t in_ = 0;
  std::int64_t out_ = 0;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& name, std::int64_t dim);
  ad::Var operator()(const ad::Var& x) const;

 private:
  ad::Var gamma_;
  ad::Var beta_;
};

/// Zeroes elements with probability p and rescales the rest; identity when
/// p == 0 or rng is null.
ad::Var dropout(const ad::Var& x, double p, Rng* rng);

/// Pre-norm transformer encoder block:
///   x + Drop(MHSA(LN(x))), then x + Drop(FFN(LN(x))) with a GELU FFN of
///   width 4 * dim.
class EncoderBlock {
 public:
  EncoderBlock() = default;
  EncoderBlock(ParameterSet& params, const std::string& name, std::int64_t dim, int heads, double dropout,
               Rng& rng);
  /// x: [B, T, dim]
  ad::Var operator()(const ad::Var& x, Rng* dropout_rng) const;

 private:
  ad::Var attention(const ad::Var& x) const;

  std::int64_t dim_ = 0;
  int heads_ = 1;
  double dropout_ = 0.0;
  LayerNorm norm1_, norm2_;
  Linear qkv_, proj_, fc1_, fc2_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParameterSet& params, AdamConfig cfg);
  void step(const std::vector<ad::Var>& grads);
  std::int64_t steps_taken() const { return t_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  /// Moment tensors keyed "m.<param>" and "v.<param>".
  std::map<std::string, ad::Tensor> state_tensors() const;
  void load_state(const std::map<std::string, ad::Tensor>& tensors, std::int64_t t);

 private:
  ParameterSet* params_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<ad::Tensor> m_, v_;
};

/// Raw tensor blob: repeated records of
///   u32 name_len | name | u32 ndim | u64 dims[ndim] | f32 data[numel]
/// all little-endian.
void write_tensor_blob(const std::filesystem::path& path, const std::vector<std::pair<std::string, ad::Tensor>>& tensors);
std::map<std::string, ad::Tensor> read_tensor_blob(const std::filesystem::path& path);

}  // namespace ttslab::nn
