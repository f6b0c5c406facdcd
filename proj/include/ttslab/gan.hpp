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

// Transformer generator and discriminator for (B, C, 1, W) signal batches,
// unconditional or conditioned on a class label.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttslab/autodiff.hpp"
#include "ttslab/nn.hpp"

namespace ttslab::gan {

/// Where the label embedding enters the networks.
enum class EmbedStrategy {
  /// Appended to the latent vector and to every discriminator patch vector.
  ConcatBoth,
  /// Added to the latent vector and to every discriminator patch vector.
  AddBoth,
  /// Projected to an extra feature channel in both networks.
  ConcatChannel,
  /// Appended to the latent vector only; the discriminator sees just x.
  GeneratorConcatClsHead,
};

std::string to_string(EmbedStrategy s);
EmbedStrategy parse_strategy(const std::string& name);

struct ModelSpec {
  std::int64_t latent_dim = 100;
  std::int64_t hidden_dim = 20;
  int depth = 3;
  int heads = 5;
  std::int64_t patch_len = 1;
  std::int64_t channels = 1;
  std::int64_t seq_len = 24;
  int num_classes = 0;
  std::int64_t label_embed_dim = 10;
  double dropout = 0.0;
  EmbedStrategy embed_strategy = EmbedStrategy::GeneratorConcatClsHead;

  bool conditional() const { return num_classes > 0; }
  std::int64_t patches() const { return seq_len / patch_len; }
  /// Throws ConfigError on the first violated constraint.
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

/// Generator inputs: z of shape [B, latent_dim] with entries in (0, 1).
struct LatentBatch {
  ad::Tensor z;
  std::optional<std::vector<int>> labels;
  std::int64_t size() const { return z.ndim() == 0 ? 0 : z.dim(0); }
};

LatentBatch sample_latent(std::int64_t batch, const ModelSpec& spec, nn::Rng& rng,
                          std::optional<std::vector<int>> labels = std::nullopt);

enum class Path { Generator, Discriminator };
/// Sequence length seen by the encoder blocks.
std::int64_t token_count(const ModelSpec& spec, Path path);

class Generator {
 public:
  Generator(const ModelSpec& spec, std::uint64_t seed);

  /// Returns a [B, C, 1, W] batch.
  ad::Var forward(const LatentBatch& lb, nn::Rng* dropout_rng = nullptr) const;
  /// Label embedding rows, [B, label_embed_dim].
  ad::Var embed_label(const std::vector<int>& labels) const;

  const ModelSpec& spec() const { return spec_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

 private:
  ModelSpec spec_;
  nn::ParameterSet params_;
  ad::Var label_table_, pos_embed_;
  nn::Linear input_, label_channel_, merge_channel_, unpatch_, to_channels_;
  std::vector<nn::EncoderBlock> blocks_;
};

struct DiscriminatorOutput {
  /// [B] raw score; apply a sigmoid for the MSE objective.
  ad::Var adv;
  /// [B, K]; undefined for unconditional models.
  ad::Var class_logits;
};

class Discriminator {
 public:
  Discriminator(const ModelSpec& spec, std::uint64_t seed);

  /// x: [B, C, 1, W]. Labels are required for the strategies that inject
  /// them into the discriminator and ignored otherwise.
  DiscriminatorOutput forward(const ad::Var& x, const std::optional<std::vector<int>>& labels = std::nullopt,
                              nn::Rng* dropout_rng = nullptr) const;
  /// Patch tokens with class token and positions, [B, patches + 1, M].
  ad::Var embed_patches(const ad::Var& x, const std::optional<std::vector<int>>& labels = std::nullopt) const;
  /// Whether forward() consumes labels.
  bool uses_labels() const;

  const ModelSpec& spec() const { return spec_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

 private:
  ModelSpec spec_;
  nn::ParameterSet params_;
  ad::Var label_table_, cls_token_, pos_embed_;
  nn::Linear label_channel_, patch_, adv_head_, cls_head_;
  nn::LayerNorm norm_;
  std::vector<nn::EncoderBlock> blocks_;
};

/// Named tensors plus a JSON header, stored as <stem>.bin and <stem>.json.
struct Checkpoint {
  ModelSpec spec;
  std::int64_t step = 0;
  nlohmann::json extra;
  std::map<std::string, ad::Tensor> tensors;
};

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt);
/// Accepts the stem or either of the two file names.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies `tensors[name]` into each parameter; shapes must match.
void load_parameters(nn::ParameterSet& params, const std::map<std::string, ad::Tensor>& tensors);
void store_parameters(const nn::ParameterSet& params, std::map<std::string, ad::Tensor>& tensors);

}  // namespace ttslab::gan
