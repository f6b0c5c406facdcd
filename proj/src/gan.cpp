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

#include "ttslab/gan.hpp"

#include <fstream>

#include "ttslab/errors.hpp"

namespace ttslab::gan {

using ad::Shape;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

std::string to_string(EmbedStrategy s) {
  switch (s) {
    case EmbedStrategy::ConcatBoth:
      return "concat-both";
    case EmbedStrategy::AddBoth:
      return "add-both";
    case EmbedStrategy::ConcatChannel:
      return "concat-channel";
    case EmbedStrategy::GeneratorConcatClsHead:
      return "generator-concat-plus-cls-head";
  }
  return "unknown";
}

EmbedStrategy parse_strategy(const std::string& name) {
  for (auto s : {EmbedStrategy::ConcatBoth, EmbedStrategy::AddBoth, EmbedStrategy::ConcatChannel,
                 EmbedStrategy::GeneratorConcatClsHead}) {
    if (to_string(s) == name) return s;
  }
  if (name == "1") return EmbedStrategy::ConcatBoth;
  if (name == "2") return EmbedStrategy::AddBoth;
  if (name == "3") return EmbedStrategy::ConcatChannel;
  if (name == "4") return EmbedStrategy::GeneratorConcatClsHead;
  throw ConfigError("unknown embed strategy '" + name + "'");
}

void ModelSpec::validate() const {
  auto positive = [](std::int64_t v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive, got " + std::to_string(v));
  };
  positive(latent_dim, "latent_dim");
  positive(hidden_dim, "hidden_dim");
  positive(depth, "depth");
  positive(heads, "heads");
  positive(patch_len, "patch_len");
  positive(channels, "channels");
  positive(seq_len, "seq_len");
  positive(label_embed_dim, "label_embed_dim");
  if (num_classes < 0) throw ConfigError("num_classes must be non-negative");
  if (seq_len % patch_len != 0) {
    throw ConfigError("patch_len " + std::to_string(patch_len) + " does not divide seq_len " + std::to_string(seq_len));
  }
  if (hidden_dim % heads != 0) {
    throw ConfigError("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by heads " + std::to_string(heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (conditional() && embed_strategy == EmbedStrategy::AddBoth) {
    if (label_embed_dim != latent_dim || label_embed_dim != channels * patch_len) {
      throw ConfigError("add-both strategy needs label_embed_dim (" + std::to_string(label_embed_dim) +
                        ") equal to latent_dim (" + std::to_string(latent_dim) + ") and to channels * patch_len (" +
                        std::to_string(channels * patch_len) + ")");
    }
  }
}

json to_json(const ModelSpec& s) {
  return json{{"latent_dim", s.latent_dim},   {"hidden_dim", s.hidden_dim},
              {"depth", s.depth},             {"heads", s.heads},
              {"patch_len", s.patch_len},     {"channels", s.channels},
              {"seq_len", s.seq_len},         {"num_classes", s.num_classes},
              {"label_embed_dim", s.label_embed_dim}, {"dropout", s.dropout},
              {"embed_strategy", to_string(s.embed_strategy)}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec s;
  try {
    s.latent_dim = j.value("latent_dim", s.latent_dim);
    s.hidden_dim = j.value("hidden_dim", s.hidden_dim);
    s.depth = j.value("depth", s.depth);
    s.heads = j.value("heads", s.heads);
    s.patch_len = j.value("patch_len", s.patch_len);
    s.channels = j.value("channels", s.channels);
    s.seq_len = j.value("seq_len", s.seq_len);
    s.num_classes = j.value("num_classes", s.num_classes);
    s.label_embed_dim = j.value("label_embed_dim", s.label_embed_dim);
    s.dropout = j.value("dropout", s.dropout);
    if (j.contains("embed_strategy")) s.embed_strategy = parse_strategy(j.at("embed_strategy").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model spec: ") + e.what());
  }
  return s;
}

LatentBatch sample_latent(std::int64_t batch, const ModelSpec& spec, nn::Rng& rng, std::optional<std::vector<int>> labels) {
  if (batch < 0) throw UsageError("sample_latent: negative batch size");
  LatentBatch lb;
  lb.z = Tensor({batch, spec.latent_dim});
  for (double& v : lb.z.data()) v = rng.uniform();
  if (spec.conditional() && !labels) {
    labels = std::vector<int>(static_cast<std::size_t>(batch));
    for (int& l : *labels) l = static_cast<int>(rng.index(spec.num_classes));
  }
  if (labels && static_cast<std::int64_t>(labels->size()) != batch) throw UsageError("sample_latent: label count mismatch");
  lb.labels = std::move(labels);
  return lb;
}

std::int64_t token_count(const ModelSpec& spec, Path path) {
  spec.validate();
  return spec.patches() + (path == Path::Discriminator ? 1 : 0);
}

namespace {

void check_labels(const std::vector<int>& labels, int k) {
  for (int l : labels) {
    if (l < 0 || l >= k) {
      throw UsageError("label " + std::to_string(l) + " out of range for " + std::to_string(k) + " classes");
    }
  }
}

Var lookup_rows(const Var& table, const std::vector<int>& labels) {
  const std::int64_t e = table.dim(1);
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(labels.size() * static_cast<std::size_t>(e));
  for (int l : labels)
    for (std::int64_t i = 0; i < e; ++i) idx->push_back(l * e + i);
  return ad::gather(table, idx, {static_cast<std::int64_t>(labels.size()), e});
}

// [B, E] -> [B, T, E] by repetition along a new middle axis.
Var repeat_tokens(const Var& v, std::int64_t t) {
  const std::int64_t b = v.dim(0), e = v.dim(1);
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(static_cast<std::size_t>(b * t * e));
  for (std::int64_t i = 0; i < b; ++i)
    for (std::int64_t k = 0; k < t; ++k)
      for (std::int64_t j = 0; j < e; ++j) idx->push_back(i * e + j);
  return ad::gather(v, idx, {b, t, e});
}

// Adds a [T, M] table to every batch entry of a [B, T, M] tensor.
Var add_positions(const Var& x, const Var& pos) {
  const std::int64_t b = x.dim(0), t = x.dim(1), m = x.dim(2);
  Var flat = ad::expand_rows(ad::reshape(pos, {t * m}), {b, t * m});
  return x + ad::reshape(flat, {b, t, m});
}

Tensor normal_tensor(Shape shape, nn::Rng& rng, double std) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = std * rng.normal();
  return t;
}

Tensor truncated_tensor(Shape shape, nn::Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.truncated_normal(0.02);
  return t;
}

bool d_uses_labels(const ModelSpec& s) {
  return s.conditional() && s.embed_strategy != EmbedStrategy::GeneratorConcatClsHead;
}

}  // namespace

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  nn::Rng rng(seed);
  const auto t = spec_.patches();
  const auto m = spec_.hidden_dim;
  std::int64_t in = spec_.latent_dim;
  if (spec_.conditional()) {
    label_table_ = params_.add("g.label_embed", normal_tensor({spec_.num_classes, spec_.label_embed_dim}, rng, 1.0));
    if (spec_.embed_strategy == EmbedStrategy::ConcatBoth || spec_.embed_strategy == EmbedStrategy::GeneratorConcatClsHead) {
      in += spec_.label_embed_dim;
    }
  }
  input_ = nn::Linear(params_, "g.input", in, t * m, rng);
  pos_embed_ = params_.add("g.pos_embed", truncated_tensor({t, m}, rng));
  if (spec_.conditional() && spec_.embed_strategy == EmbedStrategy::ConcatChannel) {
    label_channel_ = nn::Linear(params_, "g.label_channel", spec_.label_embed_dim, t, rng);
    merge_channel_ = nn::Linear(params_, "g.merge_channel", m + 1, m, rng);
  }
  for (int i = 0; i < spec_.depth; ++i) {
    blocks_.emplace_back(params_, "g.blocks." + std::to_string(i), m, spec_.heads, spec_.dropout, rng);
  }
  if (spec_.patch_len > 1) unpatch_ = nn::Linear(params_, "g.unpatch", m, m * spec_.patch_len, rng);
  to_channels_ = nn::Linear(params_, "g.to_channels", m, spec_.channels, rng);
}

Var Generator::embed_label(const std::vector<int>& labels) const {
  if (!spec_.conditional()) throw UsageError("embed_label: model is unconditional");
  check_labels(labels, spec_.num_classes);
  return lookup_rows(label_table_, labels);
}

Var Generator::forward(const LatentBatch& lb, nn::Rng* dropout_rng) const {
  if (lb.z.ndim() != 2 || lb.z.dim(1) != spec_.latent_dim) {
    throw UsageError("generator expects z of shape [B, " + std::to_string(spec_.latent_dim) + "], got " +
                     ad::shape_str(lb.z.shape()));
  }
  const std::int64_t b = lb.z.dim(0);
  const auto t = spec_.patches();
  const auto m = spec_.hidden_dim;
  Var z = ad::constant(lb.z);
  Var emb;
  if (spec_.conditional()) {
    if (!lb.labels) throw UsageError("conditional generator requires target labels");
    if (static_cast<std::int64_t>(lb.labels->size()) != b) throw UsageError("generator: label count mismatch");
    emb = embed_label(*lb.labels);
    switch (spec_.embed_strategy) {
      case EmbedStrategy::ConcatBoth:
      case EmbedStrategy::GeneratorConcatClsHead:
        z = ad::concat({z, emb}, 1);
        break;
      case EmbedStrategy::AddBoth:
        z = z + emb;
        break;
      case EmbedStrategy::ConcatChannel:
        break;
    }
  }
  Var h = add_positions(ad::reshape(input_(z), {b, t, m}), pos_embed_);
  if (spec_.conditional() && spec_.embed_strategy == EmbedStrategy::ConcatChannel) {
    Var channel = ad::reshape(label_channel_(emb), {b, t, 1});
    h = merge_channel_(ad::concat({h, channel}, 2));
  }
  for (const auto& block : blocks_) h = block(h, dropout_rng);
  if (spec_.patch_len > 1) h = unpatch_(h);
  h = ad::reshape(h, {b, spec_.seq_len, m});
  Var y = ad::permute(to_channels_(h), {0, 2, 1});
  return ad::reshape(y, {b, spec_.channels, 1, spec_.seq_len});
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator::Discriminator(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  nn::Rng rng(seed);
  const auto m = spec_.hidden_dim;
  std::int64_t in_channels = spec_.channels;
  std::int64_t patch_in = spec_.channels * spec_.patch_len;
  if (d_uses_labels(spec_)) {
    label_table_ = params_.add("d.label_embed", normal_tensor({spec_.num_classes, spec_.label_embed_dim}, rng, 1.0));
    if (spec_.embed_strategy == EmbedStrategy::ConcatChannel) {
      label_channel_ = nn::Linear(params_, "d.label_channel", spec_.label_embed_dim, spec_.seq_len, rng);
      in_channels += 1;
      patch_in = in_channels * spec_.patch_len;
    } else if (spec_.embed_strategy == EmbedStrategy::ConcatBoth) {
      patch_in += spec_.label_embed_dim;
    }
  }
  patch_ = nn::Linear(params_, "d.patch", patch_in, m, rng);
  cls_token_ = params_.add("d.cls_token", truncated_tensor({m}, rng));
  pos_embed_ = params_.add("d.pos_embed", truncated_tensor({spec_.patches() + 1, m}, rng));
  for (int i = 0; i < spec_.depth; ++i) {
    blocks_.emplace_back(params_, "d.blocks." + std::to_string(i), m, spec_.heads, spec_.dropout, rng);
  }
  norm_ = nn::LayerNorm(params_, "d.norm", m);
  adv_head_ = nn::Linear(params_, "d.adv_head", m, 1, rng);
  if (spec_.conditional()) cls_head_ = nn::Linear(params_, "d.cls_head", m, spec_.num_classes, rng);
}

bool Discriminator::uses_labels() const { return d_uses_labels(spec_); }

Var Discriminator::embed_patches(const Var& x, const std::optional<std::vector<int>>& labels) const {
  const Shape expected{x.shape().empty() ? 0 : x.dim(0), spec_.channels, 1, spec_.seq_len};
  if (x.shape() != expected) {
    throw UsageError("discriminator expects input of shape " + ad::shape_str(expected) + ", got " + ad::shape_str(x.shape()));
  }
  const std::int64_t b = x.dim(0);
  const auto t = spec_.patches();
  const auto p = spec_.patch_len;
  Var emb;
  if (uses_labels()) {
    if (!labels) throw UsageError("discriminator with strategy " + to_string(spec_.embed_strategy) + " requires labels");
    if (static_cast<std::int64_t>(labels->size()) != b) throw UsageError("discriminator: label count mismatch");
    check_labels(*labels, spec_.num_classes);
    emb = lookup_rows(label_table_, *labels);
  }
  Var input = x;
  std::int64_t channels = spec_.channels;
  if (uses_labels() && spec_.embed_strategy == EmbedStrategy::ConcatChannel) {
    input = ad::concat({x, ad::reshape(label_channel_(emb), {b, 1, 1, spec_.seq_len})}, 1);
    channels += 1;
  }
  // [B, C, 1, W] -> [B, T, C * p]
  Var patches = ad::reshape(ad::permute(ad::reshape(input, {b, channels, t, p}), {0, 2, 1, 3}), {b, t, channels * p});
  if (uses_labels() && spec_.embed_strategy == EmbedStrategy::ConcatBoth) {
    patches = ad::concat({patches, repeat_tokens(emb, t)}, 2);
  } else if (uses_labels() && spec_.embed_strategy == EmbedStrategy::AddBoth) {
    patches = patches + repeat_tokens(emb, t);
  }
  Var tokens = patch_(patches);
  Var cls = ad::reshape(ad::expand_rows(cls_token_, {b, spec_.hidden_dim}), {b, 1, spec_.hidden_dim});
  return add_positions(ad::concat({cls, tokens}, 1), pos_embed_);
}

DiscriminatorOutput Discriminator::forward(const Var& x, const std::optional<std::vector<int>>& labels,
                                           nn::Rng* dropout_rng) const {
  Var h = embed_patches(x, labels);
  for (const auto& block : blocks_) h = block(h, dropout_rng);
  const std::int64_t b = x.dim(0);
  Var first = ad::reshape(ad::slice(norm_(h), 1, 0, 1), {b, spec_.hidden_dim});
  DiscriminatorOutput out;
  out.adv = ad::reshape(adv_head_(first), {b});
  if (spec_.conditional()) out.class_logits = cls_head_(first);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::filesystem::path checkpoint_stem(std::filesystem::path p) {
  if (p.extension() == ".bin" || p.extension() == ".json") p.replace_extension();
  return p;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  auto p = stem;
  p += suffix;
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto stem = checkpoint_stem(path);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::vector<std::pair<std::string, Tensor>> records(ckpt.tensors.begin(), ckpt.tensors.end());
  nn::write_tensor_blob(with_suffix(stem, ".bin"), records);
  json header{{"spec", to_json(ckpt.spec)}, {"step", ckpt.step}, {"extra", ckpt.extra}};
  std::ofstream os(with_suffix(stem, ".json"));
  os << header.dump(2) << '\n';
  if (!os) throw LoadError("cannot write checkpoint header " + with_suffix(stem, ".json").string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto stem = checkpoint_stem(path);
  const auto header_path = with_suffix(stem, ".json");
  std::ifstream is(header_path);
  if (!is) throw LoadError("missing checkpoint header " + header_path.string());
  Checkpoint c;
  try {
    json header = json::parse(is);
    c.spec = model_spec_from_json(header.at("spec"));
    c.step = header.at("step").get<std::int64_t>();
    c.extra = header.value("extra", json::object());
  } catch (const json::exception& e) {
    throw LoadError("checkpoint header: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw LoadError("checkpoint header: " + std::string(e.what()));
  }
  c.tensors = nn::read_tensor_blob(with_suffix(stem, ".bin"));
  return c;
}

void load_parameters(nn::ParameterSet& params, const std::map<std::string, Tensor>& tensors) {
  for (std::size_t i = 0; i < params.names().size(); ++i) {
    const auto& name = params.names()[i];
    auto it = tensors.find(name);
    if (it == tensors.end()) throw LoadError("checkpoint is missing tensor '" + name + "'");
    auto& var = params.vars()[i];
    if (it->second.shape() != var.shape()) {
      throw LoadError("tensor '" + name + "' has shape " + ad::shape_str(it->second.shape()) + ", expected " +
                      ad::shape_str(var.shape()));
    }
    var.mutable_value() = it->second;
  }
}

void store_parameters(const nn::ParameterSet& params, std::map<std::string, Tensor>& tensors) {
  for (std::size_t i = 0; i < params.names().size(); ++i) tensors[params.names()[i]] = params.vars()[i].value();
}

}  // namespace ttslab::gan
