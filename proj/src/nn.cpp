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

#include "ttslab/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "ttslab/errors.hpp"

namespace ttslab::nn {

using ad::Shape;
using ad::Tensor;
using ad::Var;

// ---------------------------------------------------------------------------
// Rng

double Rng::uniform() {
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::int64_t Rng::index(std::int64_t n) {
  if (n <= 0) throw UsageError("Rng::index: n must be positive");
  const auto un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % un;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return static_cast<std::int64_t>(r % un);
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::truncated_normal(double std) {
  for (;;) {
    const double v = normal();
    if (std::abs(v) <= 2.0) return v * std;
  }
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw LoadError("invalid rng state string");
}

void round_to_float(Tensor& t) {
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

// ---------------------------------------------------------------------------
// ParameterSet

Var& ParameterSet::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  round_to_float(init);
  index_[name] = vars_.size();
  names_.push_back(name);
  vars_.emplace_back(std::move(init), true);
  return vars_.back();
}

Var& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter: " + name);
  return vars_[it->second];
}

const Var& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter: " + name);
  return vars_[it->second];
}

std::int64_t ParameterSet::count() const {
  std::int64_t n = 0;
  for (const auto& v : vars_) n += v.numel();
  return n;
}

void ParameterSet::set_requires_grad(bool on) {
  for (auto& v : vars_) v.set_requires_grad(on);
}

// ---------------------------------------------------------------------------
// Layers

namespace {

Tensor truncated_normal_tensor(Shape shape, double std, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.truncated_normal(std);
  return t;
}

}  // namespace

Linear::Linear(ParameterSet& params, const std::string& name, std::int64_t in, std::int64_t out, Rng& rng,
               bool bias)
    : in_(in), out_(out) {
  weight_ = params.add(name + ".weight", truncated_normal_tensor({in, out}, 0.02, rng));
  if (bias) bias_ = params.add(name + ".bias", Tensor({out}));
}

Var Linear::operator()(const Var& x) const {
  if (x.dim(-1) != in_) {
    throw UsageError("linear layer expects last dim " + std::to_string(in_) + ", got " + ad::shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape.back() = out_;
  const std::int64_t rows = in_ == 0 ? 0 : x.numel() / in_;
  Var y = ad::matmul(ad::reshape(x, {rows, in_}), weight_);
  if (bias_.defined()) y = y + ad::expand_rows(bias_, y.shape());
  return ad::reshape(y, out_shape);
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, std::int64_t dim) {
  gamma_ = params.add(name + ".weight", Tensor({dim}, 1.0));
  beta_ = params.add(name + ".bias", Tensor({dim}));
}

Var LayerNorm::operator()(const Var& x) const {
  Var n = ad::normalize_last(x, 1e-5);
  return n * ad::expand_rows(gamma_, n.shape()) + ad::expand_rows(beta_, n.shape());
}

Var dropout(const Var& x, double p, Rng* rng) {
  if (p <= 0.0 || rng == nullptr) return x;
  Tensor mask(x.shape());
  const double keep = 1.0 - p;
  for (double& v : mask.data()) v = rng->uniform() < keep ? 1.0 / keep : 0.0;
  return x * ad::constant(std::move(mask));
}

EncoderBlock::EncoderBlock(ParameterSet& params, const std::string& name, std::int64_t dim, int heads,
                           double dropout, Rng& rng)
    : dim_(dim), heads_(heads), dropout_(dropout) {
  if (heads <= 0 || dim % heads != 0) {
    throw ConfigError("hidden dim " + std::to_string(dim) + " is not divisible by heads " + std::to_string(heads));
  }
  norm1_ = LayerNorm(params, name + ".norm1", dim);
  qkv_ = Linear(params, name + ".attn.qkv", dim, 3 * dim, rng);
  proj_ = Linear(params, name + ".attn.proj", dim, dim, rng);
  norm2_ = LayerNorm(params, name + ".norm2", dim);
  fc1_ = Linear(params, name + ".mlp.fc1", dim, 4 * dim, rng);
  fc2_ = Linear(params, name + ".mlp.fc2", 4 * dim, dim, rng);
}

Var EncoderBlock::attention(const Var& x) const {
  const std::int64_t b = x.dim(0), t = x.dim(1);
  const std::int64_t hd = dim_ / heads_;
  Var qkv = ad::reshape(qkv_(x), {b, t, 3, heads_, hd});
  qkv = ad::permute(qkv, {2, 0, 3, 1, 4});  // [3, B, H, T, hd]
  auto part = [&](int i) { return ad::reshape(ad::slice(qkv, 0, i, i + 1), {b * heads_, t, hd}); };
  Var q = part(0), k = part(1), v = part(2);
  Var scores = ad::scale(ad::matmul(q, k, false, true), 1.0 / std::sqrt(static_cast<double>(hd)));
  Var ctx = ad::matmul(ad::softmax_last(scores), v);  // [B*H, T, hd]
  ctx = ad::permute(ad::reshape(ctx, {b, heads_, t, hd}), {0, 2, 1, 3});
  return proj_(ad::reshape(ctx, {b, t, dim_}));
}

Var EncoderBlock::operator()(const Var& x, Rng* dropout_rng) const {
  Var h = x + dropout(attention(norm1_(x)), dropout_, dropout_rng);
  return h + dropout(fc2_(ad::gelu(fc1_(norm2_(h)))), dropout_, dropout_rng);
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(ParameterSet& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {
  for (const auto& v : params.vars()) {
    m_.emplace_back(v.shape());
    v_.emplace_back(v.shape());
  }
}

void Adam::step(const std::vector<Var>& grads) {
  auto& vars = params_->vars();
  if (grads.size() != vars.size()) throw UsageError("Adam::step: gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto p = vars[i].mutable_value().data();
    auto g = grads[i].value().data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    round_to_float(m_[i]);
    round_to_float(v_[i]);
    round_to_float(vars[i].mutable_value());
  }
}

std::map<std::string, Tensor> Adam::state_tensors() const {
  std::map<std::string, Tensor> out;
  const auto& names = params_->names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    out["m." + names[i]] = m_[i];
    out["v." + names[i]] = v_[i];
  }
  return out;
}

void Adam::load_state(const std::map<std::string, Tensor>& tensors, std::int64_t t) {
  const auto& names = params_->names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto m = tensors.find("m." + names[i]);
    auto v = tensors.find("v." + names[i]);
    if (m == tensors.end() || v == tensors.end()) throw LoadError("missing optimizer state for " + names[i]);
    if (m->second.shape() != m_[i].shape() || v->second.shape() != v_[i].shape()) {
      throw LoadError("optimizer state shape mismatch for " + names[i]);
    }
    m_[i] = m->second;
    v_[i] = v->second;
  }
  t_ = t;
}

// ---------------------------------------------------------------------------
// Tensor blob

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is, const std::string& what) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw LoadError("truncated tensor blob while reading " + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_tensor_blob(const std::filesystem::path& path, const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw LoadError("cannot open for writing: " + path.string());
  for (const auto& [name, t] : tensors) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.shape()) put_le<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    for (double v : t.data()) put_le<float>(os, static_cast<float>(v));
  }
  if (!os) throw LoadError("write failed: " + path.string());
}

std::map<std::string, Tensor> read_tensor_blob(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("missing tensor blob: " + path.string());
  std::map<std::string, Tensor> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto name_len = get_le<std::uint32_t>(is, "name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw LoadError("truncated tensor name");
    const auto ndim = get_le<std::uint32_t>(is, name + " rank");
    Shape shape;
    for (std::uint32_t i = 0; i < ndim; ++i) shape.push_back(static_cast<std::int64_t>(get_le<std::uint64_t>(is, name + " shape")));
    Tensor t(shape);
    for (double& v : t.data()) v = get_le<float>(is, name + " data");
    out.emplace(name, std::move(t));
  }
  return out;
}

}  // namespace ttslab::nn
