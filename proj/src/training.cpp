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

#include "ttslab/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ttslab/errors.hpp"

namespace ttslab::train {

namespace fs = std::filesystem;
using ad::Shape;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

std::string to_string(Objective o) { return o == Objective::Mse ? "mse" : "wgan-gp"; }

Objective parse_objective(const std::string& name) {
  if (name == "mse") return Objective::Mse;
  if (name == "wgan-gp") return Objective::WganGp;
  throw ConfigError("unknown objective '" + name + "' (expected mse or wgan-gp)");
}

void TrainConfig::validate() const {
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(lambda_gp >= 0.0)) throw ConfigError("lambda_gp must be non-negative");
  if (!(lambda_cls >= 0.0)) throw ConfigError("lambda_cls must be non-negative");
  if (real_label == fake_label) throw ConfigError("real_label and fake_label must differ");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (d_steps_per_g <= 0) throw ConfigError("d_steps_per_g must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (log_every <= 0 || checkpoint_every <= 0) throw ConfigError("log_every and checkpoint_every must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

json to_json(const TrainConfig& c) {
  return json{{"objective", to_string(c.objective)},
              {"lr_g", c.lr_g},
              {"lr_d", c.lr_d},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"batch_size", c.batch_size},
              {"lambda_cls", c.lambda_cls},
              {"lambda_gp", c.lambda_gp},
              {"d_steps_per_g", c.d_steps_per_g},
              {"max_steps", c.max_steps},
              {"real_label", c.real_label},
              {"fake_label", c.fake_label},
              {"soft_labels", c.soft_labels},
              {"flip_labels", c.flip_labels},
              {"seed", c.seed},
              {"log_every", c.log_every},
              {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
    c.lr_g = j.value("lr_g", c.lr_g);
    c.lr_d = j.value("lr_d", c.lr_d);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lambda_cls = j.value("lambda_cls", c.lambda_cls);
    c.lambda_gp = j.value("lambda_gp", c.lambda_gp);
    c.d_steps_per_g = j.value("d_steps_per_g", c.d_steps_per_g);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.real_label = j.value("real_label", c.real_label);
    c.fake_label = j.value("fake_label", c.fake_label);
    c.soft_labels = j.value("soft_labels", c.soft_labels);
    c.flip_labels = j.value("flip_labels", c.flip_labels);
    c.seed = j.value("seed", c.seed);
    c.log_every = j.value("log_every", c.log_every);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

std::pair<double, double> targets(const TrainConfig& cfg) {
  double real = cfg.soft_labels ? 0.9 : cfg.real_label;
  double fake = cfg.soft_labels ? 0.1 : cfg.fake_label;
  if (cfg.flip_labels) std::swap(real, fake);
  return {real, fake};
}

namespace {

Var mean_sq_to(const Var& x, double target) { return ad::mean_all(ad::square(x - target)); }

void require_vector(const Var& v, const char* name) {
  if (v.shape().size() != 1) throw UsageError(std::string(name) + " must be a [B] score vector, got " + ad::shape_str(v.shape()));
}

}  // namespace

Var mse_d_loss(const Var& d_real, const Var& d_fake, const TrainConfig& cfg) {
  require_vector(d_real, "d_real");
  require_vector(d_fake, "d_fake");
  const auto [real, fake] = targets(cfg);
  return mean_sq_to(d_real, real) + mean_sq_to(d_fake, fake);
}

Var mse_g_loss(const Var& d_fake, const TrainConfig& cfg) {
  require_vector(d_fake, "d_fake");
  return mean_sq_to(d_fake, targets(cfg).first);
}

Var gradient_penalty(const Critic& critic, const Tensor& real, const Tensor& fake, nn::Rng& rng) {
  if (real.shape() != fake.shape() || real.ndim() < 1) {
    throw UsageError("gradient_penalty: real " + ad::shape_str(real.shape()) + " and fake " + ad::shape_str(fake.shape()) +
                     " differ in shape");
  }
  const std::int64_t b = real.dim(0);
  const std::int64_t per = b == 0 ? 0 : real.numel() / b;
  Tensor mixed(real.shape());
  for (std::int64_t i = 0; i < b; ++i) {
    const double eps = rng.uniform();
    for (std::int64_t j = 0; j < per; ++j) {
      const std::int64_t k = i * per + j;
      mixed[k] = eps * real[k] + (1.0 - eps) * fake[k];
    }
  }
  Var x(mixed, true);
  Var scores = critic(x);
  Var g = ad::grad(ad::sum_all(scores), {x}, true)[0];
  Var norms = ad::sqrt(ad::sum_last(ad::square(ad::reshape(g, {b, per}))) + 1e-20);
  return ad::mean_all(ad::square(norms - 1.0));
}

Var gradient_penalty(const Critic& critic, const Tensor& real, const Tensor& fake, std::uint64_t seed) {
  nn::Rng rng(seed);
  return gradient_penalty(critic, real, fake, rng);
}

WganLosses wgan_adv_losses(const Critic& critic, const Var& real, const Var& fake, const TrainConfig& cfg, nn::Rng& rng) {
  if (cfg.objective != Objective::WganGp) throw UsageError("wgan_adv_losses called with objective " + to_string(cfg.objective));
  WganLosses out;
  Var fake_scores = critic(fake);
  Var mean_fake = ad::mean_all(fake_scores);
  out.gp = gradient_penalty(critic, real.value(), fake.value(), rng);
  out.l_adv = ad::mean_all(critic(real)) - mean_fake - out.gp * cfg.lambda_gp;
  out.l_adv_g = -mean_fake;
  return out;
}

Var categorical_loss(const Var& logits, const std::vector<int>& labels) {
  if (logits.shape().size() != 2 || logits.dim(0) != static_cast<std::int64_t>(labels.size())) {
    throw UsageError("categorical_loss: logits " + ad::shape_str(logits.shape()) + " do not match " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::int64_t k = logits.dim(1);
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw UsageError("categorical_loss: label " + std::to_string(labels[i]) + " out of range for " + std::to_string(k) + " classes");
    }
    idx->push_back(static_cast<std::int64_t>(i) * k + labels[i]);
  }
  Var picked = ad::gather(ad::log_softmax_last(logits), idx, {static_cast<std::int64_t>(labels.size())});
  return -ad::mean_all(picked);
}

std::string csv_header() { return "step,L_D,L_G,L_adv,L_cls_r,L_cls_f,GP,L_adv_g"; }

std::string csv_row(const StepLosses& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", static_cast<long long>(s.step), s.l_d,
                s.l_g, s.l_adv, s.l_cls_r, s.l_cls_f, s.gp, s.l_adv_g);
  return buf;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const data::SignalSet& data, const gan::ModelSpec& spec, const TrainConfig& cfg)
    : Trainer(data, spec, cfg, true) {}

Trainer::Trainer(const data::SignalSet& data, const gan::ModelSpec& spec, const TrainConfig& cfg, bool)
    : data_(&data), spec_(spec), cfg_(cfg), rng_(cfg.seed) {
  spec_.validate();
  cfg_.validate();
  if (data.c != spec_.channels || data.w != spec_.seq_len) {
    throw UsageError("training data has shape (C=" + std::to_string(data.c) + ", W=" + std::to_string(data.w) +
                     ") but the model expects (C=" + std::to_string(spec_.channels) + ", W=" + std::to_string(spec_.seq_len) + ")");
  }
  if (data.n == 0) throw UsageError("training data is empty");
  if (spec_.conditional()) {
    if (!data.labels) throw UsageError("conditional model requires labeled training data");
    if (data.num_classes > spec_.num_classes) {
      throw UsageError("data has " + std::to_string(data.num_classes) + " classes but the model has " +
                       std::to_string(spec_.num_classes));
    }
  }
  // Distinct seeds for the two networks derived from the run seed.
  g_ = std::make_unique<gan::Generator>(spec_, cfg_.seed * 2 + 1);
  d_ = std::make_unique<gan::Discriminator>(spec_, cfg_.seed * 2 + 2);
  opt_g_ = std::make_unique<nn::Adam>(g_->params(), nn::AdamConfig{cfg_.lr_g, cfg_.adam_beta1, cfg_.adam_beta2});
  opt_d_ = std::make_unique<nn::Adam>(d_->params(), nn::AdamConfig{cfg_.lr_d, cfg_.adam_beta1, cfg_.adam_beta2});
}

Tensor Trainer::batch(const std::vector<std::int64_t>& idx) const {
  const std::int64_t row = data_->c * data_->w;
  Tensor t({static_cast<std::int64_t>(idx.size()), data_->c, 1, data_->w});
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(data_->values.begin() + idx[i] * row, row, t.storage().begin() + static_cast<std::int64_t>(i) * row);
  return t;
}

std::vector<int> Trainer::batch_labels(const std::vector<std::int64_t>& idx) const {
  std::vector<int> out;
  for (auto i : idx) out.push_back((*data_->labels)[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

void check_finite(double v, const char* term, std::int64_t step) {
  if (!std::isfinite(v)) {
    throw TrainingError("non-finite " + std::string(term) + " at step " + std::to_string(step) + "; aborting");
  }
}

}  // namespace

StepLosses Trainer::step() {
  const std::int64_t b = cfg_.batch_size;
  const bool cond = spec_.conditional();
  const double lambda = cfg_.lambda_cls;
  nn::Rng* drop = spec_.dropout > 0.0 ? &rng_ : nullptr;
  StepLosses out;
  out.step = step_ + 1;

  for (int k = 0; k < cfg_.d_steps_per_g; ++k) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(b));
    for (auto& i : idx) i = rng_.index(data_->n);
    Var real = ad::constant(batch(idx));
    std::optional<std::vector<int>> real_labels;
    if (cond) real_labels = batch_labels(idx);
    auto lb = gan::sample_latent(b, spec_, rng_);
    Var fake;
    {
      ad::NoGradGuard guard;
      fake = ad::constant(g_->forward(lb, drop).value());
    }

    Var l_d, l_adv, cls_r;
    auto real_out = d_->forward(real, real_labels, drop);
    if (cfg_.objective == Objective::Mse) {
      auto fake_out = d_->forward(fake, lb.labels, drop);
      Var mse = mse_d_loss(ad::sigmoid(real_out.adv), ad::sigmoid(fake_out.adv), cfg_);
      l_adv = -mse;
      out.gp = 0.0;
    } else {
      // The penalty is evaluated at interpolates labeled with the real labels.
      Critic on_fake = [&](const Var& x) { return d_->forward(x, lb.labels, drop).adv; };
      Critic on_real = [&](const Var& x) { return d_->forward(x, real_labels, drop).adv; };
      Var mean_fake = ad::mean_all(on_fake(fake));
      Var gp = gradient_penalty(on_real, real.value(), fake.value(), rng_);
      l_adv = ad::mean_all(real_out.adv) - mean_fake - gp * cfg_.lambda_gp;
      out.gp = gp.item();
    }
    l_d = -l_adv;
    if (cond) {
      cls_r = categorical_loss(real_out.class_logits, *real_labels);
      l_d = l_d + cls_r * lambda;
      out.l_cls_r = cls_r.item();
    }
    out.l_adv = l_adv.item();
    out.l_d = l_d.item();
    check_finite(out.l_adv, "L_adv", out.step);
    check_finite(out.l_cls_r, "L_cls_r", out.step);
    check_finite(out.gp, "GP", out.step);
    check_finite(out.l_d, "L_D", out.step);
    opt_d_->step(ad::grad(l_d, d_->params().vars()));
  }

  auto lb = gan::sample_latent(b, spec_, rng_);
  Var fake = g_->forward(lb, drop);
  auto fake_out = d_->forward(fake, lb.labels, drop);
  Var l_adv_g = cfg_.objective == Objective::Mse ? mse_g_loss(ad::sigmoid(fake_out.adv), cfg_) : -ad::mean_all(fake_out.adv);
  Var l_g = l_adv_g;
  if (cond) {
    Var cls_f = categorical_loss(fake_out.class_logits, *lb.labels);
    l_g = l_g + cls_f * lambda;
    out.l_cls_f = cls_f.item();
  }
  out.l_adv_g = l_adv_g.item();
  out.l_g = l_g.item();
  check_finite(out.l_adv_g, "L_adv_g", out.step);
  check_finite(out.l_cls_f, "L_cls_f", out.step);
  check_finite(out.l_g, "L_G", out.step);
  opt_g_->step(ad::grad(l_g, g_->params().vars()));
  step_ = out.step;
  return out;
}

void Trainer::save_checkpoint(const fs::path& stem) const {
  gan::Checkpoint c;
  c.spec = spec_;
  c.step = step_;
  gan::store_parameters(g_->params(), c.tensors);
  gan::store_parameters(d_->params(), c.tensors);
  for (auto& [name, t] : opt_g_->state_tensors()) c.tensors["opt." + name] = t;
  for (auto& [name, t] : opt_d_->state_tensors()) c.tensors["opt." + name] = t;
  c.extra = json{{"train_config", to_json(cfg_)},
                 {"rng_state", rng_.state()},
                 {"adam_g_steps", opt_g_->steps_taken()},
                 {"adam_d_steps", opt_d_->steps_taken()}};
  gan::save_checkpoint(stem, c);
}

void Trainer::override_learning_rates(double lr_g, double lr_d) {
  cfg_.lr_g = lr_g;
  cfg_.lr_d = lr_d;
  opt_g_->set_lr(lr_g);
  opt_d_->set_lr(lr_d);
}

Trainer Trainer::resume(const data::SignalSet& data, const fs::path& checkpoint, std::optional<std::int64_t> max_steps) {
  auto c = gan::load_checkpoint(checkpoint);
  TrainConfig cfg;
  try {
    cfg = train_config_from_json(c.extra.at("train_config"));
  } catch (const json::exception& e) {
    throw LoadError("checkpoint has no training state: " + std::string(e.what()));
  }
  if (max_steps) cfg.max_steps = *max_steps;
  Trainer t(data, c.spec, cfg, false);
  gan::load_parameters(t.g_->params(), c.tensors);
  gan::load_parameters(t.d_->params(), c.tensors);
  std::map<std::string, Tensor> moments;
  for (auto& [name, tensor] : c.tensors)
    if (name.rfind("opt.", 0) == 0) moments[name.substr(4)] = tensor;
  t.opt_g_->load_state(moments, c.extra.at("adam_g_steps").get<std::int64_t>());
  t.opt_d_->load_state(moments, c.extra.at("adam_d_steps").get<std::int64_t>());
  t.rng_.set_state(c.extra.at("rng_state").get<std::string>());
  t.step_ = c.step;
  return t;
}

void Trainer::run(const fs::path& out_dir, const std::function<void(const StepLosses&)>& on_step) {
  fs::create_directories(out_dir);
  const auto csv_path = out_dir / "losses.csv";
  // Keep rows up to the current step so a resumed run continues the log.
  std::vector<std::string> kept;
  if (step_ > 0 && fs::exists(csv_path)) {
    std::ifstream is(csv_path);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= step_) kept.push_back(line);
    }
  }
  std::ofstream csv(csv_path, std::ios::trunc);
  csv << csv_header() << '\n';
  for (const auto& line : kept) csv << line << '\n';
  csv.flush();

  while (step_ < cfg_.max_steps) {
    StepLosses s = step();
    if (on_step) on_step(s);
    if (s.step % cfg_.log_every == 0 || s.step == cfg_.max_steps) {
      csv << csv_row(s) << '\n';
      csv.flush();
    }
    if (s.step % cfg_.checkpoint_every == 0 || s.step == cfg_.max_steps) {
      save_checkpoint(out_dir / ("ckpt_" + std::to_string(s.step)));
    }
  }
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<int> balanced_labels(std::int64_t n, int k) {
  if (k <= 0) throw UsageError("balanced_labels: need at least one class");
  std::vector<int> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(i % k);
  return out;
}

data::SignalSet generate(const gan::Generator& g, std::int64_t n, const std::optional<std::vector<int>>& labels,
                         std::uint64_t seed) {
  const auto& spec = g.spec();
  if (n < 0) throw UsageError("generate: n must be non-negative");
  if (spec.conditional()) {
    if (!labels) throw UsageError("generate: conditional model requires labels");
    if (static_cast<std::int64_t>(labels->size()) != n) throw UsageError("generate: need one label per sample");
    for (int l : *labels) {
      if (l < 0 || l >= spec.num_classes) {
        throw UsageError("generate: label " + std::to_string(l) + " out of range for " + std::to_string(spec.num_classes) + " classes");
      }
    }
  } else if (labels) {
    throw UsageError("generate: unconditional model does not take labels");
  }
  data::SignalSet out(n, spec.channels, spec.seq_len);
  if (spec.conditional()) {
    out.labels = *labels;
    out.num_classes = spec.num_classes;
  }
  nn::Rng rng(seed);
  ad::NoGradGuard guard;
  const std::int64_t chunk = 256;
  const std::int64_t row = spec.channels * spec.seq_len;
  for (std::int64_t start = 0; start < n; start += chunk) {
    const std::int64_t b = std::min(chunk, n - start);
    std::optional<std::vector<int>> part;
    if (labels) part = std::vector<int>(labels->begin() + start, labels->begin() + start + b);
    auto lb = gan::sample_latent(b, spec, rng, part);
    Tensor y = g.forward(lb).value();
    std::copy(y.storage().begin(), y.storage().end(), out.values.begin() + start * row);
  }
  return out;
}

gan::Generator load_generator(const fs::path& checkpoint) {
  auto c = gan::load_checkpoint(checkpoint);
  gan::Generator g(c.spec, 0);
  gan::load_parameters(g.params(), c.tensors);
  return g;
}

data::SignalSet generate(const fs::path& checkpoint, std::int64_t n, const std::optional<std::vector<int>>& labels,
                         std::uint64_t seed) {
  return generate(load_generator(checkpoint), n, labels, seed);
}

}  // namespace ttslab::train
