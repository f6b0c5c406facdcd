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

// Adversarial objectives, the alternating training loop, checkpoint/resume
// and sampling from a trained generator.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttslab/autodiff.hpp"
#include "ttslab/gan.hpp"
#include "ttslab/nn.hpp"
#include "ttslab/signal_data.hpp"

namespace ttslab::train {

enum class Objective { Mse, WganGp };
std::string to_string(Objective o);
Objective parse_objective(const std::string& name);

struct TrainConfig {
  Objective objective = Objective::Mse;
  double lr_g = 1e-4;
  double lr_d = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::int64_t batch_size = 32;
  double lambda_cls = 1.0;
  double lambda_gp = 10.0;
  int d_steps_per_g = 1;
  std::int64_t max_steps = 1000;
  double real_label = 1.0;
  double fake_label = 0.0;
  /// Replaces the targets with 0.9 / 0.1.
  bool soft_labels = false;
  /// Swaps the real and fake targets.
  bool flip_labels = false;
  std::uint64_t seed = 0;
  std::int64_t log_every = 10;
  std::int64_t checkpoint_every = 500;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Targets after applying soft_labels and flip_labels: {real, fake}.
std::pair<double, double> targets(const TrainConfig& cfg);

/// mean((d_real - real_target)^2) + mean((d_fake - fake_target)^2); scores
/// are post-sigmoid.
ad::Var mse_d_loss(const ad::Var& d_real, const ad::Var& d_fake, const TrainConfig& cfg);
/// mean((d_fake - real_target)^2)
ad::Var mse_g_loss(const ad::Var& d_fake, const TrainConfig& cfg);

/// Maps a [B, C, 1, W] batch to [B] raw critic scores.
using Critic = std::function<ad::Var(const ad::Var&)>;

/// mean over samples of (||grad_x D(x_hat)|| - 1)^2 at random interpolates
/// x_hat = eps * real + (1 - eps) * fake, eps ~ U(0, 1) per sample. The result
/// is differentiable with respect to the critic's parameters.
ad::Var gradient_penalty(const Critic& critic, const ad::Tensor& real, const ad::Tensor& fake, nn::Rng& rng);
ad::Var gradient_penalty(const Critic& critic, const ad::Tensor& real, const ad::Tensor& fake, std::uint64_t seed);

struct WganLosses {
  /// mean D(real) - mean D(fake) - lambda_gp * GP; the critic minimizes its
  /// negative.
  ad::Var l_adv;
  /// -mean D(fake), minimized by the generator.
  ad::Var l_adv_g;
  ad::Var gp;
};

WganLosses wgan_adv_losses(const Critic& critic, const ad::Var& real, const ad::Var& fake, const TrainConfig& cfg,
                           nn::Rng& rng);

/// Mean negative log-likelihood of `labels` under softmax(logits).
ad::Var categorical_loss(const ad::Var& logits, const std::vector<int>& labels);

/// Scalars recorded for one generator iteration (the discriminator terms come
/// from the last discriminator update of that iteration).
struct StepLosses {
  std::int64_t step = 0;
  double l_d = 0.0;
  double l_g = 0.0;
  double l_adv = 0.0;
  double l_cls_r = 0.0;
  double l_cls_f = 0.0;
  double gp = 0.0;
  double l_adv_g = 0.0;
  bool operator==(const StepLosses&) const = default;
};

std::string csv_header();
std::string csv_row(const StepLosses& s);

class Trainer {
 public:
  Trainer(const data::SignalSet& data, const gan::ModelSpec& spec, const TrainConfig& cfg);
  /// Restores the full training state from a checkpoint written by
  /// save_checkpoint(). `max_steps`, when given, replaces the stored limit.
  static Trainer resume(const data::SignalSet& data, const std::filesystem::path& checkpoint,
                        std::optional<std::int64_t> max_steps = std::nullopt);

  /// Runs one generator iteration (with its discriminator updates).
  StepLosses step();
  /// Runs until max_steps, writing losses.csv and ckpt_<step> files into
  /// out_dir. `on_step` sees every iteration.
  void run(const std::filesystem::path& out_dir, const std::function<void(const StepLosses&)>& on_step = nullptr);

  void save_checkpoint(const std::filesystem::path& stem) const;
  /// Sets both learning rates without validation (zero is allowed).
  void override_learning_rates(double lr_g, double lr_d);

  std::int64_t current_step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  gan::Generator& generator() { return *g_; }
  gan::Discriminator& discriminator() { return *d_; }

 private:
  Trainer(const data::SignalSet& data, const gan::ModelSpec& spec, const TrainConfig& cfg, bool fresh);
  ad::Tensor batch(const std::vector<std::int64_t>& idx) const;
  std::vector<int> batch_labels(const std::vector<std::int64_t>& idx) const;

  const data::SignalSet* data_;
  gan::ModelSpec spec_;
  TrainConfig cfg_;
  std::unique_ptr<gan::Generator> g_;
  std::unique_ptr<gan::Discriminator> d_;
  std::unique_ptr<nn::Adam> opt_g_, opt_d_;
  nn::Rng rng_;
  std::int64_t step_ = 0;
};

/// Labels 0..K-1 repeated cyclically; exactly n / K of each when K divides n.
std::vector<int> balanced_labels(std::int64_t n, int k);

/// Draws n samples. Conditional generators need one label per sample.
data::SignalSet generate(const gan::Generator& g, std::int64_t n, const std::optional<std::vector<int>>& labels,
                         std::uint64_t seed);
data::SignalSet generate(const std::filesystem::path& checkpoint, std::int64_t n,
                         const std::optional<std::vector<int>>& labels, std::uint64_t seed);
/// Rebuilds the generator stored in a checkpoint.
gan::Generator load_generator(const std::filesystem::path& checkpoint);

}  // namespace ttslab::train
