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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "ttslab/errors.hpp"
#include "ttslab/training.hpp"

using namespace ttslab;
using ad::Tensor;
using ad::Var;
namespace fs = std::filesystem;

namespace {

Var vec(std::vector<double> v) {
  const auto n = static_cast<std::int64_t>(v.size());
  return ad::constant(Tensor({n}, std::move(v)));
}

Tensor uniform_tensor(ad::Shape shape, nn::Rng& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

gan::ModelSpec tiny_spec(int classes = 0) {
  gan::ModelSpec s;
  s.latent_dim = 8;
  s.hidden_dim = 16;
  s.depth = 1;
  s.heads = 4;
  s.patch_len = 4;
  s.channels = 2;
  s.seq_len = 24;
  s.num_classes = classes;
  return s;
}

data::SignalSet sine_data(std::int64_t n, std::int64_t c, std::int64_t w) {
  data::SineParams p;
  p.n_samples = n;
  p.channels = c;
  p.length_w = w;
  p.seed = 11;
  return data::simulate_sine(p);
}

data::SignalSet toy_data(std::int64_t per_class, std::int64_t c, std::int64_t w) {
  data::BandParams p;
  p.n_per_class = per_class;
  p.channels = c;
  p.length_w = w;
  p.seed = 12;
  return data::simulate_bands(p);
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ttslab_train_" + name);
  fs::remove_all(dir);
  return dir;
}

// Relative error between an analytic and a central-difference derivative of
// `loss` with respect to element `i` of `param`.
double fd_check(const std::function<Var()>& loss, Var& param, std::int64_t i) {
  Var g = ad::grad(loss(), {param})[0];
  const double keep = param.value()[i];
  const double h = 1e-6;
  param.mutable_value()[i] = keep + h;
  const double up = loss().item();
  param.mutable_value()[i] = keep - h;
  const double down = loss().item();
  param.mutable_value()[i] = keep;
  const double fd = (up - down) / (2 * h);
  return std::abs(g.value()[i] - fd) / std::max(std::abs(fd), 1e-8);
}

}  // namespace

TEST_CASE("mse discriminator loss cases", "[training]") {
  train::TrainConfig cfg;
  CHECK(train::mse_d_loss(vec({1, 1, 1}), vec({0, 0, 0}), cfg).item() == 0.0);
  CHECK(train::mse_d_loss(vec({0.5, 0.5}), vec({0.5, 0.5}), cfg).item() == 0.5);
  cfg.flip_labels = true;
  CHECK(train::mse_d_loss(vec({0, 0}), vec({1, 1}), cfg).item() == 0.0);
  cfg.flip_labels = false;
  cfg.soft_labels = true;
  CHECK(std::abs(train::mse_d_loss(vec({0.9}), vec({0.1}), cfg).item()) < 1e-15);
  CHECK_THROWS_AS(train::mse_d_loss(ad::constant(Tensor({2, 2})), vec({0}), cfg), UsageError);
}

TEST_CASE("mse generator loss cases", "[training]") {
  train::TrainConfig cfg;
  CHECK(train::mse_g_loss(vec({1, 1}), cfg).item() == 0.0);
  CHECK(train::mse_g_loss(vec({0, 0, 0}), cfg).item() == 1.0);
  cfg.real_label = 0.9;
  CHECK(train::mse_g_loss(vec({0.9, 0.9}), cfg).item() == 0.0);
}

TEST_CASE("mse losses are non-negative", "[training][property]") {
  nn::Rng rng(1);
  train::TrainConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    cfg.flip_labels = rng.uniform() < 0.5;
    cfg.soft_labels = rng.uniform() < 0.5;
    const auto b = 1 + rng.index(6);
    Var r = ad::constant(uniform_tensor({b}, rng, 0, 1));
    Var f = ad::constant(uniform_tensor({b}, rng, 0, 1));
    REQUIRE(train::mse_d_loss(r, f, cfg).item() >= 0.0);
    REQUIRE(train::mse_g_loss(f, cfg).item() >= 0.0);
  }
}

TEST_CASE("gradient penalty closed forms", "[training]") {
  nn::Rng rng(2);
  Tensor real = uniform_tensor({5, 2, 1, 6}, rng);
  Tensor fake = uniform_tensor({5, 2, 1, 6}, rng);
  // Linear critic with a unit-norm weight vector.
  Tensor w = uniform_tensor({12}, rng);
  double norm = 0;
  for (double v : w.data()) norm += v * v;
  for (double& v : w.data()) v /= std::sqrt(norm);
  train::Critic linear = [&](const Var& x) {
    return ad::sum_last(ad::reshape(x, {x.dim(0), 12}) * ad::expand_rows(ad::constant(w), {x.dim(0), 12}));
  };
  CHECK(std::abs(train::gradient_penalty(linear, real, fake, 3).item()) < 1e-6);
  train::Critic constant = [](const Var& x) { return ad::constant(Tensor({x.dim(0)}, 0.7)); };
  CHECK(std::abs(train::gradient_penalty(constant, real, fake, 3).item() - 1.0) < 1e-6);
  CHECK_THROWS_AS(train::gradient_penalty(linear, real, uniform_tensor({4, 2, 1, 6}, rng), 3), UsageError);
}

TEST_CASE("gradient penalty matches a finite-difference gradient-norm oracle", "[training]") {
  auto spec = tiny_spec();
  gan::Discriminator d(spec, 3);
  for (auto& p : d.params().vars())
    for (double& v : p.mutable_value().data()) v *= 8.0;
  nn::Rng rng(4);
  Tensor real = uniform_tensor({3, 2, 1, 24}, rng);
  Tensor fake = uniform_tensor({3, 2, 1, 24}, rng);
  train::Critic critic = [&](const Var& x) { return d.forward(x).adv; };
  const double gp = train::gradient_penalty(critic, real, fake, 21).item();

  // Rebuild the same interpolates from the same seed.
  nn::Rng eps_rng(21);
  const std::int64_t per = 48;
  double oracle = 0.0;
  for (std::int64_t i = 0; i < 3; ++i) {
    const double eps = eps_rng.uniform();
    Tensor xi({1, 2, 1, 24});
    for (std::int64_t j = 0; j < per; ++j) xi[j] = eps * real[i * per + j] + (1 - eps) * fake[i * per + j];
    double sq = 0.0;
    for (std::int64_t j = 0; j < per; ++j) {
      Tensor up = xi, down = xi;
      up[j] += 1e-5;
      down[j] -= 1e-5;
      const double g = (d.forward(ad::constant(up)).adv.item() - d.forward(ad::constant(down)).adv.item()) / 2e-5;
      sq += g * g;
    }
    oracle += (std::sqrt(sq) - 1) * (std::sqrt(sq) - 1) / 3.0;
  }
  CHECK(std::abs(gp - oracle) <= 1e-3 * std::abs(oracle));
  CHECK(gp >= 0.0);
}

TEST_CASE("wasserstein adversarial losses", "[training]") {
  train::TrainConfig cfg;
  cfg.objective = train::Objective::WganGp;
  nn::Rng rng(5);
  Var real = ad::constant(uniform_tensor({4, 1, 1, 6}, rng));
  Var fake = ad::constant(uniform_tensor({4, 1, 1, 6}, rng));
  train::Critic constant = [](const Var& x) { return ad::constant(Tensor({x.dim(0)}, 2.5)); };
  auto c = train::wgan_adv_losses(constant, real, fake, cfg, rng);
  CHECK(std::abs(c.l_adv.item() + cfg.lambda_gp) < 1e-5);
  CHECK(c.l_adv_g.item() == -2.5);

  Tensor w = uniform_tensor({6}, rng);
  train::Critic linear = [&](const Var& x) {
    return ad::sum_last(ad::reshape(x, {x.dim(0), 6}) * ad::expand_rows(ad::constant(w), {x.dim(0), 6}));
  };
  cfg.lambda_gp = 0.0;
  auto same = train::wgan_adv_losses(linear, real, real, cfg, rng);
  CHECK(std::abs(same.l_adv.item()) < 1e-15);
  auto l = train::wgan_adv_losses(linear, real, fake, cfg, rng);
  double closed = 0.0;
  for (int j = 0; j < 6; ++j) {
    double mr = 0, mf = 0;
    for (int i = 0; i < 4; ++i) mr += real.value()[i * 6 + j] / 4, mf += fake.value()[i * 6 + j] / 4;
    closed += w[j] * (mr - mf);
  }
  CHECK(std::abs(l.l_adv.item() - closed) < 1e-12);
  cfg.objective = train::Objective::Mse;
  CHECK_THROWS_AS(train::wgan_adv_losses(linear, real, fake, cfg, rng), UsageError);
}

TEST_CASE("categorical loss", "[training]") {
  Var uniform = ad::constant(Tensor({3, 5}, 0.25));
  CHECK(std::abs(train::categorical_loss(uniform, {0, 3, 4}).item() - std::log(5.0)) < 1e-12);
  double prev = 1e9;
  for (double margin : {1.0, 5.0, 20.0, 60.0}) {
    Tensor t({2, 3}, 0.0);
    t[1] = margin;
    t[3] = margin;
    const double loss = train::categorical_loss(ad::constant(t), {1, 0}).item();
    CHECK(loss < prev);
    prev = loss;
  }
  CHECK(prev < 1e-20);

  nn::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = 1 + rng.index(5), k = 2 + rng.index(5);
    Tensor logits = uniform_tensor({b, k}, rng, -5, 5);
    std::vector<int> labels;
    for (std::int64_t i = 0; i < b; ++i) labels.push_back(static_cast<int>(rng.index(k)));
    double oracle = 0.0;
    for (std::int64_t i = 0; i < b; ++i) {
      double z = 0.0;
      for (std::int64_t j = 0; j < k; ++j) z += std::exp(logits[i * k + j]);
      oracle -= std::log(std::exp(logits[i * k + labels[static_cast<std::size_t>(i)]]) / z) / static_cast<double>(b);
    }
    REQUIRE(std::abs(train::categorical_loss(ad::constant(logits), labels).item() - oracle) < 1e-9);
  }
  CHECK_THROWS_AS(train::categorical_loss(uniform, {0, 5, 1}), UsageError);
}

TEST_CASE("loss gradients match central differences on a tiny model", "[training]") {
  auto spec = tiny_spec(3);
  gan::Generator g(spec, 7);
  gan::Discriminator d(spec, 8);
  for (auto* ps : {&g.params(), &d.params()})
    for (auto& p : ps->vars())
      for (double& v : p.mutable_value().data()) v *= 5.0;
  nn::Rng rng(9);
  Tensor real = uniform_tensor({4, 2, 1, 24}, rng);
  std::vector<int> labels{0, 1, 2, 1};
  auto lb = gan::sample_latent(4, spec, rng, labels);
  train::TrainConfig cfg;
  cfg.objective = train::Objective::WganGp;

  Var& d_probe = d.params().at("d.blocks.0.mlp.fc1.weight");
  Var& g_probe = g.params().at("g.blocks.0.attn.qkv.weight");
  auto fake = [&] { return g.forward(lb); };
  train::Critic critic = [&](const Var& x) { return d.forward(x).adv; };

  std::map<std::string, std::function<Var()>> d_losses{
      {"mse_d", [&] {
         return train::mse_d_loss(ad::sigmoid(critic(ad::constant(real))), ad::sigmoid(critic(ad::detach(fake()))), cfg);
       }},
      {"gp", [&] { return train::gradient_penalty(critic, real, fake().value(), 5); }},
      {"wgan_d", [&] {
         nn::Rng r(5);
         return -train::wgan_adv_losses(critic, ad::constant(real), ad::detach(fake()), cfg, r).l_adv;
       }},
      {"cls_r", [&] { return train::categorical_loss(d.forward(ad::constant(real)).class_logits, labels); }},
  };
  std::map<std::string, std::function<Var()>> g_losses{
      {"mse_g", [&] { return train::mse_g_loss(ad::sigmoid(critic(fake())), cfg); }},
      {"wgan_g", [&] { return -ad::mean_all(critic(fake())); }},
      {"cls_f", [&] { return train::categorical_loss(d.forward(fake()).class_logits, labels); }},
  };
  for (auto& [name, loss] : d_losses) {
    for (std::int64_t i : {0, 17, 200}) {
      CAPTURE(name, i);
      CHECK(fd_check(loss, d_probe, i) < 1e-3);
    }
  }
  for (auto& [name, loss] : g_losses) {
    for (std::int64_t i : {1, 33, 500}) {
      CAPTURE(name, i);
      CHECK(fd_check(loss, g_probe, i) < 1e-3);
    }
  }
}

TEST_CASE("a zero learning-rate step leaves parameters unchanged", "[training]") {
  auto data = toy_data(20, 2, 24);
  auto spec = tiny_spec(2);
  for (auto objective : {train::Objective::Mse, train::Objective::WganGp}) {
    train::TrainConfig cfg;
    cfg.objective = objective;
    cfg.batch_size = 4;
    train::Trainer t(data, spec, cfg);
    t.override_learning_rates(0.0, 0.0);
    std::vector<Tensor> before;
    for (auto* ps : {&t.generator().params(), &t.discriminator().params()})
      for (auto& p : ps->vars()) before.push_back(p.value());
    t.step();
    std::size_t k = 0;
    for (auto* ps : {&t.generator().params(), &t.discriminator().params()})
      for (auto& p : ps->vars()) REQUIRE(p.value().storage() == before[k++].storage());
  }
  train::TrainConfig bad;
  bad.lr_g = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("logged totals assemble from their components", "[training][property]") {
  auto data = toy_data(20, 2, 24);
  for (auto objective : {train::Objective::Mse, train::Objective::WganGp}) {
    train::TrainConfig cfg;
    cfg.objective = objective;
    cfg.batch_size = 6;
    cfg.lambda_cls = 0.7;
    train::Trainer t(data, tiny_spec(2), cfg);
    for (int i = 0; i < 5; ++i) {
      auto s = t.step();
      CHECK(std::abs(s.l_d - (-s.l_adv + cfg.lambda_cls * s.l_cls_r)) < 1e-6);
      CHECK(std::abs(s.l_g - (s.l_adv_g + cfg.lambda_cls * s.l_cls_f)) < 1e-6);
      CHECK(s.gp >= 0.0);
      if (objective == train::Objective::Mse) CHECK(s.l_adv <= 0.0);
    }
  }
}

TEST_CASE("resumed training reproduces the uninterrupted trajectory", "[training]") {
  auto data = sine_data(200, 2, 24);
  train::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_steps = 200;
  cfg.checkpoint_every = 100;
  cfg.seed = 3;
  auto dir = scratch("resume");
  std::vector<train::StepLosses> full;
  {
    cfg.max_steps = 205;
    train::Trainer t(data, tiny_spec(), cfg);
    t.run(dir / "full", [&](const train::StepLosses& s) { full.push_back(s); });
  }
  for (const auto& s : full) {
    REQUIRE(std::isfinite(s.l_d));
    REQUIRE(std::isfinite(s.l_g));
  }
  CHECK(fs::exists(dir / "full" / "ckpt_100.bin"));
  CHECK(fs::exists(dir / "full" / "ckpt_200.json"));
  CHECK(fs::exists(dir / "full" / "ckpt_205.bin"));

  auto resumed = train::Trainer::resume(data, dir / "full" / "ckpt_100", 205);
  CHECK(resumed.current_step() == 100);
  std::vector<train::StepLosses> tail;
  resumed.run(dir / "full", [&](const train::StepLosses& s) { tail.push_back(s); });
  REQUIRE(tail.size() == 105);
  for (std::size_t i = 0; i < tail.size(); ++i) REQUIRE(tail[i] == full[100 + i]);

  auto again = train::Trainer::resume(data, dir / "full" / "ckpt_200");
  CHECK(again.step() == full[200]);

  // losses.csv keeps one row every 10 steps plus the final step.
  std::ifstream csv(dir / "full" / "losses.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,L_D,L_G,L_adv,L_cls_r,L_cls_f,GP,L_adv_g");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 21);
}

TEST_CASE("non-finite losses abort training", "[training]") {
  auto data = sine_data(50, 2, 24);
  train::TrainConfig cfg;
  cfg.batch_size = 4;
  train::Trainer t(data, tiny_spec(), cfg);
  t.step();
  t.discriminator().params().at("d.adv_head.bias").mutable_value()[0] = NAN;
  try {
    t.step();
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("step 2"));
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("L_adv"));
  }
}

TEST_CASE("training rejects mismatched data", "[training]") {
  auto data = sine_data(10, 2, 24);
  train::TrainConfig cfg;
  CHECK_THROWS_AS(train::Trainer(data, tiny_spec(2), cfg), UsageError);
  auto spec = tiny_spec();
  spec.channels = 3;
  CHECK_THROWS_AS(train::Trainer(data, spec, cfg), UsageError);
  cfg.real_label = cfg.fake_label;
  CHECK_THROWS_AS(train::Trainer(data, tiny_spec(), cfg), ConfigError);
}

TEST_CASE("generate", "[training]") {
  auto spec = tiny_spec(5);
  gan::Generator g(spec, 1);
  auto labels = train::balanced_labels(5000, 5);
  auto s = train::generate(g, 5000, labels, 4);
  CHECK(s.n == 5000);
  CHECK(data::class_counts(s) == std::vector<std::int64_t>(5, 1000));
  CHECK(s.values.size() == static_cast<std::size_t>(5000 * 2 * 24));
  auto again = train::generate(g, 5000, labels, 4);
  CHECK(again == s);
  auto other = train::generate(g, 5000, labels, 5);
  CHECK_FALSE(other == s);

  auto empty = train::generate(g, 0, std::vector<int>{}, 1);
  CHECK(empty.n == 0);
  auto dir = scratch("gen");
  data::save_signal_set(empty, dir);
  CHECK(data::load_signal_set(dir) == empty);

  CHECK_THROWS_AS(train::generate(g, 2, std::vector<int>{0, 5}, 1), UsageError);
  CHECK_THROWS_AS(train::generate(g, 2, std::nullopt, 1), UsageError);

  gan::Checkpoint c{spec, 0, nlohmann::json::object(), {}};
  gan::store_parameters(g.params(), c.tensors);
  gan::save_checkpoint(dir / "ckpt_0", c);
  CHECK(train::generate(dir / "ckpt_0", 5000, labels, 4) == s);
}

TEST_CASE("conditional wasserstein training lowers the real-class loss", "[training][slow]") {
  // Moving average of L_cls_r over the first 500 steps on the two-band toy set.
  auto data = toy_data(200, 1, 32);
  auto spec = tiny_spec(2);
  spec.channels = 1;
  spec.seq_len = 32;
  train::TrainConfig cfg;
  cfg.objective = train::Objective::WganGp;
  cfg.batch_size = 16;
  cfg.seed = 1;
  train::Trainer t(data, spec, cfg);
  std::vector<double> cls;
  for (int i = 0; i < 500; ++i) cls.push_back(t.step().l_cls_r);
  auto window_mean = [&](std::size_t start) {
    double m = 0;
    for (std::size_t i = start; i < start + 50; ++i) m += cls[i] / 50;
    return m;
  };
  CHECK(window_mean(450) < window_mean(0));
}
