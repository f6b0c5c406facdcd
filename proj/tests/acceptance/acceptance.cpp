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


// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset; the exit status is nonzero when any selected
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "ttslab/coherence.hpp"
#include "ttslab/evaluation.hpp"
#include "ttslab/gan.hpp"
#include "ttslab/signal_data.hpp"
#include "ttslab/training.hpp"

using namespace ttslab;
namespace fs = std::filesystem;
using ad::Tensor;
using ad::Var;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates named checks; the first few failures are kept for the report.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failed_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    std::ostringstream s;
    s << summary << " [" << (total_ - failed_) << "/" << total_ << " checks]";
    if (failed_ > 0) s << " first failures: " << notes_;
    return {failed_ == 0, s.str()};
  }

 private:
  int total_ = 0, failed_ = 0;
  std::string notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / "ttslab_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int ttslab_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ttslab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// Random multichannel signal: a few sinusoids plus a random walk and noise.
std::vector<double> random_signal(std::int64_t c, std::int64_t w, nn::Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(c * w));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double f1 = rng.uniform(0.02, 0.45), f2 = rng.uniform(0.02, 0.45);
    const double p1 = rng.uniform(0, 6.3), p2 = rng.uniform(0, 6.3);
    double walk = 0.0;
    for (std::int64_t t = 0; t < w; ++t) {
      walk += 0.1 * rng.normal();
      x[static_cast<std::size_t>(ch * w + t)] = std::sin(2 * M_PI * f1 * t + p1) + 0.5 * std::sin(2 * M_PI * f2 * t + p2) +
                                                walk + 0.3 * rng.normal();
    }
  }
  return x;
}

data::SignalSet make_set(const std::vector<std::vector<double>>& rows, std::int64_t c, std::int64_t w) {
  data::SignalSet s(static_cast<std::int64_t>(rows.size()), c, w);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), s.values.begin() + static_cast<std::ptrdiff_t>(i * c * w));
  return s;
}

data::SignalSet uniform_noise_like(const data::SignalSet& s, std::uint64_t seed) {
  nn::Rng rng(seed);
  data::SignalSet out(s.n, s.c, s.w);
  for (double& v : out.values) v = rng.uniform(-1.0, 1.0);
  return out;
}

// ---------------------------------------------------------------------------

Outcome coherence_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  const coherence::CwtSpec spec;
  const std::int64_t ws[] = {24, 50, 150};
  const std::int64_t cs[] = {1, 3, 5};
  nn::Rng rng(2024);
  Checks checks;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::vector<double>>> xs, ys;
  double worst_self = 0.0, lo = 1.0, hi = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::int64_t w = ws[i % 3], c = cs[(i / 3) % 3];
    auto x = random_signal(c, w, rng), y = random_signal(c, w, rng);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      std::span<const double> xc(x.data() + ch * w, static_cast<std::size_t>(w));
      std::span<const double> yc(y.data() + ch * w, static_cast<std::size_t>(w));
      for (double v : coherence::wcoh(xc, xc, spec).values) worst_self = std::max(worst_self, std::abs(v - 1.0));
      for (double v : coherence::wcoh(xc, yc, spec).values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double self = coherence::wcoh_s(x, x, c, spec);
    checks.expect(self == static_cast<double>(w), "wcoh_s(x,x)=" + fmt("%.17g", self) + " for W=" + std::to_string(w));
    xs[{c, w}].push_back(std::move(x));
    ys[{c, w}].push_back(std::move(y));
  }
  checks.expect(worst_self <= 1e-9, "self-coherence deviation " + fmt("%.3g", worst_self));
  checks.expect(lo >= 0.0 && hi <= 1.0, "cross-coherence range [" + fmt("%.17g", lo) + ", " + fmt("%.17g", hi) + "]");
  double worst_sym = 0.0;
  for (const auto& [key, rows] : xs) {
    const auto a = make_set(rows, key.first, key.second), b = make_set(ys[key], key.first, key.second);
    const double ab = coherence::wcoh_set(a, b, spec).wcoh_set, ba = coherence::wcoh_set(b, a, spec).wcoh_set;
    worst_sym = std::max(worst_sym, std::abs(ab - ba));
  }
  checks.expect(worst_sym <= 1e-9, "symmetry deviation " + fmt("%.3g", worst_sym));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  checks.expect(secs < 120.0, "runtime " + fmt("%.1f s", secs));
  return checks.outcome("max |wcoh(x,x)-1|=" + fmt("%.2e", worst_self) + ", range [" + fmt("%.3f", lo) + "," +
                        fmt("%.3f", hi) + "], symmetry " + fmt("%.2e", worst_sym) + ", " + fmt("%.1f s", secs));
}

Outcome set_score_oracle() {
  const coherence::CwtSpec spec;
  const std::int64_t n = 6, c = 2, w = 40;
  nn::Rng rng(77);
  std::vector<std::vector<double>> ra, rb;
  for (int i = 0; i < n; ++i) {
    ra.push_back(random_signal(c, w, rng));
    rb.push_back(random_signal(c, w, rng));
  }
  const auto a = make_set(ra, c, w), b = make_set(rb, c, w);
  // Brute force from the raw coherence matrices: sum over time, mean over
  // scales, mean over channels, mean over every cross-set pair.
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double pair = 0.0;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        auto m = coherence::wcoh(std::span<const double>(ra[i].data() + ch * w, w),
                                 std::span<const double>(rb[j].data() + ch * w, w), spec);
        double s = 0.0;
        for (std::int64_t f = 0; f < m.f; ++f)
          for (std::int64_t t = 0; t < m.w; ++t) s += m.at(f, t);
        pair += s / static_cast<double>(m.f) / static_cast<double>(c);
      }
      total += pair;
    }
  }
  const double oracle = total / static_cast<double>(n * n);
  const double got = coherence::wcoh_set(a, b, spec).wcoh_set;
  const double err = std::abs(got - oracle);
  return {err <= 1e-9, "wcoh_set=" + fmt("%.12f", got) + " oracle=" + fmt("%.12f", oracle) + " |diff|=" + fmt("%.2e", err)};
}

Var vec(std::vector<double> v) {
  const auto n = static_cast<std::int64_t>(v.size());
  return ad::constant(Tensor({n}, std::move(v)));
}

Tensor uniform_tensor(ad::Shape shape, nn::Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

Outcome loss_identities() {
  Checks checks;
  train::TrainConfig cfg;
  const double perfect = train::mse_d_loss(vec({1, 1, 1, 1}), vec({0, 0, 0, 0}), cfg).item();
  checks.expect(perfect == 0.0, "perfect discriminator " + fmt("%.17g", perfect));
  const double half = train::mse_d_loss(vec({0.5, 0.5, 0.5}), vec({0.5, 0.5, 0.5}), cfg).item();
  checks.expect(half == 0.5, "uniform 0.5 " + fmt("%.17g", half));
  double worst_ce = 0.0;
  for (int k : {2, 3, 5, 18}) {
    const std::vector<int> labels{0, k - 1, k / 2, 1};
    const double ce = train::categorical_loss(ad::constant(Tensor({4, k}, 0.37)), labels).item();
    worst_ce = std::max(worst_ce, std::abs(ce - std::log(static_cast<double>(k))));
  }
  checks.expect(worst_ce <= 1e-9, "categorical vs ln K " + fmt("%.3g", worst_ce));
  nn::Rng rng(5);
  const Tensor real = uniform_tensor({6, 3, 1, 8}, rng), fake = uniform_tensor({6, 3, 1, 8}, rng);
  Tensor w = uniform_tensor({24}, rng);
  double norm = 0.0;
  for (double v : w.data()) norm += v * v;
  for (double& v : w.data()) v /= std::sqrt(norm);
  train::Critic linear = [&](const Var& x) {
    return ad::sum_last(ad::reshape(x, {x.dim(0), 24}) * ad::expand_rows(ad::constant(w), {x.dim(0), 24}));
  };
  train::Critic flat = [](const Var& x) { return ad::constant(Tensor({x.dim(0)}, -1.3)); };
  const double gp_lin = train::gradient_penalty(linear, real, fake, 9).item();
  const double gp_const = train::gradient_penalty(flat, real, fake, 9).item();
  checks.expect(std::abs(gp_lin) <= 1e-6, "unit-norm linear critic GP " + fmt("%.3g", gp_lin));
  checks.expect(std::abs(gp_const - 1.0) <= 1e-6, "constant critic GP " + fmt("%.17g", gp_const));
  return checks.outcome("mse perfect=" + fmt("%g", perfect) + " uniform=" + fmt("%g", half) + " |CE-lnK|=" +
                        fmt("%.1e", worst_ce) + " GP lin=" + fmt("%.1e", gp_lin) + " const=" + fmt("%.9f", gp_const));
}

Outcome loss_gradients() {
  gan::ModelSpec spec;
  spec.latent_dim = 8;
  spec.hidden_dim = 16;
  spec.depth = 1;
  spec.heads = 4;
  spec.patch_len = 4;
  spec.channels = 2;
  spec.seq_len = 24;
  spec.num_classes = 3;
  gan::Generator g(spec, 31);
  gan::Discriminator d(spec, 32);
  nn::Rng rng(33);
  const Tensor real = uniform_tensor({4, 2, 1, 24}, rng);
  const std::vector<int> labels{0, 2, 1, 2};
  const auto lb = gan::sample_latent(4, spec, rng, labels);
  train::TrainConfig cfg;
  cfg.objective = train::Objective::WganGp;
  auto fake = [&] { return g.forward(lb); };
  train::Critic critic = [&](const Var& x) { return d.forward(x).adv; };

  using LossFn = std::function<Var()>;
  const std::vector<std::pair<std::string, LossFn>> d_losses{
      {"mse_d", [&] { return train::mse_d_loss(ad::sigmoid(critic(ad::constant(real))), ad::sigmoid(critic(ad::detach(fake()))), cfg); }},
      {"wgan_d", [&] {
         nn::Rng r(5);
         return -train::wgan_adv_losses(critic, ad::constant(real), ad::detach(fake()), cfg, r).l_adv;
       }},
      {"gp", [&] { return train::gradient_penalty(critic, real, fake().value(), 6); }},
      {"cls_r", [&] { return train::categorical_loss(d.forward(ad::constant(real)).class_logits, labels); }},
  };
  const std::vector<std::pair<std::string, LossFn>> g_losses{
      {"mse_g", [&] { return train::mse_g_loss(ad::sigmoid(critic(fake())), cfg); }},
      {"wgan_g", [&] {
         nn::Rng r(5);
         return train::wgan_adv_losses(critic, ad::constant(real), fake(), cfg, r).l_adv_g;
       }},
      {"cls_f", [&] { return train::categorical_loss(d.forward(fake()).class_logits, labels); }},
  };

  // Three elements of every parameter tensor per loss. Pairs where both the
  // analytic and the numerical derivative are below 1e-7 count as zero.
  Checks checks;
  double worst = 0.0;
  int compared = 0;
  auto sweep = [&](const std::vector<std::pair<std::string, LossFn>>& losses, nn::ParameterSet& params) {
    for (const auto& [name, loss] : losses) {
      auto grads = ad::grad(loss(), params.vars());
      for (std::size_t p = 0; p < params.vars().size(); ++p) {
        Var& param = params.vars()[p];
        const std::int64_t n = param.numel();
        for (std::int64_t i : {std::int64_t{0}, n / 2, n - 1}) {
          const double keep = param.value()[i], h = 1e-6;
          param.mutable_value()[i] = keep + h;
          const double up = loss().item();
          param.mutable_value()[i] = keep - h;
          const double down = loss().item();
          param.mutable_value()[i] = keep;
          const double fd = (up - down) / (2 * h), an = grads[p].value()[i];
          const double scale = std::max(std::abs(fd), std::abs(an));
          if (scale < 1e-7) continue;
          const double rel = std::abs(an - fd) / scale;
          worst = std::max(worst, rel);
          ++compared;
          checks.expect(rel <= 1e-3, name + " d/d " + params.names()[p] + "[" + std::to_string(i) + "] rel " + fmt("%.2e", rel));
        }
      }
    }
  };
  sweep(d_losses, d.params());
  sweep(g_losses, g.params());
  return checks.outcome(std::to_string(compared) + " derivatives, max rel error " + fmt("%.2e", worst));
}

Outcome shape_contract() {
  Checks checks;
  gan::ModelSpec spec;
  spec.latent_dim = 100;
  spec.depth = 3;
  spec.channels = 3;
  spec.seq_len = 150;
  spec.hidden_dim = 20;
  spec.heads = 5;
  std::string shapes;
  for (std::int64_t p : {15, 10, 5, 30}) {
    spec.patch_len = p;
    gan::Generator g(spec, 1);
    gan::Discriminator d(spec, 2);
    nn::Rng rng(3);
    const std::int64_t batch = p == 15 ? 32 : 4;
    ad::Var x;
    {
      ad::NoGradGuard ng;
      x = g.forward(gan::sample_latent(batch, spec, rng));
    }
    checks.expect(x.shape() == ad::Shape{batch, 3, 1, 150}, "generator shape " + ad::shape_str(x.shape()));
    checks.expect(x.value().all_finite(), "generator output finite");
    const auto tokens = d.embed_patches(x);
    checks.expect(tokens.dim(1) == 150 / p + 1, "discriminator tokens " + std::to_string(tokens.dim(1)) + " at patch_len " + std::to_string(p));
    checks.expect(gan::token_count(spec, gan::Path::Discriminator) == 150 / p + 1, "token_count");
    checks.expect(d.forward(x).adv.shape() == ad::Shape{batch}, "critic output shape");
    if (p == 15) shapes = "G " + ad::shape_str(x.shape()) + ", D tokens " + std::to_string(tokens.dim(1));
  }
  return checks.outcome(shapes + " at patch_len 15");
}

// ---------------------------------------------------------------------------

Outcome sine_smoke_training() {
  const data::SineParams sp;  // 10000 samples, W=24, C=5
  Checks checks;
  std::string summary;
  for (std::uint64_t seed : {0, 1, 2}) {
    data::SineParams p = sp;
    p.seed = 100 + seed;
    const auto real = data::simulate_sine(p);
    gan::ModelSpec m;
    m.channels = real.c;
    m.seq_len = real.w;
    m.depth = 3;
    m.patch_len = 4;
    train::TrainConfig cfg;  // MSE, lr 1e-4 / 3e-4, Adam (0.9, 0.999), batch 32
    cfg.seed = seed;
    cfg.max_steps = 2000;
    train::Trainer trainer(real, m, cfg);
    for (std::int64_t s = 0; s < cfg.max_steps; ++s) trainer.step();
    nn::Rng pick(7 + seed);
    std::vector<std::int64_t> idx;
    for (int i = 0; i < 50; ++i) idx.push_back(pick.index(real.n));
    const auto ref = data::subset(real, idx);
    const auto syn = train::generate(trainer.generator(), 50, std::nullopt, 8 + seed);
    const auto noise = uniform_noise_like(syn, 9 + seed);
    const double s_syn = coherence::wcoh_set(ref, syn, {}).wcoh_set;
    const double s_noise = coherence::wcoh_set(ref, noise, {}).wcoh_set;
    checks.expect(s_syn > s_noise && s_syn - s_noise >= 0.2 * s_noise,
                  "seed " + std::to_string(seed) + " syn " + fmt("%.3f", s_syn) + " noise " + fmt("%.3f", s_noise));
    summary += (summary.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + ": " + fmt("%.2f", s_syn) +
               " vs noise " + fmt("%.2f", s_noise) + " (x" + fmt("%.2f", s_syn / s_noise) + ")";
  }
  return checks.outcome(summary + " after 2000 steps");
}

// ---------------------------------------------------------------------------

// Every file except the resolved config matches byte for byte.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "config.resolved.json") continue;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) {
      why = rel.string();
      return false;
    }
    ++compared;
  }
  if (compared == 0) why = "no outputs";
  return compared > 0;
}

Outcome determinism_and_resume() {
  Checks checks;
  const auto raw = scratch("raw"), syn = scratch("syn"), test = scratch("test");
  checks.expect(ttslab_cli({"simulate", "--kind", "bands", "--n-per-class", "60", "--w", "16", "--seed", "3", "--out",
                            raw.string()}) == 0,
                "simulate");
  checks.expect(ttslab_cli({"simulate", "--kind", "bands", "--n-per-class", "60", "--w", "16", "--seed", "4", "--out",
                            test.string()}) == 0,
                "simulate test");
  const std::vector<std::string> model{"--classes", "2", "--patch-len", "4", "--hidden-dim", "8", "--heads", "2",
                                       "--depth", "1", "--latent-dim", "8", "--batch-size", "8", "--log-every", "1",
                                       "--checkpoint-every", "10", "--max-steps", "30"};
  int resumed_runs = 0;
  for (const std::string objective : {"mse", "wgan-gp"}) {
    const auto run = scratch("train_" + objective);
    auto args = std::vector<std::string>{"train", "--data", raw.string(), "--objective", objective, "--out", run.string()};
    args.insert(args.end(), model.begin(), model.end());
    checks.expect(ttslab_cli(args) == 0, "train " + objective);
    for (int from : {10, 20}) {
      const auto resumed = scratch("resumed_" + objective + std::to_string(from));
      fs::create_directories(resumed);
      fs::copy(run / "losses.csv", resumed / "losses.csv");
      checks.expect(ttslab_cli({"train", "--data", raw.string(), "--resume", (run / ("ckpt_" + std::to_string(from))).string(),
                                "--max-steps", "30", "--out", resumed.string()}) == 0,
                    "resume");
      checks.expect(slurp(resumed / "losses.csv") == slurp(run / "losses.csv"),
                    objective + " losses after resume from step " + std::to_string(from));
      checks.expect(slurp(resumed / "ckpt_30.bin") == slurp(run / "ckpt_30.bin"), objective + " final checkpoint");
      ++resumed_runs;
    }
  }
  const auto ckpt = (fs::temp_directory_path() / "ttslab_acceptance" / "train_mse" / "ckpt_30").string();
  checks.expect(ttslab_cli({"generate", "--checkpoint", ckpt, "--n", "120", "--out", syn.string()}) == 0, "generate");

  // Every command once, then again from its resolved config.
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"simulate", {"--kind", "sine", "--n", "20", "--seed", "5"}},
      {"preprocess", {"--input", raw.string(), "--test-per-class", "10", "--crop-start", "2", "--crop-end", "14"}},
      {"train", [&] {
         auto a = std::vector<std::string>{"--data", raw.string()};
         a.insert(a.end(), model.begin(), model.end());
         a.back() = "12";
         return a;
       }()},
      {"generate", {"--checkpoint", ckpt, "--n", "40", "--labels", "random"}},
      {"wcoh", {"--a", raw.string(), "--b", syn.string(), "--n", "15", "--matrix"}},
      {"visualize", {"--real", raw.string(), "--syn", syn.string(), "--method", "tsne", "--n", "30", "--iterations", "150"}},
      {"casestudy", {"--real", raw.string(), "--syn", syn.string(), "--test", test.string(), "--divisor", "50", "--epochs", "2",
                     "--test-per-class", "20"}},
  };
  int reproduced = 0;
  for (const auto& [command, extra] : runs) {
    const auto first = scratch("cmd_" + command), second = scratch("cmd_" + command + "_again");
    auto args = std::vector<std::string>{command};
    args.insert(args.end(), extra.begin(), extra.end());
    args.insert(args.end(), {"--out", first.string()});
    if (ttslab_cli(args) != 0) {
      checks.expect(false, command + " failed");
      continue;
    }
    checks.expect(ttslab_cli({command, "--config", (first / "config.resolved.json").string(), "--out", second.string()}) == 0,
                  command + " rerun failed");
    std::string why;
    const bool same = same_outputs(first, second, why);
    checks.expect(same, command + " differs in " + why);
    reproduced += same;
  }
  return checks.outcome(std::to_string(resumed_runs) + " resumed runs bit-identical, " + std::to_string(reproduced) +
                        "/7 commands reproduced from their resolved config");
}

Outcome evaluation_oracles() {
  Checks checks;
  nn::Rng rng(404);
  double worst_pca = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t n = 20 + rng.index(40), d = 3 + rng.index(8);
    std::vector<double> x(static_cast<std::size_t>(n * d));
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < d; ++j) x[static_cast<std::size_t>(i * d + j)] = rng.normal() * (1.0 + 3.0 * static_cast<double>(d - j)) + 2.0;
    worst_pca = std::max(worst_pca, oracle::pca_oracle_error(x, n, d, eval::pca_scores(x, n, d, 2)));
  }
  // The projection entry point on two stacked signal sets.
  data::BandParams bp;
  bp.n_per_class = 15;
  bp.length_w = 12;
  const auto real = data::simulate_bands(bp);
  bp.seed = 1;
  const auto syn = data::simulate_bands(bp);
  const auto proj = eval::project_2d(real, syn, eval::ProjectionMethod::Pca, 0);
  std::vector<double> stacked(real.values);
  stacked.insert(stacked.end(), syn.values.begin(), syn.values.end());
  worst_pca = std::max(worst_pca, oracle::pca_oracle_error(stacked, real.n + syn.n, 12, proj.points));
  checks.expect(worst_pca <= 1e-6, "PCA deviation " + fmt("%.3g", worst_pca));

  double worst_metric = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.index(6));
    const std::int64_t n = 1 + rng.index(300);
    std::vector<int> truth, pred;
    for (std::int64_t i = 0; i < n; ++i) {
      truth.push_back(static_cast<int>(rng.index(k)));
      pred.push_back(rng.uniform() < 0.6 ? truth.back() : static_cast<int>(rng.index(k)));
    }
    const auto m = eval::compute_metrics(truth, pred, k);
    double correct = 0.0, f1_sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
    for (int c = 0; c < k; ++c) {
      const auto ref = oracle::class_scores(truth, pred, c);
      const auto& got = m.per_class[static_cast<std::size_t>(c)];
      worst_metric = std::max({worst_metric, std::abs(got.precision - ref.precision), std::abs(got.recall - ref.recall),
                               std::abs(got.f1 - ref.f1)});
      f1_sum += ref.f1;
    }
    worst_metric = std::max({worst_metric, std::abs(m.accuracy - correct / static_cast<double>(n)),
                             std::abs(m.macro_f1 - f1_sum / k)});
  }
  checks.expect(worst_metric <= 1e-9, "metric deviation " + fmt("%.3g", worst_metric));

  int fusion_sets = 0;
  for (int trial = 0; trial < 10; ++trial) {
    data::SignalSet s(1 + rng.index(50), 1 + rng.index(3), 2 + rng.index(60));
    for (double& v : s.values) v = rng.normal() * 3.0;
    const std::int64_t tb = 1 + rng.index(s.w), vb = 1 + rng.index(40);
    for (auto range : {std::optional<std::pair<double, double>>{}, std::optional<std::pair<double, double>>{{-1.0, 1.0}}}) {
      const auto map = eval::fusion_map(s, tb, vb, range, rng.index(s.c));
      std::int64_t mass = 0;
      for (auto c : map.counts) mass += c;
      checks.expect(mass == s.n * s.w, "fusion mass " + std::to_string(mass) + " of " + std::to_string(s.n * s.w));
      ++fusion_sets;
    }
  }
  return checks.outcome("PCA max deviation " + fmt("%.2e", worst_pca) + ", metric max deviation " + fmt("%.2e", worst_metric) +
                        ", fusion mass exact on " + std::to_string(fusion_sets) + " maps");
}

// ---------------------------------------------------------------------------
// Conditional runs share one fixed training setup: Wasserstein objective with
// gradient penalty and the default optimizer settings, at the largest allowed
// budget. Every evaluation uses the generator at the end of its budget.

constexpr std::int64_t kConditionalSteps = 5000;

gan::ModelSpec conditional_spec(const data::SignalSet& real) {
  gan::ModelSpec m;
  m.channels = real.c;
  m.seq_len = real.w;
  m.patch_len = 4;
  m.num_classes = real.num_classes;
  m.embed_strategy = gan::EmbedStrategy::GeneratorConcatClsHead;
  return m;
}

train::TrainConfig conditional_config(std::uint64_t seed) {
  train::TrainConfig c;  // lr 1e-4 / 3e-4, Adam (0.9, 0.999), batch 32, lambda_cls 1, lambda_gp 10
  c.objective = train::Objective::WganGp;
  c.seed = seed;
  c.max_steps = kConditionalSteps;
  return c;
}

gan::Generator train_conditional(const data::SignalSet& real, std::uint64_t seed) {
  train::Trainer trainer(real, conditional_spec(real), conditional_config(seed));
  for (std::int64_t s = 0; s < kConditionalSteps; ++s) trainer.step();
  return trainer.generator();
}

Outcome conditional_fidelity() {
  data::BandParams bp;  // two classes, bands [1.5, 3] and [6, 9] cycles per window, W=32
  bp.seed = 0;
  const auto real = data::simulate_bands(bp);
  Checks checks;
  std::string summary;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto g = train_conditional(real, seed);
    const auto syn = train::generate(g, 400, train::balanced_labels(400, 2), 50 + seed);
    std::int64_t hits[2] = {0, 0}, totals[2] = {0, 0};
    for (std::int64_t i = 0; i < syn.n; ++i) {
      const int label = (*syn.labels)[static_cast<std::size_t>(i)];
      const int k = oracle::dominant_frequency(&syn.values[static_cast<std::size_t>(i * syn.w)], syn.w);
      const auto band = bp.bands[static_cast<std::size_t>(label)];
      hits[label] += k >= band.low && k <= band.high;
      ++totals[label];
    }
    for (int c = 0; c < 2; ++c) {
      const double rate = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
      checks.expect(rate >= 0.8, "seed " + std::to_string(seed) + " class " + std::to_string(c) + " " + fmt("%.2f", rate));
      summary += (summary.empty() ? "" : ", ") + std::string("s") + std::to_string(seed) + "/c" + std::to_string(c) + " " + fmt("%.2f", rate);
    }
  }
  return checks.outcome("in-band rate per seed/class after " + std::to_string(kConditionalSteps) + " steps: " + summary);
}

// Five adjacent bands with heavy noise so the real-data classifier does not
// saturate.
data::SignalSet five_band_set(std::int64_t per_class, std::uint64_t seed) {
  data::BandParams bp;
  bp.n_per_class = per_class;
  bp.length_w = 32;
  bp.noise_std = 0.8;
  bp.bands.clear();
  for (int k = 0; k < 5; ++k) bp.bands.push_back({1.0 + 0.75 * k, 1.75 + 0.75 * k});
  bp.seed = seed;
  return data::simulate_bands(bp);
}

Outcome case_study_ordering() {
  const eval::CaseMode modes[] = {eval::CaseMode::RealOnly, eval::CaseMode::SyntheticOnly, eval::CaseMode::SmallReal,
                                  eval::CaseMode::Mixed};
  std::vector<std::vector<double>> acc(4);
  std::string runs;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto real = five_band_set(200, 100 + seed);
    const auto test = five_band_set(200, 200 + seed);
    const auto g = train_conditional(real, seed);
    const auto syn = train::generate(g, 1000, train::balanced_labels(1000, 5), 60 + seed);
    eval::CaseCounts counts;
    counts.divisor = 5;
    runs += (runs.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed);
    for (int m = 0; m < 4; ++m) {
      const auto r = eval::case_study(real, syn, test, modes[m], seed, counts);
      acc[static_cast<std::size_t>(m)].push_back(r.metrics.accuracy);
      runs += " " + eval::to_string(modes[m]) + "=" + fmt("%.3f", r.metrics.accuracy);
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double a = median(acc[0]), b = median(acc[1]), c = median(acc[2]), d = median(acc[3]);
  Checks checks;
  checks.expect(a >= d, "a < d");
  checks.expect(d >= b, "d < b");
  checks.expect(b >= c, "b < c");
  return checks.outcome("median accuracy a=" + fmt("%.3f", a) + " d=" + fmt("%.3f", d) + " b=" + fmt("%.3f", b) +
                        " c=" + fmt("%.3f", c) + " (" + runs + ")");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"coherence identities", coherence_identities},
      {"set score brute-force oracle", set_score_oracle},
      {"loss identities", loss_identities},
      {"loss gradients vs central differences", loss_gradients},
      {"shape and token contract", shape_contract},
      {"sine smoke training beats noise", sine_smoke_training},
      {"conditional frequency fidelity", conditional_fidelity},
      {"case-study ordering a>=d>=b>=c", case_study_ordering},
      {"determinism and resume", determinism_and_resume},
      {"evaluation oracles", evaluation_oracles},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && selected.count(id) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
