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


#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "ttslab/coherence.hpp"
#include "ttslab/errors.hpp"
#include "ttslab/evaluation.hpp"
#include "ttslab/gan.hpp"
#include "ttslab/signal_data.hpp"
#include "ttslab/training.hpp"

namespace ttslab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Kind { Int, Float, Str, Bool, Json };

const char* kind_type_name(Kind k) {
  switch (k) {
    case Kind::Int:
      return "INT";
    case Kind::Float:
      return "FLOAT";
    case Kind::Str:
      return "TEXT";
    case Kind::Bool:
      return "BOOL";
    case Kind::Json:
      return "JSON";
  }
  return "TEXT";
}

struct OptSpec {
  std::string key;
  Kind kind;
  json def;
  std::string help;
};

/// Resolved parameters of one invocation.
class Params {
 public:
  explicit Params(json j) : j_(std::move(j)) {}
  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  std::int64_t i(const std::string& k) const { return j_.at(k).get<std::int64_t>(); }
  double f(const std::string& k) const { return j_.at(k).get<double>(); }
  bool b(const std::string& k) const { return j_.at(k).get<bool>(); }
  std::string s(const std::string& k) const { return j_.at(k).get<std::string>(); }
  const json& raw(const std::string& k) const { return j_.at(k); }
  std::string required(const std::string& k) const {
    if (!has(k)) throw UsageError("missing required option --" + flag_name(k));
    return s(k);
  }
  static std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
  }

 private:
  json j_;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  fs::path out_dir;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<OptSpec> opts;
  /// Fills derived defaults (null entries that depend on inputs) before the
  /// resolved config is written.
  std::function<void(json&)> finalize;
  std::function<void(const Params&, Io&)> run;
};

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Int:
      return "an integer";
    case Kind::Float:
      return "a number";
    case Kind::Str:
      return "a string";
    case Kind::Bool:
      return "a boolean";
    case Kind::Json:
      return "JSON";
  }
  return "?";
}

json parse_flag_value(const OptSpec& o, const std::string& text) {
  const std::string flag = "--" + Params::flag_name(o.key);
  try {
    std::size_t used = 0;
    switch (o.kind) {
      case Kind::Int: {
        const long long v = std::stoll(text, &used);
        if (used != text.size()) break;
        return json(static_cast<std::int64_t>(v));
      }
      case Kind::Float: {
        const double v = std::stod(text, &used);
        if (used != text.size()) break;
        return json(v);
      }
      case Kind::Str:
        return json(text);
      case Kind::Bool:
        if (text.empty() || text == "true" || text == "1" || text == "yes") return json(true);
        if (text == "false" || text == "0" || text == "no") return json(false);
        break;
      case Kind::Json:
        return json::parse(text);
    }
  } catch (const std::exception&) {
  }
  throw UsageError(flag + " expects " + kind_name(o.kind) + ", got '" + text + "'");
}

void check_config_value(const OptSpec& o, const json& v) {
  if (v.is_null()) return;
  bool ok = true;
  switch (o.kind) {
    case Kind::Int:
      ok = v.is_number_integer();
      break;
    case Kind::Float:
      ok = v.is_number();
      break;
    case Kind::Str:
      ok = v.is_string();
      break;
    case Kind::Bool:
      ok = v.is_boolean();
      break;
    case Kind::Json:
      break;
  }
  if (!ok) throw ConfigError("config key '" + o.key + "' must be " + kind_name(o.kind));
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return s.str();
}

std::uint64_t env_seed() {
  const char* v = std::getenv("TTSLAB_SEED");
  if (!v || !*v) return 0;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used == std::string_view(v).size()) return s;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("TTSLAB_SEED must be a non-negative integer, got '") + v + "'");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// simulate

void finalize_simulate(json& j) {
  const bool bands = j["kind"] == "bands";
  if (j["kind"] != "sine" && !bands) throw ConfigError("kind must be sine or bands");
  if (j["w"].is_null()) j["w"] = bands ? 32 : 24;
  if (j["c"].is_null()) j["c"] = bands ? 1 : 5;
}

void run_simulate(const Params& p, Io& io) {
  data::SignalSet s;
  if (p.s("kind") == "sine") {
    data::SineParams sp;
    sp.n_samples = p.i("n");
    sp.length_w = p.i("w");
    sp.channels = p.i("c");
    sp.freq_range = {p.f("freq_low"), p.f("freq_high")};
    sp.phase_range = {p.f("phase_low"), p.f("phase_high")};
    sp.seed = static_cast<std::uint64_t>(p.i("seed"));
    s = data::simulate_sine(sp);
  } else {
    data::BandParams bp;
    bp.n_per_class = p.i("n_per_class");
    bp.length_w = p.i("w");
    bp.channels = p.i("c");
    bp.bands.clear();
    for (const auto& b : p.raw("bands")) {
      if (!b.is_array() || b.size() != 2) throw ConfigError("bands must be a list of [low, high] pairs");
      bp.bands.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    bp.amplitude = {p.f("amplitude_low"), p.f("amplitude_high")};
    bp.noise_std = p.f("noise_std");
    bp.seed = static_cast<std::uint64_t>(p.i("seed"));
    s = data::simulate_bands(bp);
  }
  data::save_signal_set(s, io.out_dir);
  io.out << "wrote " << s.n << " signals (C=" << s.c << ", W=" << s.w << ") to " << io.out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// preprocess

void run_preprocess(const Params& p, Io& io) {
  data::SignalSet s;
  if (p.has("csv")) {
    if (p.has("input")) throw UsageError("pass either --input or --csv, not both");
    s = data::import_csv(p.s("csv"), p.b("labeled"));
  } else {
    s = data::load_signal_set(p.required("input"));
  }
  if (p.has("crop_start") || p.has("crop_end")) {
    s = data::crop_window(s, p.has("crop_start") ? p.i("crop_start") : 0, p.has("crop_end") ? p.i("crop_end") : s.w);
  }
  const auto seed = static_cast<std::uint64_t>(p.i("seed"));
  std::optional<data::SignalSet> test;
  if (p.has("test_per_class")) {
    auto [held, rest] = data::split_per_class(s, p.i("test_per_class"), seed);
    test = std::move(held);
    s = std::move(rest);
  }
  if (p.has("stats_from")) {
    const auto ref = data::load_signal_set(p.s("stats_from"));
    if (!ref.norm_stats) throw UsageError("--stats-from set carries no normalization statistics");
    s = data::apply_normalization(s, *ref.norm_stats);
  } else if (p.b("normalize")) {
    s = data::normalize_channels(s);
  }
  if (test && s.norm_stats) *test = data::apply_normalization(*test, *s.norm_stats);
  if (p.has("balance_per_class")) s = data::resample_balanced(s, p.i("balance_per_class"), seed + 1);

  if (test) {
    data::save_signal_set(s, io.out_dir / "train");
    data::save_signal_set(*test, io.out_dir / "test");
    io.out << "wrote " << s.n << " training and " << test->n << " test signals to " << io.out_dir.string() << '\n';
  } else {
    data::save_signal_set(s, io.out_dir);
    io.out << "wrote " << s.n << " signals to " << io.out_dir.string() << '\n';
  }
}

// ---------------------------------------------------------------------------
// train

gan::ModelSpec model_spec(const Params& p, const data::SignalSet& d) {
  gan::ModelSpec m;
  m.latent_dim = p.i("latent_dim");
  m.hidden_dim = p.i("hidden_dim");
  m.depth = static_cast<int>(p.i("depth"));
  m.heads = static_cast<int>(p.i("heads"));
  m.patch_len = p.i("patch_len");
  m.channels = d.c;
  m.seq_len = d.w;
  m.num_classes = p.has("classes") ? static_cast<int>(p.i("classes")) : d.num_classes;
  m.label_embed_dim = p.i("label_embed_dim");
  m.dropout = p.f("dropout");
  m.embed_strategy = gan::parse_strategy(p.s("strategy"));
  m.validate();
  return m;
}

train::TrainConfig train_config(const Params& p) {
  train::TrainConfig c;
  c.objective = train::parse_objective(p.s("objective"));
  c.lr_g = p.f("lr_g");
  c.lr_d = p.f("lr_d");
  c.adam_beta1 = p.f("beta1");
  c.adam_beta2 = p.f("beta2");
  c.batch_size = p.i("batch_size");
  c.lambda_cls = p.f("lambda_cls");
  c.lambda_gp = p.f("lambda_gp");
  c.d_steps_per_g = static_cast<int>(p.i("d_steps_per_g"));
  c.max_steps = p.i("max_steps");
  c.soft_labels = p.b("soft_labels");
  c.flip_labels = p.b("flip_labels");
  c.seed = static_cast<std::uint64_t>(p.i("seed"));
  c.log_every = p.i("log_every");
  c.checkpoint_every = p.i("checkpoint_every");
  c.validate();
  return c;
}

void run_train(const Params& p, Io& io) {
  const auto d = data::load_signal_set(p.required("data"));
  auto progress = [&](const train::StepLosses& l) {
    if (l.step % p.i("log_every") == 0) {
      io.err << "step " << l.step << "  L_D " << l.l_d << "  L_G " << l.l_g << '\n';
    }
  };
  if (p.has("resume")) {
    auto t = train::Trainer::resume(d, p.s("resume"), p.i("max_steps"));
    t.run(io.out_dir, progress);
    io.out << "resumed training finished at step " << t.current_step() << '\n';
    return;
  }
  train::Trainer t(d, model_spec(p, d), train_config(p));
  t.run(io.out_dir, progress);
  io.out << "training finished at step " << t.current_step() << "; checkpoints in " << io.out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// generate

void run_generate(const Params& p, Io& io) {
  const fs::path ckpt = p.required("checkpoint");
  const auto g = train::load_generator(ckpt);
  const auto& spec = g.spec();
  const std::int64_t n = p.i("n");
  const auto seed = static_cast<std::uint64_t>(p.i("seed"));
  std::optional<std::vector<int>> labels;
  const std::string mode = p.has("labels") ? p.s("labels") : (spec.conditional() ? "balanced" : "none");
  if (mode == "none") {
    if (spec.conditional()) throw UsageError("the checkpoint holds a conditional generator; pass --labels");
  } else {
    if (!spec.conditional()) throw UsageError("the checkpoint holds an unconditional generator; labels are not accepted");
    if (mode == "balanced") {
      labels = train::balanced_labels(n, spec.num_classes);
    } else if (mode == "random") {
      nn::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
      labels = std::vector<int>();
      for (std::int64_t i = 0; i < n; ++i) labels->push_back(static_cast<int>(rng.index(spec.num_classes)));
    } else {
      const json v = parse_flag_value({"labels", Kind::Int, nullptr, ""}, mode);
      labels = std::vector<int>(static_cast<std::size_t>(n), v.get<int>());
    }
  }
  auto s = train::generate(g, n, labels, seed);
  data::save_signal_set(s, io.out_dir);
  io.out << "wrote " << s.n << " synthetic signals to " << io.out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// wcoh

data::SignalSet subsample(const data::SignalSet& s, std::int64_t n, std::uint64_t seed, const char* which) {
  if (n > s.n) {
    throw UsageError(std::string("--n ") + std::to_string(n) + " exceeds the " + which + " set size " + std::to_string(s.n));
  }
  std::vector<std::int64_t> idx(static_cast<std::size_t>(s.n));
  for (std::int64_t i = 0; i < s.n; ++i) idx[static_cast<std::size_t>(i)] = i;
  nn::Rng rng(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i + rng.index(s.n - i))]);
  }
  idx.resize(static_cast<std::size_t>(n));
  return data::subset(s, idx);
}

coherence::CwtSpec cwt_spec(const Params& p) {
  coherence::CwtSpec c;
  c.omega0 = p.f("omega0");
  c.voices_per_octave = static_cast<int>(p.i("voices"));
  c.min_period = p.f("min_period");
  if (p.has("max_period")) c.max_period = p.f("max_period");
  return c;
}

void run_wcoh(const Params& p, Io& io) {
  auto a = data::load_signal_set(p.required("a"));
  auto b = data::load_signal_set(p.required("b"));
  const auto seed = static_cast<std::uint64_t>(p.i("seed"));
  if (p.has("n")) {
    a = subsample(a, p.i("n"), seed, "first");
    b = subsample(b, p.i("n"), seed, "second");
  }
  const auto spec = cwt_spec(p);
  const auto score = coherence::wcoh_set(a, b, spec, static_cast<int>(p.i("threads")));
  json report = coherence::report_json(score, spec, a.w);
  double paired = 0.0;
  for (std::int64_t i = 0; i < score.n; ++i) paired += score.scores[static_cast<std::size_t>(i * score.n + i)];
  report["wcoh_paired"] = paired / static_cast<double>(score.n);
  write_json(io.out_dir / "report.json", report);
  if (p.b("matrix")) {
    std::ofstream f(io.out_dir / "scores.csv");
    f.precision(17);
    for (std::int64_t i = 0; i < score.n; ++i) {
      for (std::int64_t j = 0; j < score.n; ++j) f << (j ? "," : "") << score.scores[static_cast<std::size_t>(i * score.n + j)];
      f << '\n';
    }
  }
  io.out << std::setprecision(17) << "wcoh_set " << score.wcoh_set << "\nwcoh_paired " << report["wcoh_paired"].get<double>()
         << "\n";
}

// ---------------------------------------------------------------------------
// visualize

void run_visualize(const Params& p, Io& io) {
  auto real = data::load_signal_set(p.required("real"));
  std::optional<data::SignalSet> syn;
  if (p.has("syn")) syn = data::load_signal_set(p.s("syn"));
  const auto seed = static_cast<std::uint64_t>(p.i("seed"));
  if (p.has("class")) {
    const int k = static_cast<int>(p.i("class"));
    auto only = [k](const data::SignalSet& s) {
      if (!s.labels) throw UsageError("--class needs labeled sets");
      std::vector<std::int64_t> idx;
      for (std::int64_t i = 0; i < s.n; ++i)
        if ((*s.labels)[static_cast<std::size_t>(i)] == k) idx.push_back(i);
      return data::subset(s, idx);
    };
    real = only(real);
    if (syn) syn = only(*syn);
  }
  const std::int64_t channel = p.i("channel");
  const std::int64_t time_bins = p.has("time_bins") ? p.i("time_bins") : real.w;
  const std::int64_t value_bins = p.i("value_bins");
  const std::int64_t count = p.i("signals");

  eval::write_signals_svg(real, count, io.out_dir / "signals_real.svg");
  auto fm = eval::fusion_map(real, time_bins, value_bins, std::nullopt, channel);
  eval::write_fusion_csv(fm, io.out_dir / "fusion_real.csv");
  eval::write_fusion_svg(fm, io.out_dir / "fusion_real.svg");
  if (syn) {
    eval::write_signals_svg(*syn, count, io.out_dir / "signals_syn.svg");
    auto fs_map = eval::fusion_map(*syn, time_bins, value_bins, std::nullopt, channel);
    eval::write_fusion_csv(fs_map, io.out_dir / "fusion_syn.csv");
    eval::write_fusion_svg(fs_map, io.out_dir / "fusion_syn.svg");

    data::SignalSet pr = real, ps = *syn;
    if (p.has("n")) {
      pr = subsample(real, std::min(p.i("n"), real.n), seed, "real");
      ps = subsample(*syn, std::min(p.i("n"), syn->n), seed + 1, "synthetic");
    }
    eval::TsneParams tp;
    tp.perplexity = p.f("perplexity");
    tp.iterations = static_cast<int>(p.i("iterations"));
    auto proj = eval::project_2d(pr, ps, eval::parse_projection(p.s("method")), seed, tp);
    eval::write_projection_csv(proj, io.out_dir / "projection.csv");
    eval::write_projection_svg(proj, io.out_dir / "projection.svg");
    write_json(io.out_dir / "projection_params.json", proj.method_params);
  }
  io.out << "wrote plots to " << io.out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// casestudy

std::size_t overlap(const data::SignalSet& a, const data::SignalSet& b) {
  if (a.w != b.w || a.c != b.c) return 0;
  const auto row = static_cast<std::size_t>(a.c * a.w);
  std::unordered_set<std::string_view> seen;
  for (std::int64_t i = 0; i < a.n; ++i) {
    seen.emplace(reinterpret_cast<const char*>(a.values.data() + static_cast<std::size_t>(i) * row), row * sizeof(double));
  }
  std::size_t shared = 0;
  for (std::int64_t i = 0; i < b.n; ++i) {
    shared += seen.count(std::string_view(reinterpret_cast<const char*>(b.values.data() + static_cast<std::size_t>(i) * row),
                                          row * sizeof(double)));
  }
  return shared;
}

void run_casestudy(const Params& p, Io& io) {
  auto real = data::load_signal_set(p.required("real"));
  const auto seed = static_cast<std::uint64_t>(p.i("seed"));
  data::SignalSet test;
  if (p.has("test")) {
    test = data::load_signal_set(p.s("test"));
  } else {
    auto [held, rest] = data::split_per_class(real, p.i("test_per_class"), seed);
    test = std::move(held);
    real = std::move(rest);
  }
  data::SignalSet syn = p.has("syn") ? data::load_signal_set(p.s("syn")) : data::subset(real, {});
  if (const auto n = overlap(real, test); n > 0) {
    throw UsageError("test set shares " + std::to_string(n) + " samples with the real training set");
  }
  if (const auto n = overlap(syn, test); n > 0) {
    throw UsageError("test set shares " + std::to_string(n) + " samples with the synthetic training set");
  }

  eval::CaseCounts counts;
  counts.a_real = p.i("a_real");
  counts.b_synthetic = p.i("b_synthetic");
  counts.c_real = p.i("c_real");
  counts.d_real = p.i("d_real");
  counts.d_synthetic = p.i("d_synthetic");
  counts.divisor = p.i("divisor");
  eval::ClassifierConfig cfg;
  cfg.widths = p.raw("widths").get<std::vector<std::int64_t>>();
  cfg.kernel = p.i("kernel");
  cfg.lr = p.f("lr");
  cfg.epochs = static_cast<int>(p.i("epochs"));
  cfg.batch_size = p.i("batch_size");

  std::vector<eval::CaseMode> modes;
  if (p.s("mode") == "all") {
    modes = {eval::CaseMode::RealOnly, eval::CaseMode::SyntheticOnly, eval::CaseMode::SmallReal, eval::CaseMode::Mixed};
  } else {
    modes = {eval::parse_case_mode(p.s("mode"))};
  }
  json report = json::object();
  for (auto m : modes) {
    const auto r = eval::case_study(real, syn, test, m, seed, counts, cfg);
    report[eval::to_string(m)] = eval::to_json(r);
    eval::write_confusion_svg(r.metrics, io.out_dir / ("confusion_" + eval::to_string(m) + ".svg"));
    io.out << "mode " << eval::to_string(m) << " accuracy " << r.metrics.accuracy << " macro_f1 " << r.metrics.macro_f1 << '\n';
  }
  write_json(io.out_dir / "report.json", report);
}

// ---------------------------------------------------------------------------

std::vector<Command> commands() {
  const data::SineParams sine;
  const data::BandParams bands;
  const gan::ModelSpec model;
  const train::TrainConfig tc;
  const coherence::CwtSpec cwt;
  const eval::ClassifierConfig clf;
  const eval::CaseCounts cc;
  const eval::TsneParams tsne;
  json band_list = json::array();
  for (const auto& b : bands.bands) band_list.push_back({b.low, b.high});

  return {
      {"simulate",
       "Simulate a signal set (sine waves or labeled frequency bands)",
       {{"kind", Kind::Str, "sine", "sine or bands"},
        {"n", Kind::Int, sine.n_samples, "number of sine samples"},
        {"w", Kind::Int, nullptr, "sequence length (24 for sine, 32 for bands)"},
        {"c", Kind::Int, nullptr, "channels (5 for sine, 1 for bands)"},
        {"freq_low", Kind::Float, sine.freq_range.low, "sine angular frequency lower bound"},
        {"freq_high", Kind::Float, sine.freq_range.high, "sine angular frequency upper bound"},
        {"phase_low", Kind::Float, sine.phase_range.low, "sine phase lower bound"},
        {"phase_high", Kind::Float, sine.phase_range.high, "sine phase upper bound"},
        {"n_per_class", Kind::Int, bands.n_per_class, "samples per class (bands)"},
        {"bands", Kind::Json, band_list, "per-class [low, high] cycles per window (bands)"},
        {"amplitude_low", Kind::Float, bands.amplitude.low, "amplitude lower bound (bands)"},
        {"amplitude_high", Kind::Float, bands.amplitude.high, "amplitude upper bound (bands)"},
        {"noise_std", Kind::Float, bands.noise_std, "additive noise std (bands)"}},
       finalize_simulate,
       run_simulate},
      {"preprocess",
       "Crop, split, normalize and balance a signal set",
       {{"input", Kind::Str, nullptr, "input signal set"},
        {"csv", Kind::Str, nullptr, "single-channel CSV to import instead of --input"},
        {"labeled", Kind::Bool, false, "the CSV's last column is a label"},
        {"crop_start", Kind::Int, nullptr, "first timestep kept"},
        {"crop_end", Kind::Int, nullptr, "one past the last timestep kept"},
        {"test_per_class", Kind::Int, nullptr, "hold out this many samples per class into test/"},
        {"normalize", Kind::Bool, true, "normalize channels with training statistics"},
        {"stats_from", Kind::Str, nullptr, "apply the normalization statistics of this set"},
        {"balance_per_class", Kind::Int, nullptr, "resample the training part to this many per class"}},
       nullptr,
       run_preprocess},
      {"train",
       "Train a (conditional) transformer GAN",
       {{"data", Kind::Str, nullptr, "training signal set"},
        {"resume", Kind::Str, nullptr, "checkpoint to resume from"},
        {"classes", Kind::Int, nullptr, "number of classes (default: from the data; 0 trains unconditionally)"},
        {"latent_dim", Kind::Int, model.latent_dim, "latent dimension"},
        {"hidden_dim", Kind::Int, model.hidden_dim, "transformer width"},
        {"depth", Kind::Int, model.depth, "encoder blocks per network"},
        {"heads", Kind::Int, model.heads, "attention heads"},
        {"patch_len", Kind::Int, model.patch_len, "timesteps per patch"},
        {"label_embed_dim", Kind::Int, model.label_embed_dim, "label embedding size"},
        {"dropout", Kind::Float, model.dropout, "dropout rate"},
        {"strategy", Kind::Str, gan::to_string(model.embed_strategy), "label embedding strategy"},
        {"objective", Kind::Str, train::to_string(tc.objective), "mse or wgan-gp"},
        {"lr_g", Kind::Float, tc.lr_g, "generator learning rate"},
        {"lr_d", Kind::Float, tc.lr_d, "discriminator learning rate"},
        {"beta1", Kind::Float, tc.adam_beta1, "Adam beta1"},
        {"beta2", Kind::Float, tc.adam_beta2, "Adam beta2"},
        {"batch_size", Kind::Int, tc.batch_size, "batch size"},
        {"lambda_cls", Kind::Float, tc.lambda_cls, "classification loss weight"},
        {"lambda_gp", Kind::Float, tc.lambda_gp, "gradient penalty weight"},
        {"d_steps_per_g", Kind::Int, tc.d_steps_per_g, "discriminator updates per generator update"},
        {"max_steps", Kind::Int, tc.max_steps, "generator iterations"},
        {"soft_labels", Kind::Bool, tc.soft_labels, "use 0.9 / 0.1 targets"},
        {"flip_labels", Kind::Bool, tc.flip_labels, "swap real and fake targets"},
        {"log_every", Kind::Int, tc.log_every, "loss logging interval"},
        {"checkpoint_every", Kind::Int, tc.checkpoint_every, "checkpoint interval"}},
       nullptr,
       run_train},
      {"generate",
       "Sample synthetic signals from a checkpoint",
       {{"checkpoint", Kind::Str, nullptr, "checkpoint stem or file"},
        {"n", Kind::Int, 1000, "number of samples"},
        {"labels", Kind::Str, nullptr, "balanced, random or a class index (conditional models)"}},
       nullptr,
       run_generate},
      {"wcoh",
       "Score two signal sets with set-level wavelet coherence",
       {{"a", Kind::Str, nullptr, "first signal set"},
        {"b", Kind::Str, nullptr, "second signal set"},
        {"n", Kind::Int, nullptr, "random subsample size per set"},
        {"omega0", Kind::Float, cwt.omega0, "Morlet center frequency"},
        {"voices", Kind::Int, cwt.voices_per_octave, "scales per octave"},
        {"min_period", Kind::Float, cwt.min_period, "smallest period in timesteps"},
        {"max_period", Kind::Float, nullptr, "largest period (default W / 2)"},
        {"threads", Kind::Int, 1, "worker threads"},
        {"matrix", Kind::Bool, false, "also write the n x n score matrix"}},
       nullptr,
       run_wcoh},
      {"visualize",
       "Plot signals, fusion maps and a 2-D projection",
       {{"real", Kind::Str, nullptr, "real signal set"},
        {"syn", Kind::Str, nullptr, "synthetic signal set"},
        {"method", Kind::Str, "pca", "pca or tsne"},
        {"n", Kind::Int, nullptr, "subsample size per set for the projection"},
        {"perplexity", Kind::Float, tsne.perplexity, "t-SNE perplexity"},
        {"iterations", Kind::Int, tsne.iterations, "t-SNE iterations"},
        {"signals", Kind::Int, 8, "signals drawn in the raw-signal grid"},
        {"time_bins", Kind::Int, nullptr, "fusion map time bins (default W)"},
        {"value_bins", Kind::Int, 100, "fusion map value bins"},
        {"channel", Kind::Int, 0, "fusion map channel"},
        {"class", Kind::Int, nullptr, "restrict to one class"}},
       nullptr,
       run_visualize},
      {"casestudy",
       "Train the reference classifier on real, synthetic or mixed data",
       {{"real", Kind::Str, nullptr, "labeled real training set"},
        {"syn", Kind::Str, nullptr, "labeled synthetic set"},
        {"test", Kind::Str, nullptr, "labeled held-out test set (default: split from --real)"},
        {"test_per_class", Kind::Int, 200, "held-out samples per class when --test is absent"},
        {"mode", Kind::Str, "all", "a, b, c, d or all"},
        {"a_real", Kind::Int, cc.a_real, "real samples in mode a"},
        {"b_synthetic", Kind::Int, cc.b_synthetic, "synthetic samples in mode b"},
        {"c_real", Kind::Int, cc.c_real, "real samples in mode c"},
        {"d_real", Kind::Int, cc.d_real, "real samples in mode d"},
        {"d_synthetic", Kind::Int, cc.d_synthetic, "synthetic samples in mode d"},
        {"divisor", Kind::Int, cc.divisor, "divide all counts by this factor"},
        {"widths", Kind::Json, clf.widths, "convolution widths"},
        {"kernel", Kind::Int, clf.kernel, "convolution kernel size"},
        {"lr", Kind::Float, clf.lr, "classifier learning rate"},
        {"epochs", Kind::Int, clf.epochs, "classifier epochs"},
        {"batch_size", Kind::Int, clf.batch_size, "classifier batch size"}},
       nullptr,
       run_casestudy},
  };
}

int fail(std::ostream& err, int code, const std::string& what) {
  err << "error: " << what << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto cmds = commands();
  CLI::App app{"ttslab: transformer GANs for time series"};
  app.name("ttslab");
  app.require_subcommand(1);

  struct Bound {
    CLI::App* sub = nullptr;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config;
    std::string seed;
    std::string out_dir;
    CLI::Option* config_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t c = 0; c < cmds.size(); ++c) {
    auto& b = bound[c];
    b.sub = app.add_subcommand(cmds[c].name, cmds[c].help);
    b.config_opt = b.sub->add_option("--config", b.config, "JSON file with parameters (flags take precedence)");
    b.config_opt->type_name("PATH");
    b.seed_opt = b.sub->add_option("--seed", b.seed, "random seed (fallback: TTSLAB_SEED, then 0)");
    b.seed_opt->type_name("INT");
    b.out_opt = b.sub->add_option("--out", b.out_dir, "output directory (default runs/<command>-<timestamp>)");
    b.out_opt->type_name("PATH");
    for (const auto& o : cmds[c].opts) {
      auto* opt = b.sub->add_option("--" + Params::flag_name(o.key), b.values[o.key], o.help);
      opt->type_name(kind_type_name(o.kind));
      if (o.kind == Kind::Bool) {
        // A bare flag means true; CLI11 would substitute the default string.
        opt->expected(0, 1);
        opt->description(o.help + " (default " + o.def.dump() + ")");
      } else if (!o.def.is_null()) {
        opt->default_str(o.def.is_string() ? o.def.get<std::string>() : o.def.dump());
      }
      b.options[o.key] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  std::size_t which = 0;
  while (which < cmds.size() && !bound[which].sub->parsed()) ++which;
  const auto& cmd = cmds[which];
  auto& b = bound[which];

  try {
    json resolved = json::object();
    for (const auto& o : cmd.opts) resolved[o.key] = o.def;
    resolved["seed"] = nullptr;
    resolved["out"] = nullptr;
    if (b.config_opt->count() > 0) {
      json file = read_json_file(b.config);
      if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
      for (const auto& [k, v] : file.items()) {
        if (k == "command") {
          if (v != cmd.name) throw ConfigError("config file is for command '" + v.dump() + "', not '" + cmd.name + "'");
          continue;
        }
        if (k == "seed") {
          if (!v.is_null() && !v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ConfigError("config key 'seed' must be a non-negative integer");
          }
          resolved[k] = v;
          continue;
        }
        if (k == "out") {
          if (!v.is_null() && !v.is_string()) throw ConfigError("config key 'out' must be a string");
          resolved[k] = v;
          continue;
        }
        auto it = std::find_if(cmd.opts.begin(), cmd.opts.end(), [&](const OptSpec& o) { return o.key == k; });
        if (it == cmd.opts.end()) throw ConfigError("unknown config key '" + k + "' for command " + cmd.name);
        check_config_value(*it, v);
        resolved[k] = v;
      }
    }
    for (const auto& o : cmd.opts) {
      if (b.options[o.key]->count() > 0) resolved[o.key] = parse_flag_value(o, b.values[o.key]);
    }
    if (b.seed_opt->count() > 0) {
      resolved["seed"] = parse_flag_value({"seed", Kind::Int, nullptr, ""}, b.seed);
      if (resolved["seed"].get<std::int64_t>() < 0) throw UsageError("--seed must be non-negative");
    }
    if (resolved["seed"].is_null()) resolved["seed"] = env_seed();
    if (b.out_opt->count() > 0) resolved["out"] = b.out_dir;
    if (resolved["out"].is_null()) resolved["out"] = (fs::path("runs") / (cmd.name + "-" + timestamp())).string();
    if (cmd.finalize) cmd.finalize(resolved);

    Io io{out, err, fs::path(resolved["out"].get<std::string>())};
    fs::create_directories(io.out_dir);
    json written = resolved;
    written["command"] = cmd.name;
    write_json(io.out_dir / "config.resolved.json", written);
    cmd.run(Params(resolved), io);
    return 0;
  } catch (const ConfigError& e) {
    return fail(err, 1, e.what());
  } catch (const UsageError& e) {
    return fail(err, 1, e.what());
  } catch (const BoundsError& e) {
    return fail(err, 1, e.what());
  } catch (const json::exception& e) {
    return fail(err, 1, std::string("bad parameter value: ") + e.what());
  } catch (const std::exception& e) {
    return fail(err, 2, e.what());
  }
}

}  // namespace ttslab::cli
