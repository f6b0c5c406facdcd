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

#include "ttslab/signal_data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ttslab/errors.hpp"
#include "ttslab/nn.hpp"

namespace ttslab::data {

namespace fs = std::filesystem;
using nlohmann::json;

SignalSet::SignalSet(std::int64_t n_, std::int64_t c_, std::int64_t w_)
    : n(n_), c(c_), w(w_), values(static_cast<std::size_t>(n_ * c_ * w_), 0.0) {}

void SignalSet::validate() const {
  if (n < 0 || c <= 0 || w <= 0) {
    throw LoadError("shape: invalid dimensions n=" + std::to_string(n) + " c=" + std::to_string(c) +
                    " w=" + std::to_string(w));
  }
  if (static_cast<std::int64_t>(values.size()) != n * c * w) {
    throw LoadError("values: expected " + std::to_string(n * c * w) + " elements, found " +
                    std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw LoadError("values: non-finite value in sample " + std::to_string(static_cast<std::int64_t>(i) / (c * w)));
    }
  }
  if (num_classes < 0) throw LoadError("k: must be non-negative");
  if (labels) {
    if (num_classes < 1) throw LoadError("k: labeled set needs k >= 1");
    if (static_cast<std::int64_t>(labels->size()) != n) {
      throw LoadError("labels: expected " + std::to_string(n) + " entries, found " + std::to_string(labels->size()));
    }
    for (std::size_t i = 0; i < labels->size(); ++i) {
      const int l = (*labels)[i];
      if (l < 0 || l >= num_classes) {
        throw LoadError("labels: label out of range (sample " + std::to_string(i) + " has label " + std::to_string(l) +
                        ", k=" + std::to_string(num_classes) + ")");
      }
    }
  }
  if (class_names && static_cast<int>(class_names->size()) != num_classes) {
    throw LoadError("class_names: expected " + std::to_string(num_classes) + " names");
  }
  if (sampling_rate_hz && !(*sampling_rate_hz > 0.0 && std::isfinite(*sampling_rate_hz))) {
    throw LoadError("sampling_rate_hz: must be positive");
  }
  if (channel_names && static_cast<std::int64_t>(channel_names->size()) != c) {
    throw LoadError("channel_names: expected " + std::to_string(c) + " names");
  }
  if (norm_stats && (static_cast<std::int64_t>(norm_stats->mean.size()) != c ||
                     static_cast<std::int64_t>(norm_stats->std.size()) != c)) {
    throw LoadError("norm_stats: expected " + std::to_string(c) + " entries per field");
  }
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

void check_interval(const Interval& iv, const char* name) {
  if (!std::isfinite(iv.low) || !std::isfinite(iv.high) || !(iv.low < iv.high)) {
    throw ConfigError(std::string(name) + ": interval must be finite with low < high");
  }
}

void shuffle(std::vector<std::int64_t>& v, nn::Rng& rng) {
  for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
    std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(rng.index(i + 1))]);
  }
}

}  // namespace

SignalSet simulate_sine(const SineParams& p) {
  check_interval(p.freq_range, "freq_range");
  check_interval(p.phase_range, "phase_range");
  if (p.n_samples < 0 || p.length_w <= 0 || p.channels <= 0) {
    throw ConfigError("simulate_sine: n_samples >= 0, length_w > 0 and channels > 0 required");
  }
  nn::Rng rng(p.seed);
  SignalSet s(p.n_samples, p.channels, p.length_w);
  for (std::int64_t i = 0; i < s.n; ++i) {
    for (std::int64_t ch = 0; ch < s.c; ++ch) {
      const double a = rng.uniform(p.freq_range.low, p.freq_range.high);
      const double b = rng.uniform(p.phase_range.low, p.phase_range.high);
      for (std::int64_t t = 0; t < s.w; ++t) s.at(i, ch, t) = std::sin(a * static_cast<double>(t) + b);
    }
  }
  return s;
}

SignalSet simulate_bands(const BandParams& p) {
  if (p.bands.empty()) throw ConfigError("simulate_bands: at least one band required");
  for (const auto& b : p.bands) check_interval(b, "bands");
  check_interval(p.amplitude, "amplitude");
  if (p.n_per_class < 0 || p.length_w <= 0 || p.channels <= 0 || p.noise_std < 0) {
    throw ConfigError("simulate_bands: invalid sizes or noise level");
  }
  nn::Rng rng(p.seed);
  const auto k = static_cast<std::int64_t>(p.bands.size());
  std::vector<std::int64_t> order(static_cast<std::size_t>(k * p.n_per_class));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int64_t>(i);
  shuffle(order, rng);

  SignalSet s(k * p.n_per_class, p.channels, p.length_w);
  s.labels = std::vector<int>(static_cast<std::size_t>(s.n));
  s.num_classes = static_cast<int>(k);
  const double w = static_cast<double>(p.length_w);
  for (std::int64_t slot = 0; slot < s.n; ++slot) {
    const auto label = static_cast<int>(order[static_cast<std::size_t>(slot)] / p.n_per_class);
    (*s.labels)[static_cast<std::size_t>(slot)] = label;
    const Interval& band = p.bands[static_cast<std::size_t>(label)];
    for (std::int64_t ch = 0; ch < s.c; ++ch) {
      const double f = rng.uniform(band.low, band.high);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double amp = rng.uniform(p.amplitude.low, p.amplitude.high);
      for (std::int64_t t = 0; t < s.w; ++t) {
        s.at(slot, ch, t) = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / w + phase) +
                            p.noise_std * rng.normal();
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Container IO

namespace {

std::pair<fs::path, fs::path> container_paths(const fs::path& path) {
  fs::path stem = fs::is_directory(path) ? path / "signals" : path;
  if (stem.extension() == ".f32" || stem.extension() == ".json") stem.replace_extension();
  fs::path blob = stem;
  blob += ".f32";
  fs::path side = stem;
  side += ".json";
  return {blob, side};
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw LoadError(std::string(key) + ": " + e.what());
  }
}

std::int64_t required_int(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) throw LoadError(std::string(key) + ": missing or not an integer");
  return j.at(key).get<std::int64_t>();
}

}  // namespace

json sidecar_json(const SignalSet& s) {
  json j;
  j["n"] = s.n;
  j["c"] = s.c;
  j["w"] = s.w;
  j["k"] = s.num_classes;
  j["labels"] = s.labels ? json(*s.labels) : json(nullptr);
  j["class_names"] = s.class_names ? json(*s.class_names) : json(nullptr);
  j["sampling_rate_hz"] = s.sampling_rate_hz ? json(*s.sampling_rate_hz) : json(nullptr);
  j["channel_names"] = s.channel_names ? json(*s.channel_names) : json(nullptr);
  if (s.norm_stats) {
    j["norm_stats"] = {{"mean", s.norm_stats->mean}, {"std", s.norm_stats->std}};
  } else {
    j["norm_stats"] = nullptr;
  }
  return j;
}

void save_signal_set(const SignalSet& s, const fs::path& path) {
  s.validate();
  auto [blob, side] = container_paths(path);
  if (blob.has_parent_path()) fs::create_directories(blob.parent_path());
  std::ofstream os(blob, std::ios::binary);
  if (!os) throw LoadError("cannot write " + blob.string());
  for (double v : s.values) {
    float f = static_cast<float>(v);
    unsigned char bytes[4];
    std::memcpy(bytes, &f, 4);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 4);
    os.write(reinterpret_cast<const char*>(bytes), 4);
  }
  std::ofstream js(side);
  js << sidecar_json(s).dump(2) << '\n';
  if (!os || !js) throw LoadError("write failed for " + blob.string());
}

SignalSet load_signal_set(const fs::path& path) {
  auto [blob, side] = container_paths(path);
  if (!fs::exists(side)) throw LoadError("missing sidecar file: " + side.string());
  if (!fs::exists(blob)) throw LoadError("missing value file: " + blob.string());
  json j;
  try {
    std::ifstream is(side);
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw LoadError("sidecar: " + std::string(e.what()));
  }
  SignalSet s;
  s.n = required_int(j, "n");
  s.c = required_int(j, "c");
  s.w = required_int(j, "w");
  s.num_classes = static_cast<int>(j.contains("k") && !j.at("k").is_null() ? required_int(j, "k") : 0);
  s.labels = optional_field<std::vector<int>>(j, "labels");
  s.class_names = optional_field<std::vector<std::string>>(j, "class_names");
  s.sampling_rate_hz = optional_field<double>(j, "sampling_rate_hz");
  s.channel_names = optional_field<std::vector<std::string>>(j, "channel_names");
  if (j.contains("norm_stats") && !j.at("norm_stats").is_null()) {
    const auto& ns = j.at("norm_stats");
    auto mean = optional_field<std::vector<double>>(ns, "mean");
    auto sd = optional_field<std::vector<double>>(ns, "std");
    if (!mean || !sd) throw LoadError("norm_stats: mean and std required");
    s.norm_stats = NormStats{*mean, *sd};
  }
  if (s.n < 0 || s.c <= 0 || s.w <= 0) throw LoadError("shape: invalid dimensions in sidecar");

  const auto expected = static_cast<std::uintmax_t>(s.n * s.c * s.w) * 4u;
  const auto actual = fs::file_size(blob);
  if (actual != expected) {
    throw LoadError("values: shape (" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", 1, " + std::to_string(s.w) +
                    ") needs " + std::to_string(expected) + " bytes, file has " + std::to_string(actual));
  }
  std::ifstream is(blob, std::ios::binary);
  std::vector<unsigned char> raw(static_cast<std::size_t>(actual));
  if (actual > 0 && !is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(actual))) {
    throw LoadError("values: read failed");
  }
  s.values.resize(static_cast<std::size_t>(s.n * s.c * s.w));
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    unsigned char* b = raw.data() + 4 * i;
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 4);
    float f;
    std::memcpy(&f, b, 4);
    s.values[i] = f;
  }
  s.validate();
  return s;
}

SignalSet import_csv(const fs::path& path, bool labeled) {
  std::ifstream is(path);
  if (!is) throw LoadError("missing CSV file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw LoadError("csv line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (labeled) {
      if (row.size() < 2) throw LoadError("csv line " + std::to_string(line_no) + ": need values and a label");
      const double l = row.back();
      if (l < 0 || l != std::floor(l)) throw LoadError("csv line " + std::to_string(line_no) + ": label must be a non-negative integer");
      labels.push_back(static_cast<int>(l));
      row.pop_back();
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw LoadError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) + " values");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw LoadError("csv: no rows in " + path.string());
  SignalSet s(static_cast<std::int64_t>(rows.size()), 1, static_cast<std::int64_t>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), s.values.begin() + static_cast<std::ptrdiff_t>(i * rows[i].size()));
  if (labeled) {
    s.num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    s.labels = std::move(labels);
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Preprocessing

NormStats channel_stats(const SignalSet& s) {
  NormStats st{std::vector<double>(static_cast<std::size_t>(s.c), 0.0), std::vector<double>(static_cast<std::size_t>(s.c), 0.0)};
  const double count = static_cast<double>(s.n * s.w);
  if (count == 0) throw NormalizationError("cannot compute channel statistics of an empty set");
  for (std::int64_t ch = 0; ch < s.c; ++ch) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < s.n; ++i)
      for (std::int64_t t = 0; t < s.w; ++t) sum += s.at(i, ch, t);
    const double mean = sum / count;
    double sq = 0.0;
    for (std::int64_t i = 0; i < s.n; ++i)
      for (std::int64_t t = 0; t < s.w; ++t) {
        const double d = s.at(i, ch, t) - mean;
        sq += d * d;
      }
    st.mean[static_cast<std::size_t>(ch)] = mean;
    st.std[static_cast<std::size_t>(ch)] = std::sqrt(sq / count);
  }
  return st;
}

SignalSet apply_normalization(const SignalSet& s, const NormStats& stats) {
  if (static_cast<std::int64_t>(stats.mean.size()) != s.c || static_cast<std::int64_t>(stats.std.size()) != s.c) {
    throw NormalizationError("normalization statistics have " + std::to_string(stats.mean.size()) +
                             " channels, set has " + std::to_string(s.c));
  }
  for (std::int64_t ch = 0; ch < s.c; ++ch) {
    const double sd = stats.std[static_cast<std::size_t>(ch)];
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      const std::string name = s.channel_names ? " (" + (*s.channel_names)[static_cast<std::size_t>(ch)] + ")" : "";
      throw NormalizationError("channel " + std::to_string(ch) + name + " has zero variance");
    }
  }
  SignalSet out = s;
  for (std::int64_t i = 0; i < s.n; ++i)
    for (std::int64_t ch = 0; ch < s.c; ++ch)
      for (std::int64_t t = 0; t < s.w; ++t)
        out.at(i, ch, t) = (s.at(i, ch, t) - stats.mean[static_cast<std::size_t>(ch)]) / stats.std[static_cast<std::size_t>(ch)];
  out.norm_stats = stats;
  return out;
}

SignalSet normalize_channels(const SignalSet& s) { return apply_normalization(s, channel_stats(s)); }

SignalSet crop_window(const SignalSet& s, std::int64_t start, std::int64_t end) {
  if (start < 0 || end > s.w || start >= end) {
    throw BoundsError("crop window [" + std::to_string(start) + ", " + std::to_string(end) + ") invalid for W=" +
                      std::to_string(s.w));
  }
  SignalSet out = s;
  out.w = end - start;
  out.values.assign(static_cast<std::size_t>(s.n * s.c * out.w), 0.0);
  for (std::int64_t i = 0; i < s.n; ++i)
    for (std::int64_t ch = 0; ch < s.c; ++ch)
      for (std::int64_t t = 0; t < out.w; ++t) out.at(i, ch, t) = s.at(i, ch, start + t);
  return out;
}

std::vector<std::int64_t> class_counts(const SignalSet& s) {
  if (!s.labels) throw UsageError("class_counts: set has no labels");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(s.num_classes), 0);
  for (int l : *s.labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

SignalSet subset(const SignalSet& s, const std::vector<std::int64_t>& indices) {
  SignalSet out = s;
  out.n = static_cast<std::int64_t>(indices.size());
  out.values.assign(static_cast<std::size_t>(out.n * s.c * s.w), 0.0);
  if (s.labels) out.labels = std::vector<int>(indices.size());
  const std::int64_t stride = s.c * s.w;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::int64_t i = indices[k];
    if (i < 0 || i >= s.n) throw BoundsError("subset index " + std::to_string(i) + " out of range");
    std::copy_n(s.values.begin() + i * stride, stride, out.values.begin() + static_cast<std::int64_t>(k) * stride);
    if (s.labels) (*out.labels)[k] = (*s.labels)[static_cast<std::size_t>(i)];
  }
  return out;
}

SignalSet concat_sets(const SignalSet& a, const SignalSet& b) {
  if (a.c != b.c || a.w != b.w) throw UsageError("concat_sets: shape mismatch");
  if (a.labeled() != b.labeled()) throw UsageError("concat_sets: cannot mix labeled and unlabeled sets");
  SignalSet out = a;
  out.n = a.n + b.n;
  out.values.insert(out.values.end(), b.values.begin(), b.values.end());
  if (a.labels) {
    out.num_classes = std::max(a.num_classes, b.num_classes);
    out.labels->insert(out.labels->end(), b.labels->begin(), b.labels->end());
  }
  return out;
}

SignalSet resample_balanced(const SignalSet& s, std::int64_t per_class, std::uint64_t seed) {
  if (!s.labels) throw UsageError("resample_balanced requires a labeled set");
  if (per_class < 0) throw UsageError("resample_balanced: per_class must be non-negative");
  nn::Rng rng(seed);
  std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(s.num_classes));
  for (std::int64_t i = 0; i < s.n; ++i) by_class[static_cast<std::size_t>((*s.labels)[static_cast<std::size_t>(i)])].push_back(i);

  std::vector<std::int64_t> picked;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& members = by_class[k];
    const auto have = static_cast<std::int64_t>(members.size());
    if (per_class > 0 && have == 0) throw UsageError("resample_balanced: class " + std::to_string(k) + " has no samples");
    if (have >= per_class) {
      // Partial Fisher-Yates: the first per_class slots become the draw.
      for (std::int64_t i = 0; i < per_class; ++i) {
        std::swap(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(i + rng.index(have - i))]);
        picked.push_back(members[static_cast<std::size_t>(i)]);
      }
    } else {
      for (std::int64_t i = 0; i < per_class; ++i) picked.push_back(members[static_cast<std::size_t>(rng.index(have))]);
    }
  }
  shuffle(picked, rng);
  return subset(s, picked);
}

std::pair<SignalSet, SignalSet> split_per_class(const SignalSet& s, std::int64_t first_per_class, std::uint64_t seed) {
  if (!s.labels) throw UsageError("split_per_class requires a labeled set");
  nn::Rng rng(seed);
  std::vector<std::int64_t> order(static_cast<std::size_t>(s.n));
  for (std::int64_t i = 0; i < s.n; ++i) order[static_cast<std::size_t>(i)] = i;
  shuffle(order, rng);
  std::vector<std::int64_t> taken(static_cast<std::size_t>(s.num_classes), 0);
  std::vector<std::int64_t> first, rest;
  for (auto i : order) {
    auto& t = taken[static_cast<std::size_t>((*s.labels)[static_cast<std::size_t>(i)])];
    if (t < first_per_class) {
      first.push_back(i);
      ++t;
    } else {
      rest.push_back(i);
    }
  }
  for (std::size_t k = 0; k < taken.size(); ++k) {
    if (taken[k] < first_per_class) {
      throw UsageError("split_per_class: class " + std::to_string(k) + " has only " + std::to_string(taken[k]) +
                       " samples, need " + std::to_string(first_per_class));
    }
  }
  return {subset(s, first), subset(s, rest)};
}

}  // namespace ttslab::data
