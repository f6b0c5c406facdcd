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

// Labeled multichannel signal sets: simulation, preprocessing and the
// on-disk container (<stem>.f32 raw little-endian floats + <stem>.json).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ttslab::data {

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  bool operator==(const NormStats&) const = default;
};

/// Batch of N sequences with C channels and W timesteps, laid out as
/// (N, C, 1, W) row-major. The singleton height axis is implicit.
struct SignalSet {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t w = 0;
  std::vector<double> values;
  std::optional<std::vector<int>> labels;
  /// Number of classes K; 0 when unlabeled.
  int num_classes = 0;
  std::optional<std::vector<std::string>> class_names;
  std::optional<double> sampling_rate_hz;
  std::optional<std::vector<std::string>> channel_names;
  std::optional<NormStats> norm_stats;

  SignalSet() = default;
  SignalSet(std::int64_t n, std::int64_t c, std::int64_t w);

  double& at(std::int64_t i, std::int64_t ch, std::int64_t t) { return values[static_cast<std::size_t>((i * c + ch) * w + t)]; }
  double at(std::int64_t i, std::int64_t ch, std::int64_t t) const {
    return values[static_cast<std::size_t>((i * c + ch) * w + t)];
  }
  std::int64_t sample_size() const { return c * w; }
  bool labeled() const { return labels.has_value(); }

  /// Throws LoadError naming the first violated invariant.
  void validate() const;
  bool operator==(const SignalSet&) const = default;
};

struct Interval {
  double low = 0.0;
  double high = 0.1;
};

struct SineParams {
  std::int64_t n_samples = 10000;
  std::int64_t length_w = 24;
  std::int64_t channels = 5;
  Interval freq_range{0.0, 0.1};
  Interval phase_range{0.0, 0.1};
  std::uint64_t seed = 0;
};

/// x_i(t) = sin(A_i t + B_i), t = 0..W-1, with A_i and B_i drawn
/// independently per (sample, channel).
SignalSet simulate_sine(const SineParams& params);

/// Toy labeled set: class k is a noisy sinusoid whose frequency (in cycles
/// per window) is drawn from bands[k].
struct BandParams {
  std::int64_t n_per_class = 500;
  std::int64_t length_w = 32;
  std::int64_t channels = 1;
  std::vector<Interval> bands{{1.5, 3.0}, {6.0, 9.0}};
  Interval amplitude{0.8, 1.2};
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

SignalSet simulate_bands(const BandParams& params);

/// `path` may be a stem (".f32"/".json" appended) or a directory holding
/// signals.f32 / signals.json.
SignalSet load_signal_set(const std::filesystem::path& path);
void save_signal_set(const SignalSet& s, const std::filesystem::path& path);

/// Header-only CSV import for single-channel data; one row per sample, the
/// last column is an integer label when `labeled`.
SignalSet import_csv(const std::filesystem::path& path, bool labeled);

nlohmann::json sidecar_json(const SignalSet& s);

/// Per-channel population mean/std over all samples and timesteps.
NormStats channel_stats(const SignalSet& s);
/// Normalizes each channel to mean 0 / std 1 using the set's own statistics
/// and records them in norm_stats.
SignalSet normalize_channels(const SignalSet& s);
/// Applies previously computed statistics (e.g. from a training split).
SignalSet apply_normalization(const SignalSet& s, const NormStats& stats);

SignalSet crop_window(const SignalSet& s, std::int64_t start, std::int64_t end);

/// Exactly per_class samples of every class: without replacement when the
/// class has enough samples, with replacement otherwise. Output order is
/// shuffled.
SignalSet resample_balanced(const SignalSet& s, std::int64_t per_class, std::uint64_t seed);

SignalSet subset(const SignalSet& s, const std::vector<std::int64_t>& indices);
/// Concatenates along the sample axis; shapes and class counts must agree.
SignalSet concat_sets(const SignalSet& a, const SignalSet& b);
/// Splits each class into disjoint parts: the first `first_per_class`
/// samples of each class (after a seeded shuffle) and the rest.
std::pair<SignalSet, SignalSet> split_per_class(const SignalSet& s, std::int64_t first_per_class, std::uint64_t seed);
std::vector<std::int64_t> class_counts(const SignalSet& s);

}  // namespace ttslab::data
