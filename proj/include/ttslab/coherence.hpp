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

// Analytic Morlet wavelet transform and smoothed wavelet coherence, plus the
// scalar and set-level reductions used to compare signal sets.

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "ttslab/signal_data.hpp"

namespace ttslab::coherence {

struct CwtSpec {
  double omega0 = 6.0;
  int voices_per_octave = 10;
  double min_period = 2.0;
  /// Defaults to W / 2 when unset.
  std::optional<double> max_period;
};

nlohmann::json to_json(const CwtSpec& spec);
CwtSpec cwt_spec_from_json(const nlohmann::json& j);

/// Period grid for a signal of length w: min_period * 2^(j / voices) for
/// j = 0 .. F-1, F = floor(log2(max/min) * voices) + 1.
struct ScaleGrid {
  std::vector<double> scales;
  std::vector<double> periods;
};
ScaleGrid scale_grid(const CwtSpec& spec, std::int64_t w);
/// Ratio period / scale of the Morlet wavelet.
double fourier_factor(double omega0);

/// Coefficients stored row-major as (F, W).
struct Cwt {
  std::int64_t f = 0;
  std::int64_t w = 0;
  std::vector<std::complex<double>> coeffs;
  ScaleGrid grid;
  std::complex<double> at(std::int64_t j, std::int64_t t) const { return coeffs[static_cast<std::size_t>(j * w + t)]; }
};

Cwt cwt_morlet(std::span<const double> x, const CwtSpec& spec);

struct CoherenceMatrix {
  std::int64_t f = 0;
  std::int64_t w = 0;
  std::vector<double> values;
  std::vector<double> scales;
  std::vector<double> periods;
  double at(std::int64_t j, std::int64_t t) const { return values[static_cast<std::size_t>(j * w + t)]; }
};

CoherenceMatrix wcoh(std::span<const double> x, std::span<const double> y, const CwtSpec& spec);

/// Coherence matrix of one channel, reduced by summing over time and then
/// averaging over scales.
double reduce_matrix(const CoherenceMatrix& m);

/// Multichannel signals laid out (C, W). Mean over channels of reduce_matrix.
double wcoh_s(std::span<const double> x, std::span<const double> y, std::int64_t channels, const CwtSpec& spec);

struct PairStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct SetScore {
  double wcoh_set = 0.0;
  std::int64_t n = 0;
  /// scores[i * n + j] = wcoh_s(A_i, B_j)
  std::vector<double> scores;
  PairStats stats;
};

/// Mean over i of the mean over j of wcoh_s(A_i, B_j). Pair scores may be
/// computed on `threads` workers; the reduction always runs in index order.
SetScore wcoh_set(const data::SignalSet& a, const data::SignalSet& b, const CwtSpec& spec, int threads = 1);

nlohmann::json report_json(const SetScore& score, const CwtSpec& spec, std::int64_t w);

}  // namespace ttslab::coherence
