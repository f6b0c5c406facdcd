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

#include "ttslab/coherence.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "ttslab/errors.hpp"

namespace ttslab::coherence {

using cd = std::complex<double>;
using nlohmann::json;

json to_json(const CwtSpec& spec) {
  json j;
  j["omega0"] = spec.omega0;
  j["voices_per_octave"] = spec.voices_per_octave;
  j["min_period"] = spec.min_period;
  j["max_period"] = spec.max_period ? json(*spec.max_period) : json(nullptr);
  return j;
}

CwtSpec cwt_spec_from_json(const json& j) {
  CwtSpec s;
  s.omega0 = j.value("omega0", s.omega0);
  s.voices_per_octave = j.value("voices_per_octave", s.voices_per_octave);
  s.min_period = j.value("min_period", s.min_period);
  if (j.contains("max_period") && !j.at("max_period").is_null()) s.max_period = j.at("max_period").get<double>();
  return s;
}

double fourier_factor(double omega0) {
  return 4.0 * std::numbers::pi / (omega0 + std::sqrt(2.0 + omega0 * omega0));
}

ScaleGrid scale_grid(const CwtSpec& spec, std::int64_t w) {
  if (!(spec.omega0 >= 5.0)) throw ConfigError("cwt: omega0 must be at least 5");
  if (spec.voices_per_octave < 1) throw ConfigError("cwt: voices_per_octave must be at least 1");
  if (w < 4) throw ConfigError("cwt: signal length " + std::to_string(w) + " is shorter than 4 samples");
  const double max_p = spec.max_period.value_or(static_cast<double>(w) / 2.0);
  if (!(spec.min_period > 0.0) || !(spec.min_period < max_p) || !std::isfinite(max_p)) {
    throw ConfigError("cwt: need 0 < min_period < max_period (got " + std::to_string(spec.min_period) + ", " +
                      std::to_string(max_p) + ")");
  }
  const auto count = static_cast<std::int64_t>(std::floor(std::log2(max_p / spec.min_period) * spec.voices_per_octave)) + 1;
  ScaleGrid g;
  const double ff = fourier_factor(spec.omega0);
  for (std::int64_t j = 0; j < count; ++j) {
    const double p = spec.min_period * std::exp2(static_cast<double>(j) / spec.voices_per_octave);
    g.periods.push_back(p);
    g.scales.push_back(p / ff);
  }
  return g;
}

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftBuffers {
  explicit FftBuffers(std::int64_t n)
      : in(fftw_alloc_complex(static_cast<std::size_t>(n))), out(fftw_alloc_complex(static_cast<std::size_t>(n))) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftBuffers() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(in);
    fftw_free(out);
  }
  FftBuffers(const FftBuffers&) = delete;
  FftBuffers& operator=(const FftBuffers&) = delete;

  fftw_complex* in;
  fftw_complex* out;
  fftw_plan forward;
  fftw_plan backward;
};

std::int64_t next_pow2(std::int64_t n) {
  std::int64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Row-wise smoothing of an (F, W) real field: Gaussian in time with standard
// deviation equal to the scale, then a normalized boxcar across scales.
class Smoother {
 public:
  Smoother(const ScaleGrid& grid, std::int64_t w, int voices) : f_(static_cast<std::int64_t>(grid.scales.size())), w_(w) {
    for (double s : grid.scales) {
      const auto half = std::min<std::int64_t>(static_cast<std::int64_t>(std::ceil(4.0 * s)), w - 1);
      std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
      double total = 0.0;
      for (std::int64_t t = -half; t <= half; ++t) {
        const double v = std::exp(-0.5 * static_cast<double>(t * t) / (s * s));
        k[static_cast<std::size_t>(t + half)] = v;
        total += v;
      }
      for (double& v : k) v /= total;
      time_kernels_.push_back(std::move(k));
    }
    const double steps = 0.6 * voices / 2.0;
    const double frac = steps - std::floor(steps);
    const auto ones = 2 * static_cast<std::int64_t>(std::round(steps)) - 1;
    scale_kernel_.push_back(frac);
    for (std::int64_t i = 0; i < ones; ++i) scale_kernel_.push_back(1.0);
    scale_kernel_.push_back(frac);
    double total = 0.0;
    for (double v : scale_kernel_) total += v;
    for (double& v : scale_kernel_) v /= total;
  }

  std::vector<double> operator()(const std::vector<double>& field) const {
    std::vector<double> timed(field.size(), 0.0);
    for (std::int64_t j = 0; j < f_; ++j) {
      const auto& k = time_kernels_[static_cast<std::size_t>(j)];
      const auto half = static_cast<std::int64_t>(k.size() / 2);
      const double* row = field.data() + j * w_;
      double* dst = timed.data() + j * w_;
      for (std::int64_t t = 0; t < w_; ++t) {
        const std::int64_t lo = std::max<std::int64_t>(-half, -t);
        const std::int64_t hi = std::min<std::int64_t>(half, w_ - 1 - t);
        double acc = 0.0;
        for (std::int64_t d = lo; d <= hi; ++d) acc += k[static_cast<std::size_t>(d + half)] * row[t + d];
        dst[t] = acc;
      }
    }
    std::vector<double> out(field.size(), 0.0);
    const auto half = static_cast<std::int64_t>(scale_kernel_.size() / 2);
    for (std::int64_t j = 0; j < f_; ++j) {
      double* dst = out.data() + j * w_;
      for (std::int64_t d = -half; d <= half; ++d) {
        const std::int64_t src = j + d;
        if (src < 0 || src >= f_) continue;
        const double c = scale_kernel_[static_cast<std::size_t>(d + half)];
        if (c == 0.0) continue;
        const double* row = timed.data() + src * w_;
        for (std::int64_t t = 0; t < w_; ++t) dst[t] += c * row[t];
      }
    }
    return out;
  }

 private:
  std::int64_t f_;
  std::int64_t w_;
  std::vector<std::vector<double>> time_kernels_;
  std::vector<double> scale_kernel_;
};

// Per-signal quantities that do not depend on the partner signal.
struct Prepared {
  Cwt cwt;
  std::vector<double> smoothed_power;
};

Prepared prepare(std::span<const double> x, const CwtSpec& spec, const Smoother& smooth) {
  Prepared p{cwt_morlet(x, spec), {}};
  std::vector<double> power(p.cwt.coeffs.size());
  for (std::size_t i = 0; i < power.size(); ++i) {
    const cd a = p.cwt.coeffs[i];
    power[i] = a.real() * a.real() + a.imag() * a.imag();
  }
  p.smoothed_power = smooth(power);
  return p;
}

CoherenceMatrix combine(const Prepared& x, const Prepared& y, const Smoother& smooth) {
  const std::size_t size = x.cwt.coeffs.size();
  std::vector<double> re(size), im(size);
  for (std::size_t i = 0; i < size; ++i) {
    // conj(a) * b written out so that a == b yields an exactly real product
    // equal to the power computed in prepare().
    const cd a = x.cwt.coeffs[i];
    const cd b = y.cwt.coeffs[i];
    re[i] = a.real() * b.real() + a.imag() * b.imag();
    im[i] = a.real() * b.imag() - a.imag() * b.real();
  }
  const auto sre = smooth(re);
  const auto sim = smooth(im);

  CoherenceMatrix m;
  m.f = x.cwt.f;
  m.w = x.cwt.w;
  m.scales = x.cwt.grid.scales;
  m.periods = x.cwt.grid.periods;
  m.values.resize(size);
  double max_den = 0.0;
  for (std::size_t i = 0; i < size; ++i) max_den = std::max(max_den, x.smoothed_power[i] * y.smoothed_power[i]);
  const double floor = std::max(std::numeric_limits<double>::epsilon() * max_den, std::numeric_limits<double>::min());
  for (std::size_t i = 0; i < size; ++i) {
    const double num = sre[i] * sre[i] + sim[i] * sim[i];
    const double den = std::max(x.smoothed_power[i] * y.smoothed_power[i], floor);
    m.values[i] = std::clamp(num / den, 0.0, 1.0);
  }
  return m;
}

void check_finite(std::span<const double> x, const char* name) {
  for (double v : x)
    if (!std::isfinite(v)) throw UsageError(std::string(name) + " contains non-finite values");
}

}  // namespace

Cwt cwt_morlet(std::span<const double> x, const CwtSpec& spec) {
  const auto w = static_cast<std::int64_t>(x.size());
  check_finite(x, "cwt input");
  Cwt out;
  out.grid = scale_grid(spec, w);
  out.w = w;
  out.f = static_cast<std::int64_t>(out.grid.scales.size());
  out.coeffs.assign(static_cast<std::size_t>(out.f * w), cd(0.0, 0.0));

  const std::int64_t n = next_pow2(w);
  FftBuffers buf(n);
  for (std::int64_t i = 0; i < n; ++i) {
    buf.in[i][0] = i < w ? x[static_cast<std::size_t>(i)] : 0.0;
    buf.in[i][1] = 0.0;
  }
  fftw_execute(buf.forward);
  std::vector<cd> spectrum(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) spectrum[static_cast<std::size_t>(k)] = cd(buf.out[k][0], buf.out[k][1]);

  const double norm0 = std::pow(std::numbers::pi, -0.25);
  for (std::int64_t j = 0; j < out.f; ++j) {
    const double s = out.grid.scales[static_cast<std::size_t>(j)];
    const double amp = norm0 * std::sqrt(2.0 * std::numbers::pi * s);
    for (std::int64_t k = 0; k < n; ++k) {
      // Only positive frequencies survive (analytic wavelet).
      double value = 0.0;
      if (k > 0 && k <= n / 2) {
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        const double d = s * omega - spec.omega0;
        value = amp * std::exp(-0.5 * d * d);
      }
      const cd v = spectrum[static_cast<std::size_t>(k)] * value;
      buf.in[k][0] = v.real();
      buf.in[k][1] = v.imag();
    }
    fftw_execute(buf.backward);
    for (std::int64_t t = 0; t < w; ++t)
      out.coeffs[static_cast<std::size_t>(j * w + t)] = cd(buf.out[t][0], buf.out[t][1]) / static_cast<double>(n);
  }
  return out;
}

CoherenceMatrix wcoh(std::span<const double> x, std::span<const double> y, const CwtSpec& spec) {
  if (x.size() != y.size()) {
    throw UsageError("wcoh: signals differ in length (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  const auto w = static_cast<std::int64_t>(x.size());
  const auto grid = scale_grid(spec, w);
  Smoother smooth(grid, w, spec.voices_per_octave);
  return combine(prepare(x, spec, smooth), prepare(y, spec, smooth), smooth);
}

double reduce_matrix(const CoherenceMatrix& m) {
  double total = 0.0;
  for (std::int64_t j = 0; j < m.f; ++j) {
    double row = 0.0;
    for (std::int64_t t = 0; t < m.w; ++t) row += m.at(j, t);
    total += row;
  }
  return total / static_cast<double>(m.f);
}

double wcoh_s(std::span<const double> x, std::span<const double> y, std::int64_t channels, const CwtSpec& spec) {
  if (channels <= 0 || x.size() != y.size() || x.size() % static_cast<std::size_t>(channels) != 0) {
    throw UsageError("wcoh_s: shape mismatch");
  }
  const auto w = static_cast<std::int64_t>(x.size()) / channels;
  double total = 0.0;
  for (std::int64_t ch = 0; ch < channels; ++ch) {
    total += reduce_matrix(wcoh(x.subspan(static_cast<std::size_t>(ch * w), static_cast<std::size_t>(w)),
                                y.subspan(static_cast<std::size_t>(ch * w), static_cast<std::size_t>(w)), spec));
  }
  return total / static_cast<double>(channels);
}

SetScore wcoh_set(const data::SignalSet& a, const data::SignalSet& b, const CwtSpec& spec, int threads) {
  if (a.n == 0 || b.n == 0) throw UsageError("wcoh_set: empty signal set");
  if (a.n != b.n) {
    throw UsageError("wcoh_set: sets must have equal sample counts (" + std::to_string(a.n) + " vs " + std::to_string(b.n) + ")");
  }
  if (a.c != b.c || a.w != b.w) throw UsageError("wcoh_set: shape mismatch between sets");
  const std::int64_t n = a.n, c = a.c, w = a.w;
  const auto grid = scale_grid(spec, w);
  Smoother smooth(grid, w, spec.voices_per_octave);

  auto prepare_set = [&](const data::SignalSet& s) {
    std::vector<Prepared> out;
    out.reserve(static_cast<std::size_t>(n * c));
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t ch = 0; ch < c; ++ch)
        out.push_back(prepare(std::span<const double>(s.values).subspan(static_cast<std::size_t>((i * c + ch) * w),
                                                                        static_cast<std::size_t>(w)),
                              spec, smooth));
    return out;
  };
  const auto pa = prepare_set(a);
  const auto pb = prepare_set(b);

  SetScore result;
  result.n = n;
  result.scores.assign(static_cast<std::size_t>(n * n), 0.0);
  auto pair_score = [&](std::int64_t i, std::int64_t j) {
    double total = 0.0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      total += reduce_matrix(combine(pa[static_cast<std::size_t>(i * c + ch)], pb[static_cast<std::size_t>(j * c + ch)], smooth));
    }
    return total / static_cast<double>(c);
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n * n)));
  if (workers == 1) {
    for (std::int64_t p = 0; p < n * n; ++p) result.scores[static_cast<std::size_t>(p)] = pair_score(p / n, p % n);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::int64_t p = t; p < n * n; p += workers) result.scores[static_cast<std::size_t>(p)] = pair_score(p / n, p % n);
      });
    }
    for (auto& th : pool) th.join();
  }

  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::int64_t j = 0; j < n; ++j) row += result.scores[static_cast<std::size_t>(i * n + j)];
    total += row / static_cast<double>(n);
  }
  result.wcoh_set = total / static_cast<double>(n);

  const auto [lo, hi] = std::minmax_element(result.scores.begin(), result.scores.end());
  double mean = 0.0;
  for (double s : result.scores) mean += s;
  mean /= static_cast<double>(result.scores.size());
  double var = 0.0;
  for (double s : result.scores) var += (s - mean) * (s - mean);
  result.stats = {*lo, *hi, mean, std::sqrt(var / static_cast<double>(result.scores.size()))};
  return result;
}

json report_json(const SetScore& score, const CwtSpec& spec, std::int64_t w) {
  json spec_j = to_json(spec);
  spec_j["resolved_max_period"] = spec.max_period.value_or(static_cast<double>(w) / 2.0);
  return json{{"wcoh_set", score.wcoh_set},
              {"n", score.n},
              {"spec", spec_j},
              {"per_pair_stats", {{"min", score.stats.min}, {"max", score.stats.max}, {"mean", score.stats.mean}, {"std", score.stats.std}}}};
}

}  // namespace ttslab::coherence
