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

#include "ttslab/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ttslab/errors.hpp"
#include "ttslab/training.hpp"

namespace ttslab::eval {

using ad::Shape;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

std::string to_string(ProjectionMethod m) { return m == ProjectionMethod::Pca ? "pca" : "tsne"; }

ProjectionMethod parse_projection(const std::string& name) {
  if (name == "pca") return ProjectionMethod::Pca;
  if (name == "tsne" || name == "t-sne") return ProjectionMethod::Tsne;
  throw ConfigError("unknown projection method '" + name + "' (expected pca or tsne)");
}

// ---------------------------------------------------------------------------
// Projections

std::vector<double> pca_scores(const std::vector<double>& x, std::int64_t n, std::int64_t d, int k,
                               std::vector<double>* eigenvalues) {
  if (n < 1 || d < k) throw UsageError("pca: need at least one sample and d >= k");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> data(x.data(), n, d);
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const RowMat centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw UsageError("pca: eigen decomposition failed");
  // Eigenvalues come out ascending.
  Eigen::MatrixXd basis(d, k);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(c) = v;
    if (eigenvalues) eigenvalues->push_back(solver.eigenvalues()(d - 1 - c));
  }
  const RowMat scores = centered * basis;
  return std::vector<double>(scores.data(), scores.data() + scores.size());
}

namespace {

// Conditional probabilities p_{j|i} with per-row precision chosen so the
// row entropy matches log(perplexity).
std::vector<double> tsne_affinities(const std::vector<double>& dist, std::int64_t n, double perplexity) {
  std::vector<double> p(static_cast<std::size_t>(n * n), 0.0);
  const double target = std::log(perplexity);
  for (std::int64_t i = 0; i < n; ++i) {
    double beta = 1.0, lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    const double* row = dist.data() + i * n;
    double* prow = p.data() + i * n;
    // Subtracting the row minimum keeps the exponentials representable.
    double dmin = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, row[j]);
    for (int iter = 0; iter < 100; ++iter) {
      double sum = 0.0, weighted = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        prow[j] = j == i ? 0.0 : std::exp(-beta * (row[j] - dmin));
        sum += prow[j];
        weighted += prow[j] * (row[j] - dmin);
      }
      const double h = std::log(sum) + beta * weighted / sum;
      for (std::int64_t j = 0; j < n; ++j) prow[j] /= sum;
      const double diff = h - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2 : (beta + hi) / 2;
      } else {
        hi = beta;
        beta = std::isinf(lo) ? beta / 2 : (beta + lo) / 2;
      }
    }
  }
  return p;
}

}  // namespace

double tsne_learning_rate(std::int64_t n, const TsneParams& params) {
  return params.learning_rate.value_or(std::max(1.0, static_cast<double>(n) / (4.0 * params.early_exaggeration)));
}

std::vector<double> tsne(const std::vector<double>& x, std::int64_t n, std::int64_t d, std::uint64_t seed,
                         const TsneParams& params) {
  if (n < 3) throw UsageError("tsne: need at least 3 samples");
  std::vector<double> dist(static_cast<std::size_t>(n * n), 0.0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::int64_t k = 0; k < d; ++k) {
        const double diff = x[static_cast<std::size_t>(i * d + k)] - x[static_cast<std::size_t>(j * d + k)];
        s += diff * diff;
      }
      dist[static_cast<std::size_t>(i * n + j)] = dist[static_cast<std::size_t>(j * n + i)] = s;
    }
  const double perplexity = std::min(params.perplexity, static_cast<double>(n - 1) / 3.0);
  auto cond = tsne_affinities(dist, n, std::max(perplexity, 1.0));
  std::vector<double> p(cond.size());
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      const double v = (cond[static_cast<std::size_t>(i * n + j)] + cond[static_cast<std::size_t>(j * n + i)]) / (2.0 * n);
      p[static_cast<std::size_t>(i * n + j)] = std::max(v, 1e-12);
    }

  const double lr = tsne_learning_rate(n, params);
  nn::Rng rng(seed);
  std::vector<double> y(static_cast<std::size_t>(2 * n)), update(y.size(), 0.0), gains(y.size(), 1.0), grad(y.size());
  for (double& v : y) v = 1e-4 * rng.normal();
  std::vector<double> num(static_cast<std::size_t>(n * n));
  for (int iter = 0; iter < params.iterations; ++iter) {
    const double exaggeration = iter < params.exaggeration_iters ? params.early_exaggeration : 1.0;
    const double momentum = iter < params.exaggeration_iters ? 0.5 : 0.8;
    double zsum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      num[static_cast<std::size_t>(i * n + i)] = 0.0;
      for (std::int64_t j = i + 1; j < n; ++j) {
        const double dx = y[static_cast<std::size_t>(2 * i)] - y[static_cast<std::size_t>(2 * j)];
        const double dy = y[static_cast<std::size_t>(2 * i + 1)] - y[static_cast<std::size_t>(2 * j + 1)];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        num[static_cast<std::size_t>(i * n + j)] = num[static_cast<std::size_t>(j * n + i)] = q;
        zsum += 2.0 * q;
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double q = num[static_cast<std::size_t>(i * n + j)];
        const double mult = (exaggeration * p[static_cast<std::size_t>(i * n + j)] - q / zsum) * q;
        gx += mult * (y[static_cast<std::size_t>(2 * i)] - y[static_cast<std::size_t>(2 * j)]);
        gy += mult * (y[static_cast<std::size_t>(2 * i + 1)] - y[static_cast<std::size_t>(2 * j + 1)]);
      }
      grad[static_cast<std::size_t>(2 * i)] = 4.0 * gx;
      grad[static_cast<std::size_t>(2 * i + 1)] = 4.0 * gy;
    }
    for (std::size_t k = 0; k < y.size(); ++k) {
      const bool same_sign = (grad[k] > 0) == (update[k] > 0);
      gains[k] = std::max(same_sign ? gains[k] * 0.8 : gains[k] + 0.2, 0.01);
      update[k] = momentum * update[k] - lr * gains[k] * grad[k];
      y[k] += update[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mx += y[static_cast<std::size_t>(2 * i)], my += y[static_cast<std::size_t>(2 * i + 1)];
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) y[static_cast<std::size_t>(2 * i)] -= mx, y[static_cast<std::size_t>(2 * i + 1)] -= my;
  }
  return y;
}

Projection2D project_2d(const data::SignalSet& real, const data::SignalSet& syn, ProjectionMethod method,
                        std::uint64_t seed, const TsneParams& tsne_params) {
  if (real.c != syn.c || real.w != syn.w) throw UsageError("project_2d: real and synthetic shapes differ");
  const std::int64_t n = real.n + syn.n;
  if (n < 3) throw UsageError("project_2d: need at least 3 samples in total, got " + std::to_string(n));
  const std::int64_t d = real.c * real.w;
  std::vector<double> x(real.values);
  x.insert(x.end(), syn.values.begin(), syn.values.end());

  Projection2D out;
  out.method = method;
  for (std::int64_t i = 0; i < n; ++i) {
    const bool is_real = i < real.n;
    out.origin.push_back(is_real ? Origin::Real : Origin::Synthetic);
    const auto& src = is_real ? real : syn;
    const auto idx = static_cast<std::size_t>(is_real ? i : i - real.n);
    out.labels.push_back(src.labels ? (*src.labels)[idx] : -1);
  }
  if (method == ProjectionMethod::Pca) {
    std::vector<double> ev;
    out.points = pca_scores(x, n, d, 2, &ev);
    out.method_params = json{{"explained_variance", ev}};
  } else {
    const double lr = tsne_learning_rate(n, tsne_params);
    out.points = tsne(x, n, d, seed, tsne_params);
    out.method_params = json{{"perplexity", tsne_params.perplexity},
                             {"iterations", tsne_params.iterations},
                             {"learning_rate", lr},
                             {"seed", seed}};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fusion maps

FusionMap fusion_map(const data::SignalSet& s, std::int64_t time_bins, std::int64_t value_bins,
                     std::optional<std::pair<double, double>> value_range, std::int64_t channel) {
  if (s.n == 0) throw UsageError("fusion_map: empty signal set");
  if (time_bins <= 0 || value_bins <= 0) throw UsageError("fusion_map: bin counts must be positive");
  if (channel < 0 || channel >= s.c) throw UsageError("fusion_map: channel " + std::to_string(channel) + " out of range");
  FusionMap m;
  m.time_bins = time_bins;
  m.value_bins = value_bins;
  if (value_range) {
    m.lo = value_range->first;
    m.hi = value_range->second;
  } else {
    m.lo = std::numeric_limits<double>::infinity();
    m.hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < s.n; ++i)
      for (std::int64_t t = 0; t < s.w; ++t) m.lo = std::min(m.lo, s.at(i, channel, t)), m.hi = std::max(m.hi, s.at(i, channel, t));
    if (m.lo == m.hi) {
      m.lo -= 0.5;
      m.hi += 0.5;
    }
  }
  if (!std::isfinite(m.lo) || !std::isfinite(m.hi) || !(m.lo < m.hi)) throw UsageError("fusion_map: invalid value range");
  m.counts.assign(static_cast<std::size_t>(time_bins * value_bins), 0);
  const double width = (m.hi - m.lo) / static_cast<double>(value_bins);
  for (std::int64_t i = 0; i < s.n; ++i) {
    for (std::int64_t t = 0; t < s.w; ++t) {
      const std::int64_t tb = t * time_bins / s.w;
      const auto vb = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((s.at(i, channel, t) - m.lo) / width)), 0,
                                               value_bins - 1);
      ++m.counts[static_cast<std::size_t>(vb * time_bins + tb)];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Metrics

Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted, int k) {
  if (truth.size() != predicted.size()) throw UsageError("compute_metrics: length mismatch");
  if (k <= 0) throw UsageError("compute_metrics: need at least one class");
  Metrics m;
  m.k = k;
  m.confusion.assign(static_cast<std::size_t>(k * k), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k) {
      throw UsageError("compute_metrics: label out of range");
    }
    ++m.confusion[static_cast<std::size_t>(truth[i] * k + predicted[i])];
  }
  std::int64_t correct = 0;
  for (int c = 0; c < k; ++c) {
    std::int64_t row = 0, col = 0;
    for (int j = 0; j < k; ++j) {
      row += m.confusion[static_cast<std::size_t>(c * k + j)];
      col += m.confusion[static_cast<std::size_t>(j * k + c)];
    }
    const auto tp = m.confusion[static_cast<std::size_t>(c * k + c)];
    correct += tp;
    ClassMetrics cm;
    cm.support = row;
    cm.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    cm.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    cm.f1 = cm.precision + cm.recall > 0 ? 2 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    m.per_class.push_back(cm);
    m.macro_f1 += cm.f1 / k;
  }
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  return m;
}

// ---------------------------------------------------------------------------
// Reference classifier

namespace {

// Same-padded sliding windows of a channels-last [B, L, C] tensor:
// out[b, l, k * C + c] = x[b, l + k - pad, c].
Var im2col(const Var& x, std::int64_t kernel) {
  const std::int64_t b = x.dim(0), l = x.dim(1), c = x.dim(2);
  const std::int64_t pad = kernel / 2;
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(static_cast<std::size_t>(b * l * kernel * c));
  for (std::int64_t i = 0; i < b; ++i)
    for (std::int64_t t = 0; t < l; ++t)
      for (std::int64_t k = 0; k < kernel; ++k) {
        const std::int64_t src = t + k - pad;
        for (std::int64_t ch = 0; ch < c; ++ch) idx->push_back(src < 0 || src >= l ? -1 : (i * l + src) * c + ch);
      }
  return ad::gather(x, idx, {b, l, kernel * c});
}

Var max_pool2(const Var& x) {
  const std::int64_t b = x.dim(0), l = x.dim(1), c = x.dim(2), half = l / 2;
  auto even = std::make_shared<std::vector<std::int64_t>>();
  auto odd = std::make_shared<std::vector<std::int64_t>>();
  for (std::int64_t i = 0; i < b; ++i)
    for (std::int64_t t = 0; t < half; ++t)
      for (std::int64_t ch = 0; ch < c; ++ch) {
        even->push_back((i * l + 2 * t) * c + ch);
        odd->push_back((i * l + 2 * t + 1) * c + ch);
      }
  Var a = ad::gather(x, even, {b, half, c});
  Var o = ad::gather(x, odd, {b, half, c});
  return o + ad::relu(a - o);
}

}  // namespace

ConvClassifier::ConvClassifier(std::int64_t channels, std::int64_t length, int num_classes, const ClassifierConfig& cfg,
                               std::uint64_t seed)
    : channels_(channels), length_(length), k_(num_classes), cfg_(cfg) {
  if (num_classes < 1) throw UsageError("classifier needs at least one class");
  if (cfg.widths.empty() || cfg.kernel < 1) throw ConfigError("classifier needs at least one block and kernel >= 1");
  if ((length >> cfg.widths.size()) < 1) {
    throw UsageError("sequence length " + std::to_string(length) + " is too short for " + std::to_string(cfg.widths.size()) +
                     " pooling blocks");
  }
  nn::Rng rng(seed);
  std::int64_t in = channels;
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    const std::int64_t out = cfg.widths[i];
    const double std = std::sqrt(2.0 / static_cast<double>(cfg.kernel * in));
    Tensor w({cfg.kernel * in, out});
    for (double& v : w.data()) v = std * rng.normal();
    Conv conv;
    conv.weight = params_.add("conv" + std::to_string(i) + ".weight", w);
    conv.bias = params_.add("conv" + std::to_string(i) + ".bias", Tensor({out}));
    conv.in = in;
    conv.out = out;
    convs_.push_back(conv);
    in = out;
  }
  head_ = nn::Linear(params_, "head", in, num_classes, rng);
}

Var ConvClassifier::logits(const Var& x) const {
  const std::int64_t b = x.dim(0);
  if (x.shape() != Shape{b, channels_, 1, length_}) {
    throw UsageError("classifier expects [B, " + std::to_string(channels_) + ", 1, " + std::to_string(length_) + "], got " +
                     ad::shape_str(x.shape()));
  }
  Var h = ad::permute(ad::reshape(x, {b, channels_, length_}), {0, 2, 1});
  for (const auto& conv : convs_) {
    const std::int64_t l = h.dim(1);
    Var cols = ad::reshape(im2col(h, cfg_.kernel), {b * l, cfg_.kernel * conv.in});
    Var y = ad::matmul(cols, conv.weight);
    y = y + ad::expand_rows(conv.bias, y.shape());
    h = max_pool2(ad::relu(ad::reshape(y, {b, l, conv.out})));
  }
  const std::int64_t l = h.dim(1);
  Var pooled = ad::scale(ad::sum_last(ad::permute(h, {0, 2, 1})), 1.0 / static_cast<double>(l));
  return head_(pooled);
}

void ConvClassifier::fit(const data::SignalSet& train, std::uint64_t seed) {
  if (!train.labels) throw UsageError("classifier training needs labels");
  if (train.c != channels_ || train.w != length_) throw UsageError("classifier: training data shape mismatch");
  if (train.n == 0) throw UsageError("classifier: empty training set");
  nn::Adam opt(params_, nn::AdamConfig{cfg_.lr, 0.9, 0.999});
  nn::Rng rng(seed);
  std::vector<std::int64_t> order(static_cast<std::size_t>(train.n));
  const std::int64_t row = train.c * train.w;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (std::int64_t i = 0; i < train.n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = train.n - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.index(i + 1))]);
    for (std::int64_t start = 0; start < train.n; start += cfg_.batch_size) {
      const std::int64_t bsz = std::min(cfg_.batch_size, train.n - start);
      Tensor x({bsz, train.c, 1, train.w});
      std::vector<int> y;
      for (std::int64_t k = 0; k < bsz; ++k) {
        const auto src = order[static_cast<std::size_t>(start + k)];
        std::copy_n(train.values.begin() + src * row, row, x.storage().begin() + k * row);
        y.push_back((*train.labels)[static_cast<std::size_t>(src)]);
      }
      Var loss = train::categorical_loss(logits(ad::constant(std::move(x))), y);
      if (!std::isfinite(loss.item())) throw TrainingError("classifier loss became non-finite in epoch " + std::to_string(epoch));
      opt.step(ad::grad(loss, params_.vars()));
    }
  }
}

std::vector<int> ConvClassifier::predict(const data::SignalSet& s) const {
  ad::NoGradGuard guard;
  std::vector<int> out;
  const std::int64_t row = s.c * s.w;
  for (std::int64_t start = 0; start < s.n; start += 256) {
    const std::int64_t bsz = std::min<std::int64_t>(256, s.n - start);
    Tensor x({bsz, s.c, 1, s.w});
    std::copy_n(s.values.begin() + start * row, bsz * row, x.storage().begin());
    Tensor l = logits(ad::constant(std::move(x))).value();
    for (std::int64_t i = 0; i < bsz; ++i) {
      int best = 0;
      for (int c = 1; c < k_; ++c)
        if (l[i * k_ + c] > l[i * k_ + best]) best = c;
      out.push_back(best);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Case study

std::string to_string(CaseMode m) {
  switch (m) {
    case CaseMode::RealOnly:
      return "a";
    case CaseMode::SyntheticOnly:
      return "b";
    case CaseMode::SmallReal:
      return "c";
    case CaseMode::Mixed:
      return "d";
  }
  return "?";
}

CaseMode parse_case_mode(const std::string& name) {
  if (name == "a" || name == "real-only") return CaseMode::RealOnly;
  if (name == "b" || name == "synthetic-only") return CaseMode::SyntheticOnly;
  if (name == "c" || name == "small-real") return CaseMode::SmallReal;
  if (name == "d" || name == "mixed") return CaseMode::Mixed;
  throw ConfigError("unknown case-study mode '" + name + "' (expected a, b, c or d)");
}

namespace {

// Class-balanced draw without replacement of `total` samples; the first
// total % K classes receive one extra sample.
data::SignalSet balanced_draw(const data::SignalSet& s, std::int64_t total, int k, nn::Rng& rng, const char* what) {
  if (total == 0) {
    data::SignalSet empty = data::subset(s, {});
    return empty;
  }
  if (!s.labels) throw UsageError(std::string(what) + " set must be labeled");
  std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(k));
  for (std::int64_t i = 0; i < s.n; ++i) {
    const int l = (*s.labels)[static_cast<std::size_t>(i)];
    if (l >= k) throw UsageError(std::string(what) + " set has label " + std::to_string(l) + " beyond the test classes");
    members[static_cast<std::size_t>(l)].push_back(i);
  }
  std::vector<std::int64_t> picked;
  for (int c = 0; c < k; ++c) {
    const std::int64_t need = total / k + (c < total % k ? 1 : 0);
    auto& m = members[static_cast<std::size_t>(c)];
    if (static_cast<std::int64_t>(m.size()) < need) {
      throw UsageError("insufficient " + std::string(what) + " samples for class " + std::to_string(c) + ": have " +
                       std::to_string(m.size()) + ", need " + std::to_string(need));
    }
    for (std::int64_t i = 0; i < need; ++i) {
      std::swap(m[static_cast<std::size_t>(i)], m[static_cast<std::size_t>(i + rng.index(static_cast<std::int64_t>(m.size()) - i))]);
      picked.push_back(m[static_cast<std::size_t>(i)]);
    }
  }
  return data::subset(s, picked);
}

}  // namespace

CaseStudyReport case_study(const data::SignalSet& real_train, const data::SignalSet& syn_train, const data::SignalSet& test,
                           CaseMode mode, std::uint64_t seed, const CaseCounts& counts, const ClassifierConfig& cfg) {
  if (!test.labels) throw UsageError("case study test set must be labeled");
  if (counts.divisor <= 0) throw ConfigError("case study divisor must be positive");
  if (real_train.c != test.c || real_train.w != test.w || syn_train.c != test.c || syn_train.w != test.w) {
    throw UsageError("case study sets differ in shape");
  }
  const int k = test.num_classes;
  std::int64_t real_n = 0, syn_n = 0;
  switch (mode) {
    case CaseMode::RealOnly:
      real_n = counts.a_real;
      break;
    case CaseMode::SyntheticOnly:
      syn_n = counts.b_synthetic;
      break;
    case CaseMode::SmallReal:
      real_n = counts.c_real;
      break;
    case CaseMode::Mixed:
      real_n = counts.d_real;
      syn_n = counts.d_synthetic;
      break;
  }
  real_n /= counts.divisor;
  syn_n /= counts.divisor;

  nn::Rng rng(seed);
  data::SignalSet real_part = balanced_draw(real_train, real_n, k, rng, "real");
  data::SignalSet syn_part = balanced_draw(syn_train, syn_n, k, rng, "synthetic");
  auto tag = [&](data::SignalSet& s) {
    if (!s.labels) s.labels = std::vector<int>();
    s.num_classes = k;
  };
  tag(real_part);
  tag(syn_part);
  data::SignalSet train_set = data::concat_sets(real_part, syn_part);

  CaseStudyReport r;
  r.mode = mode;
  r.real_count = real_n;
  r.synthetic_count = syn_n;
  r.train_per_class = data::class_counts(train_set);
  ConvClassifier clf(test.c, test.w, k, cfg, seed * 7 + 1);
  clf.fit(train_set, seed * 7 + 2);
  r.metrics = compute_metrics(*test.labels, clf.predict(test), k);
  return r;
}

json to_json(const Metrics& m) {
  json per = json::array();
  for (const auto& c : m.per_class) {
    per.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
  }
  json confusion = json::array();
  for (int t = 0; t < m.k; ++t) {
    confusion.push_back(std::vector<std::int64_t>(m.confusion.begin() + t * m.k, m.confusion.begin() + (t + 1) * m.k));
  }
  return json{{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"per_class", per}, {"confusion_matrix", confusion}};
}

json to_json(const CaseStudyReport& r) {
  json j = to_json(r.metrics);
  j["mode"] = to_string(r.mode);
  j["counts"] = {{"real", r.real_count}, {"synthetic", r.synthetic_count}, {"per_class", r.train_per_class}};
  return j;
}

}  // namespace ttslab::eval
