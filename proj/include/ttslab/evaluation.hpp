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

// Real-vs-synthetic comparisons: 2-D projections, fusion maps, and the
// downstream classification case study.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttslab/autodiff.hpp"
#include "ttslab/nn.hpp"
#include "ttslab/signal_data.hpp"

namespace ttslab::eval {

enum class Origin { Real, Synthetic };
enum class ProjectionMethod { Pca, Tsne };
std::string to_string(ProjectionMethod m);
ProjectionMethod parse_projection(const std::string& name);

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  /// Unset: n / (4 * early_exaggeration), floored at 1.
  std::optional<double> learning_rate;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
};

struct Projection2D {
  /// Row-major (n_real + n_syn, 2); real samples first.
  std::vector<double> points;
  std::vector<Origin> origin;
  /// -1 where the source set is unlabeled.
  std::vector<int> labels;
  ProjectionMethod method = ProjectionMethod::Pca;
  nlohmann::json method_params;
  std::int64_t size() const { return static_cast<std::int64_t>(origin.size()); }
};

/// Flattens every sample to a C*W vector and projects the union of both sets.
Projection2D project_2d(const data::SignalSet& real, const data::SignalSet& syn, ProjectionMethod method,
                        std::uint64_t seed, const TsneParams& tsne = {});

/// Top-k principal component scores of row-major (n, d) data, columns ordered
/// by decreasing eigenvalue. Each component's sign is fixed so its largest
/// absolute loading is positive.
std::vector<double> pca_scores(const std::vector<double>& x, std::int64_t n, std::int64_t d, int k,
                               std::vector<double>* eigenvalues = nullptr);
double tsne_learning_rate(std::int64_t n, const TsneParams& params);
/// Exact t-SNE of row-major (n, d) data into 2-D.
std::vector<double> tsne(const std::vector<double>& x, std::int64_t n, std::int64_t d, std::uint64_t seed,
                         const TsneParams& params);

struct FusionMap {
  std::int64_t value_bins = 0;
  std::int64_t time_bins = 0;
  double lo = 0.0;
  double hi = 0.0;
  /// counts[v * time_bins + t]; v = 0 is the lowest value bin.
  std::vector<std::int64_t> counts;
  std::int64_t at(std::int64_t v, std::int64_t t) const { return counts[static_cast<std::size_t>(v * time_bins + t)]; }
};

/// 2-D histogram of (timestep, value) pairs of one channel over all samples.
/// Values outside the range land in the boundary bins. Without a range the
/// set's own minimum and maximum are used.
FusionMap fusion_map(const data::SignalSet& s, std::int64_t time_bins, std::int64_t value_bins,
                     std::optional<std::pair<double, double>> value_range = std::nullopt, std::int64_t channel = 0);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct Metrics {
  int k = 0;
  /// confusion[t * k + p]: true class t predicted as p.
  std::vector<std::int64_t> confusion;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Undefined ratios (no predictions or no support) are reported as 0.
Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted, int k);

struct ClassifierConfig {
  std::vector<std::int64_t> widths{16, 32, 64};
  std::int64_t kernel = 5;
  double lr = 1e-3;
  int epochs = 30;
  std::int64_t batch_size = 64;
};

/// Convolutional sequence classifier: per block a same-padded convolution,
/// ReLU and max-pool by 2, then global average pooling and a linear head.
class ConvClassifier {
 public:
  ConvClassifier(std::int64_t channels, std::int64_t length, int num_classes, const ClassifierConfig& cfg,
                 std::uint64_t seed);
  /// x: [B, C, 1, W] -> logits [B, K].
  ad::Var logits(const ad::Var& x) const;
  void fit(const data::SignalSet& train, std::uint64_t seed);
  std::vector<int> predict(const data::SignalSet& s) const;
  nn::ParameterSet& params() { return params_; }

 private:
  struct Conv {
    ad::Var weight;  // [kernel * in, out]
    ad::Var bias;    // [out]
    std::int64_t in = 0, out = 0;
  };
  std::int64_t channels_, length_;
  int k_;
  ClassifierConfig cfg_;
  nn::ParameterSet params_;
  std::vector<Conv> convs_;
  nn::Linear head_;
};

enum class CaseMode { RealOnly, SyntheticOnly, SmallReal, Mixed };
std::string to_string(CaseMode m);
CaseMode parse_case_mode(const std::string& name);

/// Training-set composition per mode, in samples over all classes.
struct CaseCounts {
  std::int64_t a_real = 5000;
  std::int64_t b_synthetic = 5000;
  std::int64_t c_real = 1000;
  std::int64_t d_real = 1000;
  std::int64_t d_synthetic = 4000;
  /// Divides every count above.
  std::int64_t divisor = 1;
};

struct CaseStudyReport {
  CaseMode mode = CaseMode::RealOnly;
  std::int64_t real_count = 0;
  std::int64_t synthetic_count = 0;
  std::vector<std::int64_t> train_per_class;
  Metrics metrics;
};

/// Composes a class-balanced training set for `mode`, trains a fresh
/// ConvClassifier and scores it on `test`.
CaseStudyReport case_study(const data::SignalSet& real_train, const data::SignalSet& syn_train,
                           const data::SignalSet& test, CaseMode mode, std::uint64_t seed,
                           const CaseCounts& counts = {}, const ClassifierConfig& cfg = {});

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const CaseStudyReport& r);

// Artifact writers.
void write_projection_csv(const Projection2D& p, const std::filesystem::path& path);
void write_projection_svg(const Projection2D& p, const std::filesystem::path& path);
void write_fusion_csv(const FusionMap& m, const std::filesystem::path& path);
void write_fusion_svg(const FusionMap& m, const std::filesystem::path& path);
/// Grid of line plots, one panel per sample (all channels overlaid).
void write_signals_svg(const data::SignalSet& s, std::int64_t count, const std::filesystem::path& path);
void write_confusion_svg(const Metrics& m, const std::filesystem::path& path);

}  // namespace ttslab::eval
