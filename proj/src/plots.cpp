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


// CSV and SVG writers for evaluation artifacts.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ttslab/errors.hpp"
#include "ttslab/evaluation.hpp"

namespace ttslab::eval {

namespace {

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path.string());
  f.precision(10);
  return f;
}

class Svg {
 public:
  Svg(double width, double height) : width_(width), height_(height) {
    body_.precision(6);
  }
  std::ostringstream& body() { return body_; }
  void save(const std::filesystem::path& path) const {
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
      << "\" viewBox=\"0 0 " << width_ << ' ' << height_ << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
  }

 private:
  double width_, height_;
  std::ostringstream body_;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double map(double v, double a, double b) const {
    const double span = hi > lo ? hi - lo : 1.0;
    return a + (v - lo) / span * (b - a);
  }
};

// White to dark blue.
std::string heat(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(255 * (1 - t) + 8 * t);
  const int g = static_cast<int>(255 * (1 - t) + 48 * t);
  const int b = static_cast<int>(255 * (1 - t) + 107 * t);
  std::ostringstream s;
  s << "rgb(" << r << ',' << g << ',' << b << ')';
  return s.str();
}

}  // namespace

void write_projection_csv(const Projection2D& p, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << "x,y,origin,label\n";
  for (std::int64_t i = 0; i < p.size(); ++i) {
    f << p.points[static_cast<std::size_t>(2 * i)] << ',' << p.points[static_cast<std::size_t>(2 * i + 1)] << ','
      << (p.origin[static_cast<std::size_t>(i)] == Origin::Real ? "real" : "synthetic") << ','
      << p.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

void write_projection_svg(const Projection2D& p, const std::filesystem::path& path) {
  const double size = 480, margin = 30;
  Range rx, ry;
  for (std::int64_t i = 0; i < p.size(); ++i) {
    rx.add(p.points[static_cast<std::size_t>(2 * i)]);
    ry.add(p.points[static_cast<std::size_t>(2 * i + 1)]);
  }
  Svg svg(size, size + 20);
  auto& b = svg.body();
  b << "<text x=\"" << margin << "\" y=\"18\" font-size=\"12\">" << to_string(p.method)
    << ": real (blue) vs synthetic (orange)</text>\n";
  for (std::int64_t i = 0; i < p.size(); ++i) {
    const double x = rx.map(p.points[static_cast<std::size_t>(2 * i)], margin, size - margin);
    const double y = ry.map(p.points[static_cast<std::size_t>(2 * i + 1)], size - margin + 20, margin + 20);
    const bool real = p.origin[static_cast<std::size_t>(i)] == Origin::Real;
    b << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"2\" fill=\"" << (real ? kPalette[0] : kPalette[1])
      << "\" fill-opacity=\"0.6\"/>\n";
  }
  svg.save(path);
}

void write_fusion_csv(const FusionMap& m, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << "value_bin,value_lo,value_hi";
  for (std::int64_t t = 0; t < m.time_bins; ++t) f << ",t" << t;
  f << '\n';
  const double width = (m.hi - m.lo) / static_cast<double>(m.value_bins);
  for (std::int64_t v = 0; v < m.value_bins; ++v) {
    f << v << ',' << m.lo + v * width << ',' << m.lo + (v + 1) * width;
    for (std::int64_t t = 0; t < m.time_bins; ++t) f << ',' << m.at(v, t);
    f << '\n';
  }
}

void write_fusion_svg(const FusionMap& m, const std::filesystem::path& path) {
  const double cell_w = std::max(4.0, 480.0 / static_cast<double>(m.time_bins));
  const double cell_h = std::max(4.0, 320.0 / static_cast<double>(m.value_bins));
  const double top = 24;
  Svg svg(cell_w * static_cast<double>(m.time_bins), top + cell_h * static_cast<double>(m.value_bins));
  auto& b = svg.body();
  b << "<text x=\"4\" y=\"16\" font-size=\"12\">value range [" << m.lo << ", " << m.hi << "]</text>\n";
  const double peak = static_cast<double>(std::max<std::int64_t>(1, *std::max_element(m.counts.begin(), m.counts.end())));
  for (std::int64_t v = 0; v < m.value_bins; ++v) {
    for (std::int64_t t = 0; t < m.time_bins; ++t) {
      // log scale so sparse bins stay visible
      const double level = std::log1p(static_cast<double>(m.at(v, t))) / std::log1p(peak);
      const double y = top + static_cast<double>(m.value_bins - 1 - v) * cell_h;
      b << "<rect x=\"" << static_cast<double>(t) * cell_w << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\""
        << cell_h << "\" fill=\"" << heat(level) << "\"/>\n";
    }
  }
  svg.save(path);
}

void write_signals_svg(const data::SignalSet& s, std::int64_t count, const std::filesystem::path& path) {
  count = std::min(count, s.n);
  if (count <= 0) throw UsageError("write_signals_svg: nothing to plot");
  const std::int64_t cols = std::min<std::int64_t>(4, count);
  const std::int64_t rows = (count + cols - 1) / cols;
  const double pw = 200, ph = 120, pad = 10;
  Svg svg(static_cast<double>(cols) * pw, static_cast<double>(rows) * ph);
  auto& b = svg.body();
  for (std::int64_t i = 0; i < count; ++i) {
    const double ox = static_cast<double>(i % cols) * pw, oy = static_cast<double>(i / cols) * ph;
    Range r;
    for (std::int64_t ch = 0; ch < s.c; ++ch)
      for (std::int64_t t = 0; t < s.w; ++t) r.add(s.at(i, ch, t));
    b << "<rect x=\"" << ox + 2 << "\" y=\"" << oy + 2 << "\" width=\"" << pw - 4 << "\" height=\"" << ph - 4
      << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
    if (s.labels) {
      b << "<text x=\"" << ox + pad << "\" y=\"" << oy + pad + 6 << "\" font-size=\"10\">class "
        << (*s.labels)[static_cast<std::size_t>(i)] << "</text>\n";
    }
    for (std::int64_t ch = 0; ch < s.c; ++ch) {
      b << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << kPalette[ch % 10] << "\" points=\"";
      for (std::int64_t t = 0; t < s.w; ++t) {
        const double x = ox + pad + static_cast<double>(t) / static_cast<double>(std::max<std::int64_t>(1, s.w - 1)) * (pw - 2 * pad);
        const double y = r.map(s.at(i, ch, t), oy + ph - pad, oy + pad + 10);
        b << x << ',' << y << ' ';
      }
      b << "\"/>\n";
    }
  }
  svg.save(path);
}

void write_confusion_svg(const Metrics& m, const std::filesystem::path& path) {
  const double cell = 48, margin = 40;
  Svg svg(margin + cell * m.k, margin + cell * m.k);
  auto& b = svg.body();
  b << "<text x=\"4\" y=\"14\" font-size=\"11\">rows: true, cols: predicted</text>\n";
  for (int t = 0; t < m.k; ++t) {
    std::int64_t row = 0;
    for (int p = 0; p < m.k; ++p) row += m.confusion[static_cast<std::size_t>(t * m.k + p)];
    for (int p = 0; p < m.k; ++p) {
      const auto v = m.confusion[static_cast<std::size_t>(t * m.k + p)];
      const double frac = row > 0 ? static_cast<double>(v) / static_cast<double>(row) : 0.0;
      const double x = margin + p * cell, y = margin + t * cell;
      b << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << heat(frac)
        << "\" stroke=\"#999\"/>\n"
        << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" font-size=\"11\" text-anchor=\"middle\" fill=\""
        << (frac > 0.5 ? "white" : "black") << "\">" << v << "</text>\n";
    }
  }
  svg.save(path);
}

}  // namespace ttslab::eval
