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


// Python bindings for the core operations. Signal sets cross the boundary as
// SignalSet objects whose values are exposed as (N, C, 1, W) numpy arrays;
// structured configs cross as plain dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "ttslab/coherence.hpp"
#include "ttslab/errors.hpp"
#include "ttslab/evaluation.hpp"
#include "ttslab/gan.hpp"
#include "ttslab/signal_data.hpp"
#include "ttslab/training.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace ttslab;

namespace {

json to_json_value(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object from_json_value(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

data::SignalSet make_set(const Array& values, std::optional<std::vector<int>> labels, std::optional<int> num_classes) {
  const auto nd = values.ndim();
  if (nd != 3 && nd != 4) throw UsageError("values must have shape (N, C, W) or (N, C, 1, W)");
  if (nd == 4 && values.shape(2) != 1) throw UsageError("the third axis of (N, C, 1, W) values must be 1");
  data::SignalSet s(values.shape(0), values.shape(1), values.shape(nd - 1));
  std::copy_n(values.data(), s.values.size(), s.values.begin());
  if (labels) {
    s.num_classes = num_classes.value_or(labels->empty() ? 0 : *std::max_element(labels->begin(), labels->end()) + 1);
    s.labels = std::move(labels);
  }
  try {
    s.validate();
  } catch (const LoadError& e) {
    throw UsageError(e.what());
  }
  return s;
}

Array set_values(const data::SignalSet& s) {
  Array a({s.n, s.c, std::int64_t{1}, s.w});
  std::copy(s.values.begin(), s.values.end(), a.mutable_data());
  return a;
}

Array flat_array(const std::vector<double>& v, std::int64_t rows, std::int64_t cols) {
  Array a({rows, cols});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

coherence::CwtSpec cwt_spec(const py::dict& d) { return coherence::cwt_spec_from_json(to_json_value(d)); }

py::dict losses_dict(const train::StepLosses& l) {
  py::dict d;
  d["step"] = l.step;
  d["L_D"] = l.l_d;
  d["L_G"] = l.l_g;
  d["L_adv"] = l.l_adv;
  d["L_cls_r"] = l.l_cls_r;
  d["L_cls_f"] = l.l_cls_f;
  d["GP"] = l.gp;
  d["L_adv_g"] = l.l_adv_g;
  return d;
}

/// Owns the training data so the trainer's reference stays valid.
struct PyTrainer {
  data::SignalSet data;
  std::unique_ptr<train::Trainer> trainer;
};

}  // namespace

PYBIND11_MODULE(_ttslab, m) {
  m.doc() = "Transformer GANs for time series: data, models, training, coherence scoring and evaluation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_OSError);
  py::register_exception<BoundsError>(m, "BoundsError", PyExc_IndexError);
  py::register_exception<NormalizationError>(m, "NormalizationError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  py::class_<data::SignalSet>(m, "SignalSet")
      .def(py::init(&make_set), py::arg("values"), py::arg("labels") = py::none(), py::arg("num_classes") = py::none())
      .def_property_readonly("values", &set_values)
      .def_property_readonly("labels", [](const data::SignalSet& s) { return s.labels; })
      .def_readonly("n", &data::SignalSet::n)
      .def_readonly("c", &data::SignalSet::c)
      .def_readonly("w", &data::SignalSet::w)
      .def_readonly("num_classes", &data::SignalSet::num_classes)
      .def_property_readonly("sidecar", [](const data::SignalSet& s) { return from_json_value(data::sidecar_json(s)); })
      .def("__len__", [](const data::SignalSet& s) { return s.n; })
      .def("__repr__", [](const data::SignalSet& s) {
        std::ostringstream o;
        o << "SignalSet(n=" << s.n << ", c=" << s.c << ", w=" << s.w << ", k=" << s.num_classes << ")";
        return o.str();
      });

  m.def("load", &data::load_signal_set, py::arg("path"));
  m.def("save", &data::save_signal_set, py::arg("signals"), py::arg("path"));
  m.def(
      "simulate_sine",
      [](std::int64_t n, std::int64_t w, std::int64_t c, std::pair<double, double> freq, std::pair<double, double> phase,
         std::uint64_t seed) {
        data::SineParams p;
        p.n_samples = n;
        p.length_w = w;
        p.channels = c;
        p.freq_range = {freq.first, freq.second};
        p.phase_range = {phase.first, phase.second};
        p.seed = seed;
        return data::simulate_sine(p);
      },
      py::arg("n") = 10000, py::arg("w") = 24, py::arg("c") = 5, py::arg("freq_range") = std::pair{0.0, 0.1},
      py::arg("phase_range") = std::pair{0.0, 0.1}, py::arg("seed") = 0);
  m.def(
      "simulate_bands",
      [](std::int64_t n_per_class, std::int64_t w, std::int64_t c, std::vector<std::pair<double, double>> bands,
         double noise_std, std::uint64_t seed) {
        data::BandParams p;
        p.n_per_class = n_per_class;
        p.length_w = w;
        p.channels = c;
        p.bands.clear();
        for (auto [lo, hi] : bands) p.bands.push_back({lo, hi});
        p.noise_std = noise_std;
        p.seed = seed;
        return data::simulate_bands(p);
      },
      py::arg("n_per_class") = 500, py::arg("w") = 32, py::arg("c") = 1,
      py::arg("bands") = std::vector<std::pair<double, double>>{{1.5, 3.0}, {6.0, 9.0}}, py::arg("noise_std") = 0.1,
      py::arg("seed") = 0);
  m.def("normalize_channels", &data::normalize_channels, py::arg("signals"));
  m.def("crop_window", &data::crop_window, py::arg("signals"), py::arg("start"), py::arg("end"));
  m.def("resample_balanced", &data::resample_balanced, py::arg("signals"), py::arg("per_class"), py::arg("seed"));
  m.def("split_per_class", &data::split_per_class, py::arg("signals"), py::arg("first_per_class"), py::arg("seed"));
  m.def("class_counts", &data::class_counts, py::arg("signals"));

  m.def(
      "wcoh",
      [](const Array& x, const Array& y, const py::dict& spec) {
        if (x.ndim() != 1 || y.ndim() != 1) throw UsageError("wcoh expects two 1-D signals");
        auto mtx = coherence::wcoh(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                   std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), cwt_spec(spec));
        return flat_array(mtx.values, mtx.f, mtx.w);
      },
      py::arg("x"), py::arg("y"), py::arg("spec") = py::dict(), "Coherence matrix of shape (scales, W), values in [0, 1].");
  m.def(
      "wcoh_s",
      [](const Array& x, const Array& y, const py::dict& spec) {
        if (x.ndim() != 2 || y.ndim() != 2) throw UsageError("wcoh_s expects two (C, W) arrays");
        if (x.shape(0) != y.shape(0) || x.shape(1) != y.shape(1)) throw UsageError("wcoh_s: shape mismatch");
        return coherence::wcoh_s(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                 std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), x.shape(0),
                                 cwt_spec(spec));
      },
      py::arg("x"), py::arg("y"), py::arg("spec") = py::dict());
  m.def(
      "wcoh_set",
      [](const data::SignalSet& a, const data::SignalSet& b, const py::dict& spec, int threads) {
        const auto cs = cwt_spec(spec);
        py::gil_scoped_release release;
        auto score = coherence::wcoh_set(a, b, cs, threads);
        py::gil_scoped_acquire acquire;
        py::dict d = from_json_value(coherence::report_json(score, cs, a.w));
        d["scores"] = flat_array(score.scores, score.n, score.n);
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("spec") = py::dict(), py::arg("threads") = 1);

  py::class_<PyTrainer>(m, "Trainer")
      .def(py::init([](data::SignalSet d, const py::dict& model, const py::dict& config) {
             auto t = std::make_unique<PyTrainer>();
             t->data = std::move(d);
             json mj = to_json_value(model);
             mj["channels"] = t->data.c;
             mj["seq_len"] = t->data.w;
             if (!mj.contains("num_classes")) mj["num_classes"] = t->data.num_classes;
             t->trainer = std::make_unique<train::Trainer>(t->data, gan::model_spec_from_json(mj),
                                                           train::train_config_from_json(to_json_value(config)));
             return t;
           }),
           py::arg("data"), py::arg("model") = py::dict(), py::arg("config") = py::dict())
      .def_static(
          "resume",
          [](data::SignalSet d, const std::filesystem::path& ckpt, std::optional<std::int64_t> max_steps) {
            auto t = std::make_unique<PyTrainer>();
            t->data = std::move(d);
            t->trainer = std::make_unique<train::Trainer>(train::Trainer::resume(t->data, ckpt, max_steps));
            return t;
          },
          py::arg("data"), py::arg("checkpoint"), py::arg("max_steps") = py::none())
      .def("step", [](PyTrainer& t) { return losses_dict(t.trainer->step()); })
      .def(
          "run",
          [](PyTrainer& t, const std::filesystem::path& out_dir) {
            py::gil_scoped_release release;
            t.trainer->run(out_dir);
          },
          py::arg("out_dir"))
      .def("save_checkpoint", [](const PyTrainer& t, const std::filesystem::path& stem) { t.trainer->save_checkpoint(stem); })
      .def_property_readonly("step_count", [](const PyTrainer& t) { return t.trainer->current_step(); })
      .def(
          "generate",
          [](PyTrainer& t, std::int64_t n, std::optional<std::vector<int>> labels, std::uint64_t seed) {
            return train::generate(t.trainer->generator(), n, labels, seed);
          },
          py::arg("n"), py::arg("labels") = py::none(), py::arg("seed") = 0);

  m.def(
      "generate",
      [](const std::filesystem::path& ckpt, std::int64_t n, std::optional<std::vector<int>> labels, std::uint64_t seed) {
        return train::generate(ckpt, n, labels, seed);
      },
      py::arg("checkpoint"), py::arg("n"), py::arg("labels") = py::none(), py::arg("seed") = 0);
  m.def("balanced_labels", &train::balanced_labels, py::arg("n"), py::arg("k"));

  m.def(
      "project_2d",
      [](const data::SignalSet& real, const data::SignalSet& syn, const std::string& method, std::uint64_t seed) {
        auto p = eval::project_2d(real, syn, eval::parse_projection(method), seed);
        py::dict d;
        d["points"] = flat_array(p.points, p.size(), 2);
        std::vector<std::string> origin;
        for (auto o : p.origin) origin.push_back(o == eval::Origin::Real ? "real" : "synthetic");
        d["origin"] = origin;
        d["labels"] = p.labels;
        d["method_params"] = from_json_value(p.method_params);
        return d;
      },
      py::arg("real"), py::arg("syn"), py::arg("method") = "pca", py::arg("seed") = 0);
  m.def(
      "fusion_map",
      [](const data::SignalSet& s, std::int64_t time_bins, std::int64_t value_bins,
         std::optional<std::pair<double, double>> range, std::int64_t channel) {
        auto fm = eval::fusion_map(s, time_bins, value_bins, range, channel);
        py::array_t<std::int64_t> a({fm.value_bins, fm.time_bins});
        std::copy(fm.counts.begin(), fm.counts.end(), a.mutable_data());
        return a;
      },
      py::arg("signals"), py::arg("time_bins"), py::arg("value_bins") = 100, py::arg("value_range") = py::none(),
      py::arg("channel") = 0, "Counts of shape (value_bins, time_bins); row 0 is the lowest value bin.");
  m.def(
      "compute_metrics",
      [](const std::vector<int>& truth, const std::vector<int>& pred, int k) {
        return from_json_value(eval::to_json(eval::compute_metrics(truth, pred, k)));
      },
      py::arg("truth"), py::arg("predicted"), py::arg("k"));
  m.def(
      "case_study",
      [](const data::SignalSet& real, const data::SignalSet& syn, const data::SignalSet& test, const std::string& mode,
         std::uint64_t seed, std::int64_t divisor, int epochs) {
        eval::CaseCounts counts;
        counts.divisor = divisor;
        eval::ClassifierConfig cfg;
        cfg.epochs = epochs;
        py::gil_scoped_release release;
        auto r = eval::case_study(real, syn, test, eval::parse_case_mode(mode), seed, counts, cfg);
        py::gil_scoped_acquire acquire;
        return from_json_value(eval::to_json(r));
      },
      py::arg("real"), py::arg("syn"), py::arg("test"), py::arg("mode"), py::arg("seed") = 0, py::arg("divisor") = 1,
      py::arg("epochs") = 30);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "ttslab");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        py::print(out.str(), py::arg("end") = "");
        if (!err.str().empty()) py::print(err.str(), py::arg("end") = "", py::arg("file") = py::module_::import("sys").attr("stderr"));
        return code;
      },
      py::arg("args"), "Runs the ttslab command line with the given arguments and returns its exit code.");
}
