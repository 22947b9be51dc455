#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mamnet/data.hpp"
#include "mamnet/error.hpp"
#include "mamnet/evaluation.hpp"
#include "mamnet/model.hpp"
#include "mamnet/spectral.hpp"
#include "mamnet/stats.hpp"

namespace py = pybind11;
using namespace mamnet;

namespace {

Tensor window_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw ConfigError("window must be a 2-D array (W x F)");
    const auto w = static_cast<std::size_t>(arr.shape(0));
    const auto f = static_cast<std::size_t>(arr.shape(1));
    Tensor t({w, f});
    std::copy(arr.data(), arr.data() + w * f, t.data());
    return t;
}

std::vector<Tensor> windows_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3) throw ConfigError("windows must be a 3-D array (n x W x F)");
    const auto n = static_cast<std::size_t>(arr.shape(0));
    const auto w = static_cast<std::size_t>(arr.shape(1));
    const auto f = static_cast<std::size_t>(arr.shape(2));
    std::vector<Tensor> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor t({w, f});
        std::copy(arr.data() + i * w * f, arr.data() + (i + 1) * w * f, t.data());
        out.push_back(std::move(t));
    }
    return out;
}

Taper taper_from_string(const std::string& s) {
    if (s == "rect") return Taper::rectangular;
    if (s == "hann") return Taper::hann;
    throw ConfigError("taper must be 'rect' or 'hann'");
}

/// Thin training/prediction wrapper around ModelConfig + ModelParams.
class Model {
public:
    Model(std::size_t window_w, std::size_t feature_dim, std::size_t state_dim,
          std::size_t fusion_dim, std::size_t spectral_bins, const std::string& task,
          const std::string& variant, double dropout_rate, double threshold,
          std::uint64_t seed) {
        config_.window_len = window_w;
        config_.feature_dim = feature_dim;
        config_.state_dim = state_dim;
        config_.fusion_dim = fusion_dim;
        config_.spectral_bins = spectral_bins;
        config_.task = task_from_string(task);
        config_.variant = variant_from_string(variant);
        config_.dropout_rate = dropout_rate;
        config_.threshold = threshold;
        config_.validate();
        Rng rng(seed, "model_init");
        params_ = model_init(config_, rng);
    }

    std::vector<double> fit(
        const py::array_t<double, py::array::c_style | py::array::forcecast>& windows,
        const std::vector<double>& targets, std::size_t epochs, std::size_t batch_size,
        double learning_rate, std::uint64_t seed) {
        const std::vector<Tensor> w = windows_from_array(windows);
        const FitTrace trace = mamnet::fit(params_, config_, w, targets,
                                           {epochs, batch_size, learning_rate, seed});
        return trace.epoch_loss;
    }

    py::tuple predict(
        const py::array_t<double, py::array::c_style | py::array::forcecast>& windows) const {
        const std::vector<Tensor> w = windows_from_array(windows);
        const Prediction pred = mamnet::predict(params_, config_, w);
        return py::make_tuple(pred.scores, pred.labels);
    }

    std::size_t param_count() const { return mamnet::param_count(config_); }

private:
    ModelConfig config_;
    ModelParams params_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MamNet core: state-space time branch, DFT spectral branch, weighted "
              "fusion, and the evaluation statistics";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("dft", &dft, py::arg("signal"),
          "Discrete Fourier transform; radix-2 fast path on power-of-two lengths.");

    m.def(
        "spectral_features",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& window,
           std::size_t bins, const std::string& taper) {
            const Tensor t = spectral_features(window_from_array(window), bins,
                                               taper_from_string(taper));
            return std::vector<double>(t.raw());
        },
        py::arg("window"), py::arg("bins"), py::arg("taper") = "rect",
        "Per-column magnitude bins of a W x F window, concatenated feature-major.");

    py::class_<Model>(m, "Model")
        .def(py::init<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,
                      const std::string&, const std::string&, double, double,
                      std::uint64_t>(),
             py::arg("window_w"), py::arg("feature_dim"), py::arg("state_dim") = 16,
             py::arg("fusion_dim") = 16, py::arg("spectral_bins") = 0,
             py::arg("task") = "classify", py::arg("variant") = "full",
             py::arg("dropout_rate") = 0.3, py::arg("threshold") = 0.5,
             py::arg("seed") = 42)
        .def("fit", &Model::fit, py::arg("windows"), py::arg("targets"),
             py::arg("epochs") = 20, py::arg("batch_size") = 32,
             py::arg("learning_rate") = 1e-3, py::arg("seed") = 42,
             "Train with mini-batch Adam; returns the per-epoch loss trace.")
        .def("predict", &Model::predict, py::arg("windows"),
             "Eval-mode scores and hard labels.")
        .def_property_readonly("param_count", &Model::param_count);

    m.def(
        "synth_generate",
        [](std::size_t length, std::size_t features, const std::vector<double>& baselines,
           const std::string& sines, double ar_phi, double ar_sigma,
           const std::string& events, std::uint64_t seed) {
            SynthSpec spec;
            spec.length = length;
            spec.features = features;
            spec.baselines = baselines;
            spec.sines = parse_sines(sines);
            spec.ar_phi = ar_phi;
            spec.ar_sigma = ar_sigma;
            spec.events = events.empty() ? std::vector<EventSpec>{} : parse_events(events);
            spec.seed = seed;
            const FlowTable table = synth_generate(spec);
            py::array_t<double> rows({table.row_count(), table.feature_count()});
            auto view = rows.mutable_unchecked<2>();
            for (std::size_t r = 0; r < table.row_count(); ++r) {
                for (std::size_t c = 0; c < table.feature_count(); ++c) {
                    view(static_cast<py::ssize_t>(r), static_cast<py::ssize_t>(c)) =
                        table.rows[r][c];
                }
            }
            return py::make_tuple(rows, table.labels, table.row_tags);
        },
        py::arg("length") = 20000, py::arg("features") = 4,
        py::arg("baselines") = std::vector<double>{10.0},
        py::arg("sines") = "2:288:0", py::arg("ar_phi") = 0.8, py::arg("ar_sigma") = 0.3,
        py::arg("events") = "burst:0.01:3:30 ; periodic:0.01:2:60", py::arg("seed") = 42,
        "Seeded synthetic traffic; returns (features, labels, tags).");

    m.def(
        "make_windows",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& rows,
           const std::vector<int>& labels, std::size_t width, std::size_t hop,
           const std::string& rule, double fraction) {
            if (rows.ndim() != 2) throw ConfigError("rows must be a 2-D array");
            FlowTable table;
            const auto r = static_cast<std::size_t>(rows.shape(0));
            const auto f = static_cast<std::size_t>(rows.shape(1));
            if (labels.size() != r) throw DataError("labels must match the row count");
            for (std::size_t j = 0; j < f; ++j) {
                table.feature_names.push_back("f" + std::to_string(j));
            }
            table.rows.assign(r, std::vector<double>(f));
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < f; ++j) {
                    table.rows[i][j] = rows.at(static_cast<py::ssize_t>(i),
                                               static_cast<py::ssize_t>(j));
                }
            }
            table.labels = labels;
            WindowOptions options;
            options.width = width;
            options.hop = hop;
            options.fraction = fraction;
            if (rule == "any") options.rule = LabelRule::any;
            else if (rule == "fraction") options.rule = LabelRule::fraction;
            else throw ConfigError("rule must be 'any' or 'fraction'");
            const WindowSet set = make_windows(table, options);
            py::array_t<double> out({set.windows.size(), width, f});
            auto view = out.mutable_unchecked<3>();
            std::vector<double> targets;
            for (std::size_t i = 0; i < set.windows.size(); ++i) {
                targets.push_back(set.windows[i].target);
                for (std::size_t t = 0; t < width; ++t) {
                    for (std::size_t j = 0; j < f; ++j) {
                        view(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(t),
                             static_cast<py::ssize_t>(j)) = set.windows[i].features(t, j);
                    }
                }
            }
            return py::make_tuple(out, targets);
        },
        py::arg("rows"), py::arg("labels"), py::arg("width"), py::arg("hop") = 4,
        py::arg("rule") = "any", py::arg("fraction") = 0.5,
        "Slice a labeled series into windows; returns (windows, targets).");

    m.def(
        "confusion",
        [](const std::vector<int>& labels, const std::vector<int>& preds) {
            const Confusion c = confusion(labels, preds);
            py::dict d;
            d["tp"] = c.tp;
            d["tn"] = c.tn;
            d["fp"] = c.fp;
            d["fn"] = c.fn;
            return d;
        },
        py::arg("labels"), py::arg("predictions"));

    m.def(
        "classification_metrics",
        [](const std::vector<int>& labels, const std::vector<int>& preds) {
            const Confusion c = confusion(labels, preds);
            py::dict d;
            auto set = [&](const char* name, std::optional<double> v) {
                if (v) d[name] = *v;
                else d[name] = py::none();
            };
            set("accuracy", accuracy(c));
            set("recall", recall(c));
            set("precision", precision(c));
            set("f1", f1(c));
            return d;
        },
        py::arg("labels"), py::arg("predictions"),
        "Accuracy/recall/precision/F1 as fractions; None when undefined.");

    m.def("mae",
          [](const std::vector<double>& p, const std::vector<double>& a) { return mae(p, a); },
          py::arg("predictions"), py::arg("actuals"));
    m.def("mse",
          [](const std::vector<double>& p, const std::vector<double>& a) { return mse(p, a); },
          py::arg("predictions"), py::arg("actuals"));

    m.def(
        "confidence_interval",
        [](const std::vector<double>& values, double level) {
            const Interval ci = confidence_interval(values, level);
            return py::make_tuple(ci.mean, ci.low, ci.high);
        },
        py::arg("values"), py::arg("level") = 0.95,
        "Student-t confidence interval: (mean, low, high).");

    m.def(
        "welch_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const WelchResult r = welch_t_test(a, b);
            return py::make_tuple(r.t, r.df, r.p);
        },
        py::arg("a"), py::arg("b"), "Welch's t-test: (t, df, two-sided p).");
}
