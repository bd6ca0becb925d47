// Python bindings. Matrices cross as NumPy arrays; real-lifted quantities are
// float64, complex ones complex128.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>

#include "onebit/config.hpp"
#include "onebit/errors.hpp"
#include "onebit/experiment.hpp"
#include "onebit/linear_rx.hpp"
#include "onebit/ml_detect.hpp"
#include "onebit/nn_search.hpp"
#include "onebit/obmnet.hpp"
#include "onebit/report.hpp"

namespace py = pybind11;
using namespace onebit;

namespace {

CombinerKind combiner_kind(const std::string& name) {
  const auto k = parse_combiner_kind(name);
  if (!k) throw py::value_error("unknown combiner '" + name + "'");
  return *k;
}

Modulation modulation_of(const std::string& name) { return parse_modulation(name); }

// Accepts either config file text or a dict of key -> value.
KeyValues key_values(const py::object& config) {
  if (py::isinstance<py::str>(config)) {
    return KeyValues::parse(config.cast<std::string>(), "<python>");
  }
  std::ostringstream text;
  for (const auto& [k, v] : config.cast<py::dict>()) {
    std::string value;
    if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (const auto& item : v.cast<py::sequence>()) {
        value += (value.empty() ? "" : ",") + py::str(item).cast<std::string>();
      }
    } else if (py::isinstance<py::bool_>(v)) {
      value = v.cast<bool>() ? "true" : "false";
    } else {
      value = py::str(v).cast<std::string>();
    }
    text << py::str(k).cast<std::string>() << " = " << value << '\n';
  }
  return KeyValues::parse(text.str(), "<python>");
}

py::dict row_dict(const BerRow& r) {
  py::dict d;
  d["snr_db"] = r.snr_db;
  d["receiver"] = r.receiver;
  d["stage"] = r.stage;
  d["M"] = r.m;
  d["trials"] = r.trials;
  d["bit_errors"] = r.bit_errors;
  d["ber"] = r.ber;
  d["mean_detect_time_s"] = r.mean_detect_time_s;
  return d;
}

MlProblem problem(const RMatrix& h_real, const RVector& y_real, double snr) {
  return make_ml_problem(h_real, y_real, snr);
}

}  // namespace

PYBIND11_MODULE(_onebit, m) {
  m.doc() = "One-bit massive MIMO detection";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", PyExc_ArithmeticError);
  py::register_exception<SearchSpaceTooLarge>(m, "SearchSpaceTooLarge", PyExc_ValueError);
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);

  // system model
  m.def(
      "constellation",
      [](const std::string& mod) { return make_constellation(modulation_of(mod)).points; },
      py::arg("modulation"), "Unit-energy constellation points.");
  m.def(
      "levels",
      [](const std::string& mod) { return make_constellation(modulation_of(mod)).levels; },
      py::arg("modulation"), "Per-dimension amplitude levels.");
  m.def("default_gamma", [](const std::string& mod) { return default_gamma(modulation_of(mod)); },
        py::arg("modulation"));
  m.def("lift_matrix", &lift_matrix, py::arg("a"));
  m.def("lift_vector", &lift_vector, py::arg("v"));
  m.def("unlift_vector", &unlift_vector, py::arg("v"));
  m.def("one_bit_quantize", py::overload_cast<const CVector&>(&one_bit_quantize), py::arg("r"));
  m.def(
      "sample_channel",
      [](int users, int antennas, std::uint64_t seed) {
        return sample_channel(users, antennas, seed).complex();
      },
      py::arg("users"), py::arg("antennas"), py::arg("seed"),
      "N x K channel with i.i.d. CN(0, 1) entries.");
  m.def(
      "random_symbols",
      [](const std::string& mod, int users, std::uint64_t seed) {
        Rng rng(seed);
        return random_symbols(make_constellation(modulation_of(mod)), users, rng);
      },
      py::arg("modulation"), py::arg("users"), py::arg("seed"));
  m.def(
      "transmit",
      [](const CMatrix& h, const CVector& x, double n0, std::uint64_t seed) {
        Rng rng(seed);
        const TxRxSample s = transmit(h, x, n0, rng);
        py::dict d;
        d["r"] = s.r;
        d["z"] = s.z;
        d["y"] = s.y;
        return d;
      },
      py::arg("h"), py::arg("x"), py::arg("n0"), py::arg("seed"),
      "Noisy received signal r and its one-bit quantization y.");
  m.def("n0_from_snr_db", &n0_from_snr_db, py::arg("snr_db"));

  // linear receivers
  m.def("received_covariance", &received_covariance, py::arg("h"), py::arg("n0"));
  m.def("arcsine_law", &arcsine_law, py::arg("sigma_r"));
  m.def(
      "bussgang_model",
      [](const CMatrix& h, double n0) {
        const BussgangModel b = bussgang_model(h, n0);
        py::dict d;
        d["received_cov"] = b.received_cov;
        d["gain"] = b.gain;
        d["effective_channel"] = b.effective_channel;
        d["noise_cov"] = b.noise_cov;
        return d;
      },
      py::arg("h"), py::arg("n0"));
  m.def(
      "combiner",
      [](const std::string& kind, const CMatrix& h, double n0) {
        return build_combiner(combiner_kind(kind), h, n0).w;
      },
      py::arg("kind"), py::arg("h"), py::arg("n0"), "K x N combining matrix.");
  m.def(
      "detect_linear",
      [](const std::string& kind, const CMatrix& h, double n0, const CVector& y,
         const std::string& mod) {
        const LinearDetection d = detect_linear(build_combiner(combiner_kind(kind), h, n0), y,
                                                make_constellation(modulation_of(mod)));
        return py::make_tuple(d.soft, d.symbols);
      },
      py::arg("kind"), py::arg("h"), py::arg("n0"), py::arg("y"), py::arg("modulation") = "qpsk",
      "(soft estimate rescaled to norm sqrt(K), sliced symbols).");

  // ML detection
  m.def("normal_cdf", &normal_cdf, py::arg("t"));
  m.def("log_phi", &log_phi, py::arg("t"));
  m.def("sigmoid", &sigmoid, py::arg("t"));
  m.def(
      "conventional_ml_objective",
      [](const RVector& x, const RMatrix& h, const RVector& y, double snr) {
        return conventional_ml_objective(x, problem(h, y, snr));
      },
      py::arg("x"), py::arg("h_real"), py::arg("y_real"), py::arg("snr"));
  m.def(
      "robust_ml_objective",
      [](const RVector& x, const RMatrix& h, const RVector& y, double snr) {
        return robust_ml_objective(x, problem(h, y, snr));
      },
      py::arg("x"), py::arg("h_real"), py::arg("y_real"), py::arg("snr"));
  m.def(
      "robust_gradient",
      [](const RVector& x, const RMatrix& h, const RVector& y, double snr) {
        return robust_gradient(x, problem(h, y, snr));
      },
      py::arg("x"), py::arg("h_real"), py::arg("y_real"), py::arg("snr"));
  m.def(
      "exact_ml",
      [](const RMatrix& h, const RVector& y, double snr, const std::string& mod, bool robust) {
        const MlProblem p = problem(h, y, snr);
        const Constellation c = make_constellation(modulation_of(mod));
        const int users = static_cast<int>(h.cols() / 2);
        const auto r =
            robust ? exact_search([&](const RVector& x) { return robust_ml_objective(x, p); }, c,
                                  users)
                   : exact_search(
                         [&](const RVector& x) { return -conventional_ml_objective(x, p); }, c,
                         users);
        return r.x;
      },
      py::arg("h_real"), py::arg("y_real"), py::arg("snr"), py::arg("modulation") = "qpsk",
      py::arg("robust") = false, "Exhaustive ML decision (real-lifted).");

  // nearest-neighbor search
  m.def(
      "candidate_sets",
      [](const RVector& soft, double gamma, const std::string& mod) {
        return candidate_sets(soft, gamma, make_constellation(modulation_of(mod))).sets;
      },
      py::arg("soft"), py::arg("gamma"), py::arg("modulation") = "qpsk");
  m.def(
      "nearest_vectors",
      [](const RVector& soft, double gamma, std::size_t count, const std::string& mod) {
        const auto cand = candidate_sets(soft, gamma, make_constellation(modulation_of(mod)));
        return nearest_vectors(soft, cand, count);
      },
      py::arg("soft"), py::arg("gamma"), py::arg("m"), py::arg("modulation") = "qpsk",
      "The m candidate vectors nearest to soft, nearest first.");
  m.def(
      "brute_force_top_m",
      [](const RVector& soft, double gamma, std::size_t count, const std::string& mod) {
        const auto cand = candidate_sets(soft, gamma, make_constellation(modulation_of(mod)));
        return brute_force_top_m(soft, cand, count);
      },
      py::arg("soft"), py::arg("gamma"), py::arg("m"), py::arg("modulation") = "qpsk");
  m.def(
      "nn_search",
      [](const RVector& soft, double gamma, std::size_t count,
         const std::function<double(const RVector&)>& objective, const std::string& mod) {
        const NnSearchResult r =
            nn_search(soft, gamma, count, objective, make_constellation(modulation_of(mod)));
        return py::make_tuple(r.x, r.cost, r.visited);
      },
      py::arg("soft"), py::arg("gamma"), py::arg("m"), py::arg("objective"),
      py::arg("modulation") = "qpsk", "(best vector, its cost, visited vectors).");

  // OBMNet
  py::class_<ObmnetParams>(m, "ObmnetParams")
      .def(py::init<>())
      .def_readwrite("alphas", &ObmnetParams::alphas)
      .def_readwrite("users", &ObmnetParams::users)
      .def_readwrite("antennas", &ObmnetParams::antennas)
      .def_property(
          "modulation", [](const ObmnetParams& p) { return std::string(to_string(p.modulation)); },
          [](ObmnetParams& p, const std::string& s) { p.modulation = modulation_of(s); })
      .def_readonly("batches", &ObmnetParams::batches)
      .def_property_readonly("layers", &ObmnetParams::layers);
  m.def("load_params", &load_params, py::arg("path"));
  m.def("save_params", &save_params, py::arg("params"), py::arg("path"));
  m.def(
      "obmnet_soft",
      [](const ObmnetParams& p, const RMatrix& h_real, const RMatrix& y_real) {
        return obmnet_soft_batch(h_real, y_real, p.alphas);
      },
      py::arg("params"), py::arg("h_real"), py::arg("y_real"),
      "Normalized soft outputs, one column per received vector (2N x B in, 2K x B out).");
  m.def(
      "obmnet_detect",
      [](const ObmnetParams& p, const RMatrix& h_real, const RMatrix& y_real) {
        return detect_batch(h_real, y_real, p, make_constellation(p.modulation));
      },
      py::arg("params"), py::arg("h_real"), py::arg("y_real"));
  m.def(
      "train",
      [](const std::string& mod, int users, int antennas, int layers, const py::dict& overrides,
         const std::function<void(std::size_t, double)>& progress) {
        TrainConfig cfg = default_train_config(modulation_of(mod), users, antennas, layers);
        for (const auto& [k, v] : overrides) {
          const auto key = k.cast<std::string>();
          if (key == "batch_size") cfg.batch_size = v.cast<std::size_t>();
          else if (key == "learning_rate") cfg.learning_rate = v.cast<double>();
          else if (key == "num_batches") cfg.num_batches = v.cast<std::size_t>();
          else if (key == "snr_low_db") cfg.snr_low_db = v.cast<double>();
          else if (key == "snr_high_db") cfg.snr_high_db = v.cast<double>();
          else if (key == "seed") cfg.seed = v.cast<std::uint64_t>();
          else if (key == "initial_alpha") cfg.initial_alpha = v.cast<double>();
          else if (key == "early_stop") cfg.early_stop = v.cast<bool>();
          else throw py::key_error("unknown training option '" + key + "'");
        }
        py::gil_scoped_release release;
        return train(cfg, [&](const TrainProgress& p) {
          if (progress) {
            py::gil_scoped_acquire acquire;
            progress(p.batch, p.loss);
          }
        });
      },
      py::arg("modulation"), py::arg("users"), py::arg("antennas"), py::arg("layers"),
      py::arg("options") = py::dict(), py::arg("progress") = nullptr,
      "Train OBMNet step sizes; options override the defaults.");

  // experiments
  m.def(
      "run_ber",
      [](const py::object& config) {
        const ExperimentConfig cfg = parse_experiment_config(key_values(config));
        BerReport report;
        {
          py::gil_scoped_release release;
          report = run_ber(cfg);
        }
        py::list rows;
        for (const BerRow& r : report.rows) rows.append(row_dict(r));
        return rows;
      },
      py::arg("config"), "BER sweep from config text or a dict; one dict per report row.");
  m.def(
      "ber_csv",
      [](const py::object& config) {
        const ExperimentConfig cfg = parse_experiment_config(key_values(config));
        BerReport report;
        {
          py::gil_scoped_release release;
          report = run_ber(cfg);
        }
        std::ostringstream out;
        write_report(report, out);
        return out.str();
      },
      py::arg("config"), "BER sweep rendered as the CSV report.");
  m.def(
      "run_timing",
      [](const py::object& config) {
        const ExperimentConfig cfg =
            parse_experiment_config(key_values(config), ConfigPurpose::kTiming);
        std::vector<TimingRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_timing(cfg);
        }
        py::list out;
        for (const TimingRow& r : rows) {
          py::dict d;
          d["receiver"] = r.receiver;
          d["batch_size"] = r.batch_size;
          d["repetitions"] = r.repetitions;
          d["per_vector_time_s"] = r.per_vector_time_s;
          out.append(d);
        }
        return out;
      },
      py::arg("config"));
}
