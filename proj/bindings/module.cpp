// Python bindings for the experiment-level API: log parsing, dataset
// synthesis, training, operating and scaling. The live agent/controller
// machinery stays on the C++ side; Python drives whole runs.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lfa/allocator.hpp"
#include "lfa/cmis.hpp"
#include "lfa/core.hpp"
#include "lfa/harness.hpp"

namespace py = pybind11;

namespace {

std::string backend_name(lfa::QBackendKind kind) {
  return kind == lfa::QBackendKind::Fnn ? "fnn" : "tabular";
}

lfa::QBackendKind backend_from_name(const std::string& name) {
  if (name == "tabular") return lfa::QBackendKind::Tabular;
  if (name == "fnn") return lfa::QBackendKind::Fnn;
  throw py::value_error("backend must be 'tabular' or 'fnn'");
}

py::dict model_info(const std::string& model_json) {
  auto model = lfa::QModel::load(model_json);
  py::dict info;
  info["backend"] = backend_name(model.kind());
  info["episode"] = model.schedule().episode;
  info["epsilon"] = model.current_epsilon();
  py::dict best;
  for (const auto& key : model.known_transceivers()) {
    auto slash = key.find('/');
    lfa::TransceiverId id{key.substr(0, slash), key.substr(slash + 1)};
    auto q = model.backend().q_values(id);
    int top = 0;
    for (int s = 1; s < lfa::kSlotCount; ++s)
      if (q[s] > q[top]) top = s;
    py::dict entry;
    entry["slot"] = top;
    entry["frequency_ghz"] = lfa::FrequencySlot(top).frequency_ghz();
    entry["q"] = q[top];
    best[py::str(key)] = entry;
  }
  info["best"] = best;
  return info;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "laser frequency slot allocation testbed";

  m.attr("SLOT_COUNT") = lfa::kSlotCount;
  m.attr("BASE_FREQUENCY_GHZ") = lfa::kBaseFrequencyGhz;
  m.attr("MAX_FREQUENCY_GHZ") = lfa::kMaxFrequencyGhz;
  m.attr("GRID_GHZ") = lfa::kGridGhz;

  py::register_exception<lfa::Error>(m, "LfaError");

  m.def(
      "slot_to_frequency",
      [](int index) { return lfa::FrequencySlot(index).frequency_ghz(); },
      py::arg("index"));
  m.def(
      "frequency_to_slot",
      [](int frequency_ghz) {
        return lfa::frequency_to_slot(frequency_ghz).index();
      },
      py::arg("frequency_ghz"));

  py::class_<lfa::Measurement>(m, "Measurement")
      .def_readonly("port", &lfa::Measurement::port)
      .def_property_readonly(
          "slot", [](const lfa::Measurement& v) { return v.slot.index(); })
      .def_property_readonly(
          "frequency_ghz",
          [](const lfa::Measurement& v) { return v.slot.frequency_ghz(); })
      .def_readonly("config_time_s", &lfa::Measurement::config_time_s)
      .def_property_readonly("origin", [](const lfa::Measurement& v) {
        return v.origin == lfa::MeasurementOrigin::Real ? "real" : "augmented";
      });

  py::class_<lfa::SlotStatistics>(m, "SlotStatistics")
      .def_property_readonly(
          "slot", [](const lfa::SlotStatistics& v) { return v.slot.index(); })
      .def_property_readonly(
          "frequency_ghz",
          [](const lfa::SlotStatistics& v) { return v.slot.frequency_ghz(); })
      .def_readonly("mean_s", &lfa::SlotStatistics::mean_s)
      .def_readonly("std_s", &lfa::SlotStatistics::std_s)
      .def_readonly("count", &lfa::SlotStatistics::count);

  m.def(
      "parse_log",
      [](const std::string& text) {
        std::istringstream in(text);
        auto result = lfa::parse_log_stream(in);
        return py::make_tuple(result.measurements, result.unmatched_reinits);
      },
      py::arg("text"),
      "Parse xcvrd syslog text; returns (measurements, unmatched_reinits).");
  m.def("aggregate", &lfa::aggregate, py::arg("measurements"));
  m.def(
      "augment",
      [](std::vector<lfa::Measurement> measurements, int copies,
         double noise_fraction, std::uint64_t seed) {
        return lfa::augment(measurements,
                            lfa::AugmentOptions{copies, noise_fraction, seed});
      },
      py::arg("measurements"), py::arg("copies") = 8,
      py::arg("noise_fraction") = 0.05, py::arg("seed") = 1);
  m.def(
      "fit_lognormal",
      [](double mean_s, double std_s) {
        auto params =
            lfa::fit_lognormal({lfa::FrequencySlot(0), mean_s, std_s, 1});
        return py::make_tuple(params.mu, params.sigma);
      },
      py::arg("mean_s"), py::arg("std_s"),
      "Moment-matching fit; returns (mu, sigma).");
  m.def("stats_to_csv", &lfa::stats_to_csv, py::arg("stats"));
  m.def("stats_from_csv", &lfa::stats_from_csv, py::arg("csv"));
  m.def("fits_to_json", &lfa::fits_to_json, py::arg("stats"));

  py::class_<lfa::SynthesizedDataset>(m, "SynthesizedDataset")
      .def_readonly("stats", &lfa::SynthesizedDataset::stats)
      .def_readonly("overall_mean", &lfa::SynthesizedDataset::overall_mean)
      .def_readonly("min_mean", &lfa::SynthesizedDataset::min_mean);
  m.def(
      "synthesize_dataset",
      [](double mean_min, double mean_max, double std_fraction,
         std::uint64_t seed) {
        return lfa::synthesize_dataset(
            lfa::SynthesisSpec{mean_min, mean_max, std_fraction, seed});
      },
      py::arg("mean_min") = 3.2, py::arg("mean_max") = 5.5,
      py::arg("std_fraction") = 0.1, py::arg("seed") = 7);

  py::class_<lfa::ExplorationSchedule>(m, "ExplorationSchedule")
      .def(py::init<>())
      .def_readwrite("epsilon0", &lfa::ExplorationSchedule::epsilon0)
      .def_readwrite("epsilon_min", &lfa::ExplorationSchedule::epsilon_min)
      .def_readwrite("decay", &lfa::ExplorationSchedule::decay)
      .def_readwrite("episode", &lfa::ExplorationSchedule::episode);
  m.def("epsilon_at", &lfa::epsilon_at, py::arg("schedule"),
        py::arg("episode"));

  py::class_<lfa::SynthesisSpec>(m, "SynthesisSpec")
      .def(py::init<>())
      .def_readwrite("mean_min", &lfa::SynthesisSpec::mean_min)
      .def_readwrite("mean_max", &lfa::SynthesisSpec::mean_max)
      .def_readwrite("std_fraction", &lfa::SynthesisSpec::std_fraction)
      .def_readwrite("seed", &lfa::SynthesisSpec::seed);

  py::class_<lfa::ExperimentSpec>(m, "ExperimentSpec")
      .def(py::init<>())
      .def_readwrite("pluggable_count", &lfa::ExperimentSpec::pluggable_count)
      .def_readwrite("episodes", &lfa::ExperimentSpec::episodes)
      .def_readwrite("requests", &lfa::ExperimentSpec::requests)
      .def_property(
          "backend",
          [](const lfa::ExperimentSpec& s) { return backend_name(s.backend); },
          [](lfa::ExperimentSpec& s, const std::string& name) {
            s.backend = backend_from_name(name);
          })
      .def_readwrite("alpha", &lfa::ExperimentSpec::alpha)
      .def_readwrite("fnn_step", &lfa::ExperimentSpec::fnn_step)
      .def_readwrite("schedule", &lfa::ExperimentSpec::schedule)
      .def_property(
          "fit_json",
          [](const lfa::ExperimentSpec& s) { return s.dataset.fit_json; },
          [](lfa::ExperimentSpec& s, std::optional<std::string> text) {
            s.dataset.fit_json = std::move(text);
          })
      .def_property(
          "synthesis",
          py::cpp_function(
              [](lfa::ExperimentSpec& s) -> lfa::SynthesisSpec& {
                return s.dataset.synthesis;
              },
              py::return_value_policy::reference_internal),
          [](lfa::ExperimentSpec& s, const lfa::SynthesisSpec& v) {
            s.dataset.synthesis = v;
          })
      .def_readwrite("seed", &lfa::ExperimentSpec::seed)
      .def_property(
          "clock",
          [](const lfa::ExperimentSpec& s) {
            return s.clock_mode == lfa::ClockMode::Logical ? "logical"
                                                           : "scaled";
          },
          [](lfa::ExperimentSpec& s, const std::string& mode) {
            if (mode == "logical") {
              s.clock_mode = lfa::ClockMode::Logical;
            } else if (mode == "scaled") {
              s.clock_mode = lfa::ClockMode::RealtimeScaled;
            } else {
              throw py::value_error("clock must be 'logical' or 'scaled'");
            }
          })
      .def_readwrite("clock_factor", &lfa::ExperimentSpec::clock_factor)
      .def_readwrite("out_dir", &lfa::ExperimentSpec::out_dir);

  py::class_<lfa::RequestOutcome>(m, "RequestOutcome")
      .def_readonly("request_id", &lfa::RequestOutcome::request_id)
      .def_readonly("episode", &lfa::RequestOutcome::episode)
      .def_property_readonly(
          "slot",
          [](const lfa::RequestOutcome& v) { return v.slot.index(); })
      .def_readonly("ingress_time_s", &lfa::RequestOutcome::ingress_time_s)
      .def_readonly("egress_time_s", &lfa::RequestOutcome::egress_time_s)
      .def_readonly("latency_s", &lfa::RequestOutcome::latency_s)
      .def_readonly("ok", &lfa::RequestOutcome::ok)
      .def_readonly("error", &lfa::RequestOutcome::error);

  py::class_<lfa::TrainResult>(m, "TrainResult")
      .def_readonly("outcomes", &lfa::TrainResult::outcomes)
      .def_readonly("curve_csv", &lfa::TrainResult::curve_csv)
      .def_readonly("summary_json", &lfa::TrainResult::summary_json)
      .def_readonly("model_json", &lfa::TrainResult::model_json)
      .def_readonly("final_moving_avg", &lfa::TrainResult::final_moving_avg)
      .def_readonly("dataset_mean", &lfa::TrainResult::dataset_mean)
      .def_readonly("best_slot_mean", &lfa::TrainResult::best_slot_mean);

  py::class_<lfa::OperateResult>(m, "OperateResult")
      .def_readonly("outcomes", &lfa::OperateResult::outcomes)
      .def_readonly("csv", &lfa::OperateResult::csv)
      .def_readonly("summary_json", &lfa::OperateResult::summary_json)
      .def_readonly("mean_feedback_s", &lfa::OperateResult::mean_feedback_s)
      .def_readonly("dataset_mean", &lfa::OperateResult::dataset_mean)
      .def_readonly("improvement_fraction",
                    &lfa::OperateResult::improvement_fraction)
      .def_readonly("per_pluggable_mean",
                    &lfa::OperateResult::per_pluggable_mean);

  py::class_<lfa::ScaleRow>(m, "ScaleRow")
      .def_readonly("pluggables", &lfa::ScaleRow::pluggables)
      .def_readonly("avg_feedback_s", &lfa::ScaleRow::avg_feedback_s)
      .def_readonly("avg_latency_s", &lfa::ScaleRow::avg_latency_s)
      .def_readonly("wall_time_s", &lfa::ScaleRow::wall_time_s);

  py::class_<lfa::ScaleResult>(m, "ScaleResult")
      .def_readonly("rows", &lfa::ScaleResult::rows)
      .def_readonly("operate_outcomes", &lfa::ScaleResult::operate_outcomes)
      .def_readonly("csv", &lfa::ScaleResult::csv)
      .def_readonly("summary_json", &lfa::ScaleResult::summary_json);

  // Long-running entry points release the GIL: each run spins up agent
  // threads and blocks until the scenario completes.
  m.def("run_train", &lfa::run_train, py::arg("spec"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_operate", &lfa::run_operate, py::arg("spec"),
        py::arg("model_json"), py::call_guard<py::gil_scoped_release>());
  m.def("run_scale", &lfa::run_scale, py::arg("spec"), py::arg("counts"),
        py::call_guard<py::gil_scoped_release>());

  m.def("model_info", &model_info, py::arg("model_json"),
        "Backend, episode, epsilon and per-transceiver best slots.");

  m.def(
      "moving_average",
      [](const std::vector<double>& values, std::size_t end,
         std::size_t window) {
        return lfa::moving_average(values, end, window);
      },
      py::arg("values"), py::arg("end"), py::arg("window") = 200);
}
