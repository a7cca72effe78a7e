#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lfa/agent.hpp"
#include "lfa/allocator.hpp"
#include "lfa/cmis.hpp"
#include "lfa/controller.hpp"
#include "lfa/core.hpp"
#include "lfa/sim.hpp"

namespace lfa {

class InvalidTopology : public Error {
 public:
  using Error::Error;
};

class EnvironmentError : public Error {
 public:
  using Error::Error;
};

class ModelNotFound : public Error {
 public:
  using Error::Error;
};

struct DatasetSpec {
  /// Fit document text; when absent the dataset is synthesized.
  std::optional<std::string> fit_json;
  SynthesisSpec synthesis{};
};

struct ExperimentSpec {
  int pluggable_count = 4;  // one pluggable per whitebox
  int episodes = 3000;
  int requests = 500;
  QBackendKind backend = QBackendKind::Tabular;
  double alpha = 0.1;
  double fnn_step = 0.01;
  ExplorationSchedule schedule{};
  DatasetSpec dataset{};
  std::uint64_t seed = 7;
  ClockMode clock_mode = ClockMode::Logical;
  double clock_factor = 1.0;
  std::string out_dir;  // empty: nothing written to disk
};

/// Uniformly random ordered pairs of distinct whiteboxes, port fixed per
/// whitebox. Throws InvalidTopology with fewer than two whiteboxes.
std::vector<ConnectivityRequest> generate_requests(
    const std::vector<std::string>& whiteboxes, int count, std::uint64_t seed,
    const std::string& port = "Ethernet0");

/// Everything a run needs: per-whitebox agents on a shared virtual clock and
/// a controller holding one session to each.
struct Testbed {
  std::shared_ptr<VirtualClock> clock;
  std::vector<std::unique_ptr<AgentServer>> agents;
  std::unique_ptr<Controller> controller;
  std::vector<std::string> whitebox_ids;
  std::vector<SlotStatistics> stats;
  double dataset_mean = 0.0;
  double best_slot_mean = 0.0;
};

Testbed make_testbed(const ExperimentSpec& spec, QModel model);

struct TrainResult {
  std::vector<RequestOutcome> outcomes;
  std::string curve_csv;     // episode,feedback_s,moving_avg_200
  std::string summary_json;
  std::string model_json;
  double final_moving_avg = 0.0;
  double dataset_mean = 0.0;
  double best_slot_mean = 0.0;
};

TrainResult run_train(const ExperimentSpec& spec);

struct OperateResult {
  std::vector<RequestOutcome> outcomes;
  std::string csv;  // request_id,slot,ingress_time_s,egress_time_s,latency_s
  std::string summary_json;
  double mean_feedback_s = 0.0;
  double dataset_mean = 0.0;
  double improvement_fraction = 0.0;
  std::map<std::string, double> per_pluggable_mean;
};

OperateResult run_operate(const ExperimentSpec& spec,
                          const std::string& model_json);

struct ScaleRow {
  int pluggables = 0;
  double avg_feedback_s = 0.0;
  double avg_latency_s = 0.0;
  double wall_time_s = 0.0;  // simulated elapsed time for the whole run
};

struct ScaleResult {
  std::vector<ScaleRow> rows;
  std::vector<std::vector<RequestOutcome>> operate_outcomes;  // one per row
  std::string csv;  // pluggables,avg_feedback_s,avg_latency_s,wall_time_s
  std::string summary_json;
};

/// Training episodes scale with the pluggable count (count / 4 of
/// spec.episodes) so every transceiver sees a comparable number of updates;
/// the 4-pluggable run is the reference.
ScaleResult run_scale(const ExperimentSpec& spec,
                      const std::vector<int>& counts);

/// The moving average the training curve reports: mean of the trailing
/// `window` values (all values while fewer are available).
double moving_average(const std::vector<double>& values, std::size_t end,
                      std::size_t window);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace lfa
