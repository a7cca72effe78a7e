#include "lfa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "lfa/simtime.hpp"

namespace lfa {
namespace {

std::string format_row(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

struct DatasetInfo {
  std::vector<SlotStatistics> stats;
  LaserModelParams params;
  double mean = 0.0;
  double best = 0.0;
};

DatasetInfo resolve_dataset(const DatasetSpec& spec) {
  DatasetInfo info;
  if (spec.fit_json) {
    auto fits = load_fit_json(*spec.fit_json);
    info.params = params_from_fits(fits);
    for (int s = 0; s < kSlotCount; ++s) {
      // invert the moment-matching fit to recover mean and std
      double var = std::exp(fits[s].sigma * fits[s].sigma);
      double mean = std::exp(fits[s].mu + fits[s].sigma * fits[s].sigma / 2.0);
      info.stats.push_back(SlotStatistics{FrequencySlot(s), mean,
                                          mean * std::sqrt(var - 1.0), 0});
    }
  } else {
    auto synth = synthesize_dataset(spec.synthesis);
    info.stats = synth.stats;
    info.params = params_from_stats(info.stats);
  }
  double sum = 0.0;
  double best = info.stats.front().mean_s;
  for (const auto& s : info.stats) {
    sum += s.mean_s;
    best = std::min(best, s.mean_s);
  }
  info.mean = sum / static_cast<double>(info.stats.size());
  info.best = best;
  return info;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw EnvironmentError("cannot create " + dir + ": " + ec.message());
}

double mean_endpoint_feedback(const std::vector<RequestOutcome>& outcomes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    sum += o.ingress_time_s + o.egress_time_s;
    n += 2;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

std::vector<ConnectivityRequest> generate_requests(
    const std::vector<std::string>& whiteboxes, int count, std::uint64_t seed,
    const std::string& port) {
  if (whiteboxes.size() < 2)
    throw InvalidTopology("need at least two whiteboxes, got " +
                          std::to_string(whiteboxes.size()));
  CountingRng rng(seed);
  int n = static_cast<int>(whiteboxes.size());
  std::vector<ConnectivityRequest> requests;
  requests.reserve(count);
  for (int i = 0; i < count; ++i) {
    int a = rng.next_int(n);
    int b = rng.next_int(n - 1);
    if (b >= a) ++b;  // distinct endpoints, all ordered pairs equally likely
    requests.push_back(ConnectivityRequest{
        static_cast<std::uint64_t>(i),
        TransceiverId{whiteboxes[a], port},
        TransceiverId{whiteboxes[b], port}});
  }
  return requests;
}

double moving_average(const std::vector<double>& values, std::size_t end,
                      std::size_t window) {
  std::size_t begin = end > window ? end - window : 0;
  double sum = std::accumulate(values.begin() + begin, values.begin() + end, 0.0);
  return sum / static_cast<double>(end - begin);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EnvironmentError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw EnvironmentError("write to " + path + " failed");
}

Testbed make_testbed(const ExperimentSpec& spec, QModel model) {
  if (spec.pluggable_count < 2)
    throw InvalidTopology("need at least 2 pluggables, got " +
                          std::to_string(spec.pluggable_count));
  auto dataset = resolve_dataset(spec.dataset);

  Testbed bed;
  bed.stats = std::move(dataset.stats);
  bed.dataset_mean = dataset.mean;
  bed.best_slot_mean = dataset.best;
  SimMicros epoch = default_sim_epoch();
  bed.clock = spec.clock_mode == ClockMode::Logical
                  ? VirtualClock::logical(epoch)
                  : VirtualClock::realtime_scaled(spec.clock_factor, epoch);

  ControllerOptions options;
  if (!spec.out_dir.empty()) {
    ensure_dir(spec.out_dir);
    options.db_path = spec.out_dir + "/feedback_db.jsonl";
  }
  bed.controller = std::make_unique<Controller>(std::move(model), bed.clock,
                                                std::move(options));

  for (int i = 0; i < spec.pluggable_count; ++i) {
    std::string id = "wb" + std::to_string(i);
    AgentOptions agent_options;
    agent_options.whitebox_id = id;
    agent_options.seed = mix_seed(spec.seed, hash_name(id));
    agent_options.ports.push_back(AgentPortConfig{"Ethernet0", dataset.params});
    bed.agents.push_back(
        std::make_unique<AgentServer>(std::move(agent_options), bed.clock));
    bed.controller->attach(make_local_session(*bed.agents.back()));
    bed.whitebox_ids.push_back(std::move(id));
  }
  return bed;
}

TrainResult run_train(const ExperimentSpec& spec) {
  QModel model =
      spec.backend == QBackendKind::Tabular
          ? QModel::tabular(spec.alpha, spec.schedule,
                            mix_seed(spec.seed, hash_name("model")))
          : QModel::fnn(spec.fnn_step, spec.schedule,
                        mix_seed(spec.seed, hash_name("model")));
  Testbed bed = make_testbed(spec, std::move(model));
  auto requests =
      generate_requests(bed.whitebox_ids, spec.episodes,
                        mix_seed(spec.seed, hash_name("train-requests")));
  auto outcomes = bed.controller->run_scenario(requests);

  std::vector<double> feedback;
  feedback.reserve(outcomes.size());
  std::string curve = "episode,feedback_s,moving_avg_200\n";
  double final_avg = 0.0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    feedback.push_back((o.ingress_time_s + o.egress_time_s) / 2.0);
    final_avg = moving_average(feedback, feedback.size(), 200);
    curve += format_row("%llu,%.6f,%.6f\n",
                        static_cast<unsigned long long>(o.episode),
                        feedback.back(), final_avg);
  }

  TrainResult result;
  result.outcomes = std::move(outcomes);
  result.curve_csv = std::move(curve);
  result.final_moving_avg = final_avg;
  result.dataset_mean = bed.dataset_mean;
  result.best_slot_mean = bed.best_slot_mean;
  result.model_json = bed.controller->model().save();

  nlohmann::ordered_json summary;
  summary["mode"] = "train";
  summary["pluggables"] = spec.pluggable_count;
  summary["episodes"] = spec.episodes;
  summary["seed"] = spec.seed;
  summary["backend"] =
      spec.backend == QBackendKind::Tabular ? "tabular" : "fnn";
  summary["dataset_mean"] = result.dataset_mean;
  summary["best_slot_mean"] = result.best_slot_mean;
  summary["final_moving_avg"] = result.final_moving_avg;
  summary["final_epsilon"] = bed.controller->model().current_epsilon();
  result.summary_json = summary.dump(2) + "\n";

  if (!spec.out_dir.empty()) {
    write_text_file(spec.out_dir + "/training_curve.csv", result.curve_csv);
    write_text_file(spec.out_dir + "/train_summary.json", result.summary_json);
    write_text_file(spec.out_dir + "/model.json", result.model_json);
    write_text_file(spec.out_dir + "/slot_stats.csv", stats_to_csv(bed.stats));
    write_text_file(spec.out_dir + "/laser_fit.json", fits_to_json(bed.stats));
  }
  return result;
}

OperateResult run_operate(const ExperimentSpec& spec,
                          const std::string& model_json) {
  QModel model = QModel::load(model_json);
  double epsilon_min = model.schedule().epsilon_min;
  Testbed bed = make_testbed(spec, std::move(model));
  bed.controller->set_epsilon_override(epsilon_min);
  auto requests =
      generate_requests(bed.whitebox_ids, spec.requests,
                        mix_seed(spec.seed, hash_name("operate-requests")));
  auto outcomes = bed.controller->run_scenario(requests);

  std::string csv = "request_id,slot,ingress_time_s,egress_time_s,latency_s\n";
  std::map<std::string, std::pair<double, int>> per_box;
  for (const auto& o : outcomes) {
    csv += format_row("%llu,%d,%.6f,%.6f,%.6f\n",
                      static_cast<unsigned long long>(o.request_id),
                      o.slot.index(), o.ingress_time_s, o.egress_time_s,
                      o.latency_s);
    if (!o.ok) continue;
    const auto& request = requests[o.request_id];
    auto& in_acc = per_box[request.ingress.whitebox];
    in_acc.first += o.ingress_time_s;
    in_acc.second += 1;
    auto& eg_acc = per_box[request.egress.whitebox];
    eg_acc.first += o.egress_time_s;
    eg_acc.second += 1;
  }

  OperateResult result;
  result.csv = std::move(csv);
  result.mean_feedback_s = mean_endpoint_feedback(outcomes);
  result.dataset_mean = bed.dataset_mean;
  result.improvement_fraction =
      1.0 - result.mean_feedback_s / result.dataset_mean;
  for (const auto& [box, acc] : per_box)
    result.per_pluggable_mean[box] = acc.first / acc.second;
  result.outcomes = std::move(outcomes);

  nlohmann::ordered_json summary;
  summary["mode"] = "operate";
  summary["pluggables"] = spec.pluggable_count;
  summary["requests"] = spec.requests;
  summary["seed"] = spec.seed;
  summary["dataset_mean"] = result.dataset_mean;
  summary["mean_feedback_s"] = result.mean_feedback_s;
  summary["improvement_fraction"] = result.improvement_fraction;
  summary["per_pluggable_mean"] = result.per_pluggable_mean;
  result.summary_json = summary.dump(2) + "\n";

  if (!spec.out_dir.empty()) {
    ensure_dir(spec.out_dir);
    write_text_file(spec.out_dir + "/operate.csv", result.csv);
    write_text_file(spec.out_dir + "/operate_summary.json",
                    result.summary_json);
  }
  return result;
}

ScaleResult run_scale(const ExperimentSpec& spec,
                      const std::vector<int>& counts) {
  ScaleResult result;
  std::string csv = "pluggables,avg_feedback_s,avg_latency_s,wall_time_s\n";
  for (int count : counts) {
    ExperimentSpec sub = spec;
    sub.pluggable_count = count;
    sub.episodes = static_cast<int>(
        (static_cast<std::int64_t>(spec.episodes) * count + 3) / 4);
    sub.out_dir.clear();  // per-count runs stay in memory

    QModel model =
        spec.backend == QBackendKind::Tabular
            ? QModel::tabular(spec.alpha, spec.schedule,
                              mix_seed(spec.seed, hash_name("model") + count))
            : QModel::fnn(spec.fnn_step, spec.schedule,
                          mix_seed(spec.seed, hash_name("model") + count));
    Testbed bed = make_testbed(sub, std::move(model));

    auto train_requests = generate_requests(
        bed.whitebox_ids, sub.episodes,
        mix_seed(spec.seed, hash_name("scale-train") + count));
    bed.controller->run_scenario(train_requests);

    bed.controller->set_epsilon_override(
        bed.controller->model().schedule().epsilon_min);
    auto operate_requests = generate_requests(
        bed.whitebox_ids, sub.requests,
        mix_seed(spec.seed, hash_name("scale-operate") + count));
    auto outcomes = bed.controller->run_scenario(operate_requests);

    double latency_sum = 0.0;
    int latency_n = 0;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      latency_sum += o.latency_s;
      ++latency_n;
    }
    ScaleRow row;
    row.pluggables = count;
    row.avg_feedback_s = mean_endpoint_feedback(outcomes);
    row.avg_latency_s = latency_n ? latency_sum / latency_n : 0.0;
    row.wall_time_s = static_cast<double>(bed.controller->local_time() -
                                          bed.clock->epoch()) /
                      1e6;
    csv += format_row("%d,%.6f,%.6f,%.6f\n", row.pluggables,
                      row.avg_feedback_s, row.avg_latency_s, row.wall_time_s);
    result.rows.push_back(row);
    result.operate_outcomes.push_back(std::move(outcomes));
  }
  result.csv = std::move(csv);

  nlohmann::ordered_json summary;
  summary["mode"] = "scale";
  summary["counts"] = counts;
  summary["episodes"] = spec.episodes;
  summary["requests"] = spec.requests;
  summary["seed"] = spec.seed;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json r;
    r["pluggables"] = row.pluggables;
    r["avg_feedback_s"] = row.avg_feedback_s;
    r["avg_latency_s"] = row.avg_latency_s;
    r["wall_time_s"] = row.wall_time_s;
    rows.push_back(std::move(r));
  }
  summary["rows"] = std::move(rows);
  result.summary_json = summary.dump(2) + "\n";

  if (!spec.out_dir.empty()) {
    ensure_dir(spec.out_dir);
    write_text_file(spec.out_dir + "/scaling.csv", result.csv);
    write_text_file(spec.out_dir + "/scale_summary.json", result.summary_json);
  }
  return result;
}

}  // namespace lfa
