// lfactl: drives the laser frequency allocation testbed from the shell.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lfa/agent.hpp"
#include "lfa/allocator.hpp"
#include "lfa/cmis.hpp"
#include "lfa/controller.hpp"
#include "lfa/harness.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct GlobalOpts {
  std::uint64_t seed = 7;
  std::string out_dir = "out";
  std::string clock = "logical";
};

struct ExperimentOpts {
  int pluggables = 4;
  int episodes = 3000;
  int requests = 500;
  std::string backend = "tabular";
  double alpha = 0.1;
  double fnn_step = 0.01;
  double epsilon0 = 1.0;
  double epsilon_min = 0.05;
  double decay = 0.999002;
  std::string fit_file;
  double mean_min = 3.2;
  double mean_max = 5.5;
  double std_fraction = 0.1;
  std::uint64_t dataset_seed = 7;
};

std::string check_clock(const std::string& value) {
  if (value == "logical") return {};
  if (value.rfind("scaled:", 0) == 0) {
    try {
      if (std::stod(value.substr(7)) > 0.0) return {};
    } catch (const std::exception&) {
    }
  }
  return "clock must be 'logical' or 'scaled:<factor>' with factor > 0";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lfa::Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

lfa::ExperimentSpec build_spec(const GlobalOpts& g, const ExperimentOpts& e) {
  lfa::ExperimentSpec spec;
  spec.pluggable_count = e.pluggables;
  spec.episodes = e.episodes;
  spec.requests = e.requests;
  spec.backend = e.backend == "fnn" ? lfa::QBackendKind::Fnn
                                    : lfa::QBackendKind::Tabular;
  spec.alpha = e.alpha;
  spec.fnn_step = e.fnn_step;
  spec.schedule =
      lfa::ExplorationSchedule{e.epsilon0, e.epsilon_min, e.decay, 0};
  if (!e.fit_file.empty()) {
    spec.dataset.fit_json = read_file(e.fit_file);
  } else {
    spec.dataset.synthesis = lfa::SynthesisSpec{e.mean_min, e.mean_max,
                                                e.std_fraction, e.dataset_seed};
  }
  spec.seed = g.seed;
  spec.out_dir = g.out_dir;
  if (g.clock == "logical") {
    spec.clock_mode = lfa::ClockMode::Logical;
  } else {
    spec.clock_mode = lfa::ClockMode::RealtimeScaled;
    spec.clock_factor = std::stod(g.clock.substr(7));
  }
  return spec;
}

int cmd_parse_logs(const GlobalOpts& g, const std::vector<std::string>& files,
                   int copies, double noise_fraction, std::uint64_t aug_seed) {
  std::vector<lfa::Measurement> measurements;
  int unmatched = 0;
  std::vector<std::string> inputs = files.empty()
                                        ? std::vector<std::string>{"-"}
                                        : files;
  for (const auto& file : inputs) {
    lfa::PairingResult result;
    if (file == "-") {
      result = lfa::parse_log_stream(std::cin);
    } else {
      std::ifstream in(file);
      if (!in) throw lfa::Error("cannot open " + file);
      result = lfa::parse_log_stream(in);
    }
    measurements.insert(measurements.end(), result.measurements.begin(),
                        result.measurements.end());
    unmatched += result.unmatched_reinits;
  }
  if (copies > 0)
    measurements = lfa::augment(
        measurements, lfa::AugmentOptions{copies, noise_fraction, aug_seed});
  auto stats = lfa::aggregate(measurements);
  if (stats.empty()) throw lfa::Error("no CMIS measurements found");

  std::error_code ec;
  std::filesystem::create_directories(g.out_dir, ec);
  if (ec) throw lfa::Error("cannot create " + g.out_dir + ": " + ec.message());
  lfa::write_text_file(g.out_dir + "/slot_stats.csv", lfa::stats_to_csv(stats));
  lfa::write_text_file(g.out_dir + "/laser_fit.json", lfa::fits_to_json(stats));

  std::printf("parsed %zu measurements (%d unmatched reinits) over %zu slots\n",
              measurements.size(), unmatched, stats.size());
  std::printf("wrote %s/slot_stats.csv and %s/laser_fit.json\n",
              g.out_dir.c_str(), g.out_dir.c_str());
  return 0;
}

int cmd_synth(const GlobalOpts& g, const ExperimentOpts& e) {
  auto dataset = lfa::synthesize_dataset(lfa::SynthesisSpec{
      e.mean_min, e.mean_max, e.std_fraction, e.dataset_seed});
  std::error_code ec;
  std::filesystem::create_directories(g.out_dir, ec);
  if (ec) throw lfa::Error("cannot create " + g.out_dir + ": " + ec.message());
  lfa::write_text_file(g.out_dir + "/slot_stats.csv",
                       lfa::stats_to_csv(dataset.stats));
  lfa::write_text_file(g.out_dir + "/laser_fit.json",
                       lfa::fits_to_json(dataset.stats));
  std::printf("synthesized %d slots, mean %.6f s, best %.6f s\n",
              lfa::kSlotCount, dataset.overall_mean, dataset.min_mean);
  std::printf("wrote %s/slot_stats.csv and %s/laser_fit.json\n",
              g.out_dir.c_str(), g.out_dir.c_str());
  return 0;
}

int cmd_train(const GlobalOpts& g, const ExperimentOpts& e) {
  auto result = lfa::run_train(build_spec(g, e));
  std::printf("trained %d pluggables for %d episodes (%s backend, seed %llu)\n",
              e.pluggables, e.episodes, e.backend.c_str(),
              static_cast<unsigned long long>(g.seed));
  std::printf("dataset mean %.6f s, best slot mean %.6f s\n",
              result.dataset_mean, result.best_slot_mean);
  std::printf("final moving average %.6f s (%.1f%% below dataset mean)\n",
              result.final_moving_avg,
              100.0 * (1.0 - result.final_moving_avg / result.dataset_mean));
  std::printf("wrote %s/{training_curve.csv,train_summary.json,model.json}\n",
              g.out_dir.c_str());
  return 0;
}

int cmd_operate(const GlobalOpts& g, const ExperimentOpts& e,
                const std::string& model_file) {
  if (model_file.empty())
    throw lfa::ModelNotFound("operate needs --model <file>");
  std::ifstream in(model_file, std::ios::binary);
  if (!in) throw lfa::ModelNotFound("model file " + model_file + " not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto result = lfa::run_operate(build_spec(g, e), buf.str());
  std::printf("served %d requests over %d pluggables\n", e.requests,
              e.pluggables);
  std::printf("mean feedback %.6f s vs dataset mean %.6f s (%.1f%% better)\n",
              result.mean_feedback_s, result.dataset_mean,
              100.0 * result.improvement_fraction);
  for (const auto& [box, mean] : result.per_pluggable_mean)
    std::printf("  %s: %.6f s\n", box.c_str(), mean);
  std::printf("wrote %s/{operate.csv,operate_summary.json}\n",
              g.out_dir.c_str());
  return 0;
}

int cmd_scale(const GlobalOpts& g, const ExperimentOpts& e,
              const std::vector<int>& counts) {
  auto result = lfa::run_scale(build_spec(g, e), counts);
  std::printf("%-10s %-16s %-16s %-12s\n", "pluggables", "avg_feedback_s",
              "avg_latency_s", "wall_time_s");
  for (const auto& row : result.rows)
    std::printf("%-10d %-16.6f %-16.6f %-12.3f\n", row.pluggables,
                row.avg_feedback_s, row.avg_latency_s, row.wall_time_s);
  std::printf("wrote %s/{scaling.csv,scale_summary.json}\n", g.out_dir.c_str());
  return 0;
}

int cmd_agent_serve(const std::string& config_path, double max_seconds) {
  auto bundle = lfa::load_agent_config(config_path);
  lfa::AgentServer server(std::move(bundle.options), bundle.clock);
  server.start();
  std::printf("agent %s listening on port %u\n", server.whitebox_id().c_str(),
              server.tcp_port());
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  auto started = std::chrono::steady_clock::now();
  while (!g_stop) {
    if (max_seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
                .count() >= max_seconds)
      break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.shutdown();
  std::printf("agent %s stopped\n", server.whitebox_id().c_str());
  return 0;
}

int cmd_model_show(const std::string& model_file) {
  std::ifstream in(model_file, std::ios::binary);
  if (!in) throw lfa::ModelNotFound("model file " + model_file + " not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto model = lfa::QModel::load(buf.str());

  bool tabular = model.kind() == lfa::QBackendKind::Tabular;
  std::printf("backend: %s\n", tabular ? "tabular" : "fnn");
  if (tabular)
    std::printf("alpha: %g\n",
                static_cast<lfa::TabularQ&>(model.backend()).alpha());
  else
    std::printf("step: %g\n",
                static_cast<lfa::FnnQ&>(model.backend()).step());
  const auto& schedule = model.schedule();
  std::printf("episode: %llu\n",
              static_cast<unsigned long long>(schedule.episode));
  std::printf("epsilon: %.6f (floor %.6f, decay %g)\n",
              model.current_epsilon(), schedule.epsilon_min, schedule.decay);
  auto known = model.known_transceivers();
  std::printf("transceivers: %zu\n", known.size());
  for (const auto& key : known) {
    auto slash = key.find('/');
    lfa::TransceiverId id{key.substr(0, slash), key.substr(slash + 1)};
    auto q = model.backend().q_values(id);
    int best = 0;
    for (int s = 1; s < lfa::kSlotCount; ++s)
      if (q[s] > q[best]) best = s;
    lfa::FrequencySlot slot(best);
    std::printf("  %s: best slot %d (%d GHz), q %.6f\n", key.c_str(),
                slot.index(), slot.frequency_ghz(), q[best]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laser frequency slot allocation testbed"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed for the run");
  app.add_option("--out-dir", g.out_dir, "directory for generated artifacts");
  app.add_option("--clock", g.clock,
                 "virtual clock: logical or scaled:<factor>")
      ->check(CLI::Validator(check_clock, "CLOCK"));

  ExperimentOpts e;

  auto* parse_logs = app.add_subcommand(
      "parse-logs", "extract per-slot timing statistics from xcvrd syslogs");
  std::vector<std::string> log_files;
  int augment_copies = 0;
  double noise_fraction = 0.05;
  std::uint64_t augment_seed = 1;
  parse_logs->add_option("files", log_files, "log files ('-' for stdin)");
  parse_logs->add_option("--augment", augment_copies,
                         "noisy copies per measurement");
  parse_logs->add_option("--noise-frac", noise_fraction,
                         "augmentation noise fraction");
  parse_logs->add_option("--augment-seed", augment_seed, "augmentation seed");

  auto* synth = app.add_subcommand(
      "synth-dataset", "synthesize a per-slot timing dataset");
  synth->add_option("--mean-min", e.mean_min, "lowest slot mean, seconds");
  synth->add_option("--mean-max", e.mean_max, "highest slot mean, seconds");
  synth->add_option("--std-frac", e.std_fraction, "std as a fraction of mean");
  synth->add_option("--dataset-seed", e.dataset_seed, "dataset seed");

  auto add_experiment_options = [&e](CLI::App* cmd, bool with_episodes,
                                     bool with_requests) {
    cmd->add_option("--pluggables", e.pluggables, "whitebox count");
    if (with_episodes)
      cmd->add_option("--episodes", e.episodes, "training episodes");
    if (with_requests)
      cmd->add_option("--requests", e.requests, "operating requests");
    cmd->add_option("--backend", e.backend, "tabular or fnn")
        ->check(CLI::IsMember({"tabular", "fnn"}));
    cmd->add_option("--alpha", e.alpha, "tabular learning rate");
    cmd->add_option("--fnn-step", e.fnn_step, "fnn gradient step");
    cmd->add_option("--eps0", e.epsilon0, "initial exploration rate");
    cmd->add_option("--eps-min", e.epsilon_min, "exploration floor");
    cmd->add_option("--decay", e.decay, "per-episode epsilon decay");
    cmd->add_option("--fit", e.fit_file, "laser fit JSON for the dataset");
    cmd->add_option("--mean-min", e.mean_min, "synthesized lowest slot mean");
    cmd->add_option("--mean-max", e.mean_max, "synthesized highest slot mean");
    cmd->add_option("--std-frac", e.std_fraction, "synthesized std fraction");
    cmd->add_option("--dataset-seed", e.dataset_seed, "synthesis seed");
  };

  auto* train = app.add_subcommand(
      "train", "train an allocator against the simulated testbed");
  add_experiment_options(train, true, false);

  auto* operate = app.add_subcommand(
      "operate", "serve requests with a trained allocator");
  std::string model_file;
  operate->add_option("--model", model_file, "trained model JSON");
  add_experiment_options(operate, false, true);

  auto* scale = app.add_subcommand(
      "scale", "sweep pluggable counts, train + operate each");
  std::vector<int> counts{2, 4, 8, 16};
  scale->add_option("--counts", counts, "pluggable counts")->delimiter(',');
  add_experiment_options(scale, true, true);

  auto* agent = app.add_subcommand("agent", "whitebox agent commands");
  agent->require_subcommand(1);
  auto* serve = agent->add_subcommand("serve", "run a TCP whitebox agent");
  std::string agent_config;
  serve->add_option("config", agent_config, "agent config JSON")->required();
  double max_seconds = 0.0;
  serve->add_option("--max-seconds", max_seconds,
                    "stop after this many wall seconds (0 = run until signal)");

  auto* model_cmd = app.add_subcommand("model", "allocator model inspection");
  model_cmd->require_subcommand(1);
  auto* show = model_cmd->add_subcommand("show", "print a model summary");
  std::string show_file;
  show->add_option("file", show_file, "model JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*parse_logs)
      return cmd_parse_logs(g, log_files, augment_copies, noise_fraction,
                            augment_seed);
    if (*synth) return cmd_synth(g, e);
    if (*train) return cmd_train(g, e);
    if (*operate) return cmd_operate(g, e, model_file);
    if (*scale) return cmd_scale(g, e, counts);
    if (*serve) return cmd_agent_serve(agent_config, max_seconds);
    if (*show) return cmd_model_show(show_file);
  } catch (const lfa::ModelNotFound& err) {
    std::cerr << "ModelNotFound: " << err.what() << "\n";
    return 2;
  } catch (const lfa::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
