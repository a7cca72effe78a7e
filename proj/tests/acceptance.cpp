// Acceptance gate: ten numbered criteria, one [PASS]/[FAIL] line each.
// Usage: lfa_acceptance [N ...]   (no arguments runs all ten)
// Exit 0 when every selected criterion passes, 1 otherwise.

#include <arpa/inet.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lfa/agent.hpp"
#include "lfa/allocator.hpp"
#include "lfa/cmis.hpp"
#include "lfa/controller.hpp"
#include "lfa/core.hpp"
#include "lfa/harness.hpp"
#include "lfa/netconf.hpp"
#include "lfa/sim.hpp"

#include "test_util.hpp"

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[768];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Verdict fail(std::string detail) { return {false, std::move(detail)}; }

// 1. Slot arithmetic: all 49 slots round-trip; 12 <-> 192500 GHz;
//    bounds 191300/196100 GHz.
Verdict criterion_1() {
  for (int i = 0; i < lfa::kSlotCount; ++i) {
    lfa::FrequencySlot slot(i);
    int ghz = lfa::slot_to_frequency(slot);
    if (ghz != lfa::kBaseFrequencyGhz + i * lfa::kGridGhz)
      return fail(fmt("slot %d maps to %d GHz", i, ghz));
    if (lfa::frequency_to_slot(ghz).index() != i)
      return fail(fmt("%d GHz does not round-trip to slot %d", ghz, i));
  }
  if (lfa::slot_to_frequency(lfa::FrequencySlot(12)) != 192500)
    return fail("slot 12 is not 192500 GHz");
  if (lfa::frequency_to_slot(192500).index() != 12)
    return fail("192500 GHz is not slot 12");
  if (lfa::slot_to_frequency(lfa::FrequencySlot(0)) != 191300 ||
      lfa::slot_to_frequency(lfa::FrequencySlot(48)) != 196100)
    return fail("grid bounds are not 191300/196100 GHz");
  return {true, "49 slots round-trip, 12 <-> 192500 GHz, bounds hold"};
}

// 2. CMIS golden file: exactly one measurement, 3.513673 s +/- 1e-6,
//    Ethernet0, slot 12.
Verdict criterion_2() {
  std::ifstream in(LFA_TESTS_DATA_DIR "/cmis_golden.log");
  if (!in) return fail("golden log missing");
  auto result = lfa::parse_log_stream(in);
  if (result.measurements.size() != 1)
    return fail(fmt("expected 1 measurement, parsed %zu",
                    result.measurements.size()));
  if (result.unmatched_reinits != 0)
    return fail(fmt("%d unmatched reinits", result.unmatched_reinits));
  const auto& m = result.measurements[0];
  if (m.port != "Ethernet0") return fail("port is " + m.port);
  if (m.slot.index() != 12) return fail(fmt("slot is %d", m.slot.index()));
  if (std::fabs(m.config_time_s - 3.513673) > 1e-6)
    return fail(fmt("config time %.9f s", m.config_time_s));
  return {true, fmt("one measurement, %.6f s, Ethernet0, slot 12",
                    m.config_time_s)};
}

// 3. Log-normal fit oracle: 1e6 samples drawn with the standard library from
//    the fitted (mu, sigma) recover the mean within 1% and std within 2%.
Verdict criterion_3() {
  std::string detail;
  for (auto [mean, std_dev] : {std::pair{4.0, 1.0}, std::pair{4.34, 0.5}}) {
    auto params =
        lfa::fit_lognormal({lfa::FrequencySlot(0), mean, std_dev, 100});
    std::mt19937_64 rng(9001);
    std::lognormal_distribution<double> dist(params.mu, params.sigma);
    const int n = 1'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      double x = dist(rng);
      sum += x;
      sum_sq += x * x;
    }
    double sample_mean = sum / n;
    double sample_std = std::sqrt(sum_sq / n - sample_mean * sample_mean);
    double mean_err = std::fabs(sample_mean - mean) / mean;
    double std_err = std::fabs(sample_std - std_dev) / std_dev;
    if (mean_err > 0.01)
      return fail(fmt("(%.2f, %.2f): sampled mean %.4f off by %.2f%%", mean,
                      std_dev, sample_mean, 100.0 * mean_err));
    if (std_err > 0.02)
      return fail(fmt("(%.2f, %.2f): sampled std %.4f off by %.2f%%", mean,
                      std_dev, sample_std, 100.0 * std_err));
    detail += fmt("%s(%.2f, %.2f) off %.2f%%/%.2f%%",
                  detail.empty() ? "" : "; ", mean, std_dev, 100.0 * mean_err,
                  100.0 * std_err);
  }
  return {true, detail};
}

// 4. Q-update arithmetic: one update is exactly -0.434; constant-reward
//    updates follow 4.34 * 0.9^n within 1e-12 and halve every 7 steps.
Verdict criterion_4() {
  lfa::TransceiverId id{"wb0", "Ethernet0"};
  lfa::FrequencySlot slot(12);
  auto model = lfa::QModel::tabular(0.1, lfa::ExplorationSchedule{}, 1);
  model.update(id, slot, 4.34);
  double q1 = model.backend().q_values(id)[slot.index()];
  if (q1 != -0.434) return fail(fmt("first update gave %.17g", q1));

  std::vector<double> errors;
  errors.push_back(std::fabs(q1 + 4.34));  // e_1 after the first update
  for (int n = 2; n <= 120; ++n) {
    model.update(id, slot, 4.34);
    errors.push_back(
        std::fabs(model.backend().q_values(id)[slot.index()] + 4.34));
  }
  for (int n = 1; n <= 120; ++n) {
    double expected = 4.34 * std::pow(0.9, n);
    if (std::fabs(errors[n - 1] - expected) > 1e-12)
      return fail(fmt("step %d error %.17g, expected %.17g", n, errors[n - 1],
                      expected));
  }
  for (int n = 1; n + 7 <= 120; ++n) {
    if (errors[n - 1 + 7] > errors[n - 1] / 2.0 + 1e-12)
      return fail(fmt("error did not halve between steps %d and %d", n, n + 7));
  }
  return {true, "one update exactly -0.434; error follows 4.34*0.9^n, "
                "halving every 7 steps"};
}

int connect_to(std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  timeval tv{5, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    return -1;
  }
  return fd;
}

// 5. Protocol soak: 1000 edit-config round trips over loopback TCP, zero
//    protocol errors, replies match the CMIS log to 6 decimals, and one
//    malformed document closes only its own session.
Verdict criterion_5() {
  auto dataset = lfa::synthesize_dataset(lfa::SynthesisSpec{});
  auto clock = lfa::VirtualClock::logical(lfa::default_sim_epoch());

  lfa::AgentOptions options;
  options.whitebox_id = "wb0";
  options.seed = 41;
  options.ports.push_back(
      lfa::AgentPortConfig{"Ethernet0", lfa::params_from_stats(dataset.stats)});
  lfa::AgentServer server(std::move(options), clock);

  std::mutex log_mutex;
  std::string log_text;
  server.sim().add_log_sink([&](const std::string& line) {
    std::lock_guard<std::mutex> hold(log_mutex);
    log_text += line;
    log_text += '\n';
  });
  server.start();

  auto session = lfa::make_tcp_session("wb0", "127.0.0.1", server.tcp_port(),
                                       clock);
  const int kRounds = 1000;
  std::vector<double> replied;
  replied.reserve(kRounds);
  lfa::SimMicros anchor = 0;
  for (int i = 0; i < kRounds; ++i) {
    lfa::netconf::EditConfig edit;
    edit.message_id = static_cast<std::uint64_t>(i) + 1;
    edit.port = "Ethernet0";
    edit.frequency_ghz =
        lfa::slot_to_frequency(lfa::FrequencySlot(i % lfa::kSlotCount));
    auto reply = session->request(edit, anchor);
    anchor = reply.end_time;
    const auto* ok = std::get_if<lfa::netconf::OkReply>(&reply.message);
    if (!ok || !ok->config_time_s)
      return fail(fmt("round %d: reply is not ok", i));
    if (ok->message_id != edit.message_id)
      return fail(fmt("round %d: message id %llu echoed as %llu", i,
                      static_cast<unsigned long long>(edit.message_id),
                      static_cast<unsigned long long>(ok->message_id)));
    replied.push_back(*ok->config_time_s);
  }

  std::string captured;
  {
    std::lock_guard<std::mutex> hold(log_mutex);
    captured = log_text;
  }
  std::istringstream log_in(captured);
  auto parsed = lfa::parse_log_stream(log_in);
  if (parsed.measurements.size() != static_cast<std::size_t>(kRounds) ||
      parsed.unmatched_reinits != 0)
    return fail(fmt("log yielded %zu measurements (%d unmatched)",
                    parsed.measurements.size(), parsed.unmatched_reinits));
  for (int i = 0; i < kRounds; ++i) {
    const auto& m = parsed.measurements[i];
    if (m.slot.index() != i % lfa::kSlotCount)
      return fail(fmt("round %d configured slot %d", i, m.slot.index()));
    if (std::fabs(m.config_time_s - replied[i]) > 5e-7)
      return fail(fmt("round %d: reply %.6f s vs log %.6f s", i, replied[i],
                      m.config_time_s));
  }

  // A second session sending garbage dies alone; the first keeps serving.
  int bad = connect_to(server.tcp_port());
  if (bad < 0) return fail("could not open the malformed session");
  const char garbage[] = "this is not an rpc document]]>]]>";
  (void)::send(bad, garbage, sizeof garbage - 1, 0);
  char sink[4096];
  bool closed = false;
  for (int i = 0; i < 8; ++i) {
    ssize_t n = ::recv(bad, sink, sizeof sink, 0);
    if (n == 0) {
      closed = true;
      break;
    }
    if (n < 0) break;  // timeout: treated as not closed
  }
  ::close(bad);
  if (!closed) return fail("malformed session was not closed");
  if (!server.listening()) return fail("server stopped listening");

  lfa::netconf::EditConfig after;
  after.message_id = 2000;
  after.port = "Ethernet0";
  after.frequency_ghz = 192500;
  auto reply = session->request(after, anchor);
  if (!std::holds_alternative<lfa::netconf::OkReply>(reply.message))
    return fail("surviving session failed after the malformed one");

  session.reset();
  server.shutdown();
  return {true, fmt("1000 round trips, 0 protocol errors, replies match the "
                    "log to 6 decimals, malformed session died alone")};
}

double operating_mean(const std::vector<lfa::RequestOutcome>& outcomes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    sum += (o.ingress_time_s + o.egress_time_s) / 2.0;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// 6. Fig. 6 analogue: operating mean at least 15% below the brute-force
//    average of all slot means and within 5% of the best pair mean.
Verdict criterion_6() {
  lfa::ExperimentSpec spec;
  auto trained = lfa::run_train(spec);
  auto operated = lfa::run_operate(spec, trained.model_json);

  std::size_t ok_count = 0;
  for (const auto& o : operated.outcomes) ok_count += o.ok;
  if (ok_count != static_cast<std::size_t>(spec.requests))
    return fail(fmt("%zu of %d requests succeeded", ok_count, spec.requests));

  // Brute-force baselines recomputed here from the dataset definition.
  auto dataset = lfa::synthesize_dataset(spec.dataset.synthesis);
  double baseline = 0.0, best = dataset.stats[0].mean_s;
  for (const auto& s : dataset.stats) {
    baseline += s.mean_s;
    if (s.mean_s < best) best = s.mean_s;
  }
  baseline /= static_cast<double>(dataset.stats.size());

  double mean = operating_mean(operated.outcomes);
  double below = 1.0 - mean / baseline;
  double off_best = std::fabs(mean - best) / best;
  if (below < 0.15)
    return fail(fmt("operating mean %.6f s only %.1f%% below baseline %.6f s",
                    mean, 100.0 * below, baseline));
  if (off_best > 0.05)
    return fail(fmt("operating mean %.6f s is %.1f%% off best pair %.6f s",
                    mean, 100.0 * off_best, best));
  return {true, fmt("operating mean %.6f s: %.1f%% below baseline %.6f s, "
                    "%.1f%% off best %.6f s",
                    mean, 100.0 * below, baseline, 100.0 * off_best, best)};
}

// 7. Fig. 7 analogue: the window-200 moving average drifts by < 2% between
//    episodes 2500 and 3000, and epsilon(3000) is 0.05 +/- 0.001.
Verdict criterion_7() {
  lfa::ExperimentSpec spec;  // 4 whiteboxes, one pluggable each
  auto trained = lfa::run_train(spec);

  std::vector<double> feedback;
  feedback.reserve(trained.outcomes.size());
  for (const auto& o : trained.outcomes) {
    if (o.ok) feedback.push_back((o.ingress_time_s + o.egress_time_s) / 2.0);
  }
  if (feedback.size() != 3000)
    return fail(fmt("%zu successful episodes", feedback.size()));

  auto window_mean = [&](std::size_t end) {  // trailing 200 ending at `end`
    double sum = 0.0;
    for (std::size_t i = end - 200; i < end; ++i) sum += feedback[i];
    return sum / 200.0;
  };
  double ma_2500 = window_mean(2500);
  double ma_3000 = window_mean(3000);
  double drift = std::fabs(ma_3000 - ma_2500) / ma_2500;
  if (drift >= 0.02)
    return fail(fmt("moving average drifted %.2f%% (%.6f -> %.6f)",
                    100.0 * drift, ma_2500, ma_3000));

  auto model = lfa::QModel::load(trained.model_json);
  double eps = model.current_epsilon();
  if (model.schedule().episode != 3000)
    return fail(fmt("model stopped at episode %llu",
                    static_cast<unsigned long long>(model.schedule().episode)));
  if (std::fabs(eps - 0.05) > 0.001)
    return fail(fmt("epsilon(3000) = %.6f", eps));
  return {true, fmt("moving average drift %.2f%% (%.6f -> %.6f), "
                    "epsilon(3000) = %.6f",
                    100.0 * drift, ma_2500, ma_3000, eps)};
}

// 8. Fig. 8 analogue: operating feedback varies by <= 10% across counts
//    {2, 4, 8, 16}; mean latency is the mean per-request max endpoint time.
Verdict criterion_8() {
  lfa::ExperimentSpec spec;
  auto result = lfa::run_scale(spec, {2, 4, 8, 16});
  if (result.rows.size() != 4) return fail("expected 4 rows");

  double low = result.rows[0].avg_feedback_s, high = low;
  for (const auto& row : result.rows) {
    low = std::min(low, row.avg_feedback_s);
    high = std::max(high, row.avg_feedback_s);
  }
  double spread = high / low - 1.0;
  if (spread > 0.10)
    return fail(fmt("feedback spread %.1f%% (%.6f .. %.6f s)", 100.0 * spread,
                    low, high));

  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& outcomes = result.operate_outcomes[i];
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      sum += std::max(o.ingress_time_s, o.egress_time_s);
      ++n;
    }
    if (n != static_cast<std::size_t>(spec.requests))
      return fail(fmt("%d pluggables: %zu requests succeeded",
                      result.rows[i].pluggables, n));
    double expected = sum / static_cast<double>(n);
    if (std::fabs(expected - result.rows[i].avg_latency_s) > 1e-6)
      return fail(fmt("%d pluggables: latency %.9f s vs max-endpoint %.9f s",
                      result.rows[i].pluggables, result.rows[i].avg_latency_s,
                      expected));
  }
  return {true, fmt("feedback spread %.1f%% across {2,4,8,16}, latency equals "
                    "mean max endpoint time",
                    100.0 * spread)};
}

// 9. Fnn parity: operating mean within 10% of the Tabular backend's.
Verdict criterion_9() {
  lfa::ExperimentSpec tabular;
  auto tab_model = lfa::run_train(tabular);
  double tab_mean =
      operating_mean(lfa::run_operate(tabular, tab_model.model_json).outcomes);

  lfa::ExperimentSpec fnn = tabular;
  fnn.backend = lfa::QBackendKind::Fnn;
  auto fnn_model = lfa::run_train(fnn);
  double fnn_mean =
      operating_mean(lfa::run_operate(fnn, fnn_model.model_json).outcomes);

  double gap = std::fabs(fnn_mean - tab_mean) / tab_mean;
  if (gap > 0.10)
    return fail(fmt("fnn %.6f s vs tabular %.6f s: %.1f%% apart", fnn_mean,
                    tab_mean, 100.0 * gap));
  return {true, fmt("fnn %.6f s vs tabular %.6f s: %.1f%% apart", fnn_mean,
                    tab_mean, 100.0 * gap)};
}

// 10. Determinism: rerunning criteria 6 through 8 with identical seeds
//     produces byte-identical CSVs (and model/db artifacts).
Verdict criterion_10() {
  lfa::ExperimentSpec spec;
  std::string dir_a = testing_tmpdir();
  std::string dir_b = testing_tmpdir();

  spec.out_dir = dir_a;
  auto train_a = lfa::run_train(spec);
  auto operate_a = lfa::run_operate(spec, train_a.model_json);
  auto scale_a = lfa::run_scale(spec, {2, 4, 8, 16});

  spec.out_dir = dir_b;
  auto train_b = lfa::run_train(spec);
  auto operate_b = lfa::run_operate(spec, train_b.model_json);
  auto scale_b = lfa::run_scale(spec, {2, 4, 8, 16});

  if (train_a.curve_csv != train_b.curve_csv)
    return fail("training curves differ between reruns");
  if (train_a.model_json != train_b.model_json)
    return fail("models differ between reruns");
  if (operate_a.csv != operate_b.csv)
    return fail("operating CSVs differ between reruns");
  if (scale_a.csv != scale_b.csv)
    return fail("scaling CSVs differ between reruns");

  for (const char* name : {"training_curve.csv", "operate.csv", "scaling.csv",
                           "feedback_db.jsonl", "model.json"}) {
    std::string a = read_whole_file(dir_a + "/" + std::string(name));
    std::string b = read_whole_file(dir_b + "/" + std::string(name));
    if (a.empty() || a != b)
      return fail(fmt("%s differs between out-dirs", name));
  }
  return {true, "train, operate and scale artifacts byte-identical "
                "across reruns"};
}

struct Criterion {
  int number;
  const char* name;
  Verdict (*run)();
  long budget_ms;  // 0: no pinned runtime budget
};

const Criterion kCriteria[] = {
    {1, "slot arithmetic", criterion_1, 1},
    {2, "cmis golden file", criterion_2, 10},
    {3, "log-normal fit oracle", criterion_3, 5000},
    {4, "q-update arithmetic", criterion_4, 0},
    {5, "protocol soak", criterion_5, 10000},
    {6, "operating improvement", criterion_6, 60000},
    {7, "training steady state", criterion_7, 60000},
    {8, "scaling sweep", criterion_8, 300000},
    {9, "fnn parity", criterion_9, 180000},
    {10, "determinism", criterion_10, 0},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    int n = std::atoi(argv[i]);
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "usage: %s [criterion 1..10 ...]\n", argv[0]);
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (const auto& c : kCriteria) selected.push_back(c.number);

  int failures = 0;
  for (int n : selected) {
    const Criterion& c = kCriteria[n - 1];
    auto started = std::chrono::steady_clock::now();
    Verdict verdict;
    try {
      verdict = c.run();
    } catch (const std::exception& err) {
      verdict = fail(fmt("threw: %s", err.what()));
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    if (verdict.pass && c.budget_ms > 0 && elapsed > c.budget_ms) {
      verdict = fail(fmt("over budget: %ld ms > %ld ms", elapsed,
                         static_cast<long>(c.budget_ms)));
    }
    std::printf("[%s] criterion %d (%s): %s [%ld ms]\n",
                verdict.pass ? "PASS" : "FAIL", c.number, c.name,
                verdict.detail.c_str(), elapsed);
    std::fflush(stdout);
    failures += verdict.pass ? 0 : 1;
  }
  std::printf("%zu criteria run, %d failed\n", selected.size(), failures);
  return failures == 0 ? 0 : 1;
}
