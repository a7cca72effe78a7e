#include <doctest.h>

#include <chrono>
#include <memory>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lfa/cmis.hpp"
#include "lfa/sim.hpp"

using namespace lfa;

namespace {

std::shared_ptr<VirtualClock> test_clock() {
  return VirtualClock::logical(default_sim_epoch());
}

std::unique_ptr<WhiteboxSim> make_box(std::shared_ptr<VirtualClock> clock,
                                      double seconds,
                                      const std::string& port = "Ethernet0") {
  auto sim = std::make_unique<WhiteboxSim>("wb0", std::move(clock), 11);
  sim->add_port(port, LaserModelParams::constant(seconds));
  return sim;
}

}  // namespace

TEST_CASE("sim: constant model returns the exact configured duration") {
  auto sim = make_box(test_clock(), 3.513673);
  auto outcome = sim->set_frequency("Ethernet0", 192500);
  CHECK(outcome.slot.index() == 12);
  CHECK(outcome.config_time_s == doctest::Approx(3.513673).epsilon(1e-12));
  CHECK(outcome.configured_at - outcome.reinit_at == 3513673);
}

TEST_CASE("sim: emitted log lines reproduce the outcome when parsed back") {
  auto sim = make_box(test_clock(), 3.513673);
  std::vector<std::string> lines;
  std::mutex mu;
  sim->add_log_sink([&](const std::string& line) {
    std::lock_guard lock(mu);
    lines.push_back(line);
  });
  auto outcome = sim->set_frequency("Ethernet0", 192500);

  std::vector<CmisEvent> events;
  for (const auto& line : lines) {
    auto e = parse_log_line(line);
    if (e) events.push_back(*e);
  }
  auto paired = pair_events(events);
  REQUIRE(paired.measurements.size() == 1);
  CHECK(paired.measurements[0].port == "Ethernet0");
  CHECK(paired.measurements[0].slot == outcome.slot);
  CHECK(paired.measurements[0].config_time_s ==
        doctest::Approx(outcome.config_time_s).epsilon(1e-12));
  CHECK(paired.unmatched_reinits == 0);
  // The last line is the configured-frequency event, as in the live logs.
  CHECK(lines.back().find("configured laser frequency 192500 GHz grid space "
                          "100 GHz") != std::string::npos);
}

TEST_CASE("sim: state machine and store reflect the applied frequency") {
  auto sim = make_box(test_clock(), 0.5);
  CHECK(sim->transceiver_state("Ethernet0").dp_state ==
        TransceiverState::Dp::Idle);
  sim->set_frequency("Ethernet0", 193400);
  auto state = sim->transceiver_state("Ethernet0");
  CHECK(state.dp_state == TransceiverState::Dp::ConfiguredActive);
  CHECK(state.desired_frequency_ghz == 193400);
  CHECK(state.applied_frequency_ghz == 193400);
  CHECK(sim->store().get("Ethernet0", "applied_freq") == "193400");
  CHECK(sim->store().get("Ethernet0", "status") == "configured");
  CHECK(!sim->store().get("Ethernet9", "status").has_value());
}

TEST_CASE("sim: unknown port and off-grid frequency throw") {
  auto sim = make_box(test_clock(), 0.5);
  CHECK_THROWS_AS(sim->set_frequency("Ethernet9", 192500), UnknownPort);
  CHECK_THROWS_AS(sim->set_frequency("Ethernet0", 192550), InvalidFrequency);
  CHECK_THROWS_AS(sim->set_frequency("Ethernet0", 190000), InvalidFrequency);
  // The failed attempts must not wedge the port.
  auto outcome = sim->set_frequency("Ethernet0", 192500);
  CHECK(outcome.config_time_s == doctest::Approx(0.5));
}

TEST_CASE("sim: sequential same-port calls accumulate on the logical clock") {
  auto clock = test_clock();
  auto sim = make_box(clock, 2.0);
  auto first = sim->set_frequency("Ethernet0", 191300);
  auto second = sim->set_frequency("Ethernet0", 196100);
  CHECK(second.reinit_at >= first.configured_at);
  // Spec'd clock behavior: two sequential configurations advance by the sum.
  CHECK(clock->now() - clock->epoch() >= 4000000);
}

TEST_CASE("sim: same port serializes even under concurrent submission") {
  auto clock = test_clock();
  auto sim = make_box(clock, 1.5);
  SimMicros anchor = clock->now();
  ConfigOutcome a, b;
  std::thread t1([&] { a = sim->set_frequency("Ethernet0", 191300, anchor); });
  std::thread t2([&] { b = sim->set_frequency("Ethernet0", 196100, anchor); });
  t1.join();
  t2.join();
  SimMicros lo = std::min(a.reinit_at, b.reinit_at);
  SimMicros hi = std::max(a.configured_at, b.configured_at);
  CHECK(lo == anchor);
  CHECK(hi - lo == 3000000);  // back to back, no overlap
  CHECK(std::max(a.reinit_at, b.reinit_at) ==
        std::min(a.configured_at, b.configured_at));
}

TEST_CASE("sim: distinct ports run concurrently from a shared anchor") {
  auto clock = test_clock();
  WhiteboxSim sim("wb0", clock, 11);
  sim.add_port("Ethernet0", LaserModelParams::constant(3.0));
  sim.add_port("Ethernet4", LaserModelParams::constant(5.0));
  SimMicros anchor = clock->now();
  auto a = sim.set_frequency("Ethernet0", 192500, anchor);
  auto b = sim.set_frequency("Ethernet4", 192500, anchor);
  CHECK(a.reinit_at == anchor);
  CHECK(b.reinit_at == anchor);  // not pushed behind the other port
  CHECK(a.configured_at == anchor + 3000000);
  CHECK(b.configured_at == anchor + 5000000);
}

TEST_CASE("sim: sampled delays are deterministic per seed and positive") {
  LaserModelParams params{};
  auto fit = fit_lognormal(SlotStatistics{FrequencySlot(0), 4.0, 1.0, 1});
  for (int i = 0; i < kSlotCount; ++i) {
    params.mu[i] = fit.mu;
    params.sigma[i] = fit.sigma;
  }
  LaserModel m1(params, 99);
  LaserModel m2(params, 99);
  for (int i = 0; i < 100; ++i) {
    double s1 = sample_config_time(m1, FrequencySlot(i % kSlotCount));
    double s2 = sample_config_time(m2, FrequencySlot(i % kSlotCount));
    CHECK(s1 == s2);
    CHECK(s1 > 0.0);
  }
}

TEST_CASE("sim: sigma-0 model samples the exact mean") {
  LaserModelParams params = LaserModelParams::constant(4.34);
  LaserModel model(params, 5);
  for (int i = 0; i < 10; ++i) {
    CHECK(sample_config_time(model, FrequencySlot(7)) ==
          doctest::Approx(4.34).epsilon(1e-12));
  }
}

TEST_CASE("sim: model sampling matches the fitted moments") {
  auto fit = fit_lognormal(SlotStatistics{FrequencySlot(0), 4.0, 1.0, 1});
  LaserModelParams params{};
  params.mu[0] = fit.mu;
  params.sigma[0] = fit.sigma;
  LaserModel model(params, 123);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = sample_config_time(model, FrequencySlot(0));
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n;
  double std_dev = std::sqrt(sum2 / n - mean * mean);
  CHECK(mean == doctest::Approx(4.0).epsilon(0.02));
  CHECK(std_dev == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("sim: logical clock lifts monotonically") {
  auto clock = VirtualClock::logical(1000);
  CHECK(clock->now() == 1000);
  clock->wait_until(5000);
  CHECK(clock->now() == 5000);
  clock->wait_until(2000);  // never goes backwards
  CHECK(clock->now() == 5000);
  CHECK(clock->mode() == ClockMode::Logical);
}

TEST_CASE("sim: scaled clock maps simulated time onto wall time") {
  auto clock = VirtualClock::realtime_scaled(100.0, default_sim_epoch());
  auto wall_start = std::chrono::steady_clock::now();
  clock->wait_until(default_sim_epoch() + 500000);  // 0.5 s simulated
  double wall_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - wall_start)
                      .count();
  CHECK(wall_s >= 0.004);  // 0.5 s / 100, minus scheduler slop
  CHECK(wall_s < 0.5);
  CHECK(clock->now() >= default_sim_epoch() + 500000);
}

TEST_CASE("sim: feedback reports simulated seconds under a scaled clock") {
  auto clock = VirtualClock::realtime_scaled(50.0, default_sim_epoch());
  WhiteboxSim sim("wb0", clock, 11);
  sim.add_port("Ethernet0", LaserModelParams::constant(0.2));
  auto wall_start = std::chrono::steady_clock::now();
  auto outcome = sim.set_frequency("Ethernet0", 192500);
  double wall_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - wall_start)
                      .count();
  CHECK(outcome.config_time_s == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(wall_s < 1.0);  // 0.2 s / 50 plus slop, far below real time
}
