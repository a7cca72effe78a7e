#include "lfa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "lfa/simtime.hpp"

namespace lfa {
namespace {

// Intermediate log-line offsets as fractions of the total delay, matching the
// observed xcvrd cadence: a prompt DP_DEINIT echo, the long tuning stretch,
// then the warning shortly before completion.
constexpr double kDpDeinitEchoFrac = 0.00432;
constexpr double kApConfiguredFrac = 0.97028;
constexpr double kTuningWarnFrac = 0.98118;

SimMicros frac_offset(SimMicros duration, double frac) {
  return std::clamp<SimMicros>(
      static_cast<SimMicros>(std::llround(frac * static_cast<double>(duration))),
      0, duration);
}

}  // namespace

LaserModelParams LaserModelParams::constant(double seconds) {
  LaserModelParams params;
  params.mu.fill(std::log(seconds));
  params.sigma.fill(0.0);
  return params;
}

LaserModelParams params_from_stats(std::span<const SlotStatistics> stats) {
  LaserModelParams params;
  std::array<bool, kSlotCount> seen{};
  for (const SlotStatistics& s : stats) {
    LogNormalParams fit = fit_lognormal(s);
    params.mu[s.slot.index()] = fit.mu;
    params.sigma[s.slot.index()] = fit.sigma;
    seen[s.slot.index()] = true;
  }
  int covered = static_cast<int>(std::count(seen.begin(), seen.end(), true));
  if (covered != kSlotCount) {
    throw Error("laser model needs statistics for all " +
                std::to_string(kSlotCount) + " slots, got " +
                std::to_string(covered));
  }
  return params;
}

LaserModelParams params_from_fits(
    const std::array<LogNormalParams, kSlotCount>& fits) {
  LaserModelParams params;
  for (int i = 0; i < kSlotCount; ++i) {
    params.mu[i] = fits[i].mu;
    params.sigma[i] = fits[i].sigma;
  }
  return params;
}

double LaserModel::sample(FrequencySlot slot) {
  double g = params_.mu[slot.index()];
  double s = params_.sigma[slot.index()];
  if (s > 0.0) g += s * rng_.next_normal();
  return std::exp(g);
}

double sample_config_time(LaserModel& model, FrequencySlot slot) {
  return model.sample(slot);
}

// --- VirtualClock -------------------------------------------------------

VirtualClock::VirtualClock(ClockMode mode, double factor, SimMicros epoch)
    : mode_(mode),
      factor_(factor),
      epoch_(epoch),
      logical_now_(epoch),
      wall_epoch_(std::chrono::steady_clock::now()) {}

std::shared_ptr<VirtualClock> VirtualClock::logical(SimMicros epoch) {
  return std::shared_ptr<VirtualClock>(
      new VirtualClock(ClockMode::Logical, 1.0, epoch));
}

std::shared_ptr<VirtualClock> VirtualClock::realtime_scaled(double factor,
                                                            SimMicros epoch) {
  if (!(factor > 0.0)) throw Error("clock factor must be > 0");
  return std::shared_ptr<VirtualClock>(
      new VirtualClock(ClockMode::RealtimeScaled, factor, epoch));
}

SimMicros VirtualClock::now() const {
  if (mode_ == ClockMode::Logical) {
    return logical_now_.load(std::memory_order_acquire);
  }
  auto wall = std::chrono::steady_clock::now() - wall_epoch_;
  double wall_us = std::chrono::duration<double, std::micro>(wall).count();
  return epoch_ + static_cast<SimMicros>(wall_us * factor_);
}

void VirtualClock::wait_until(SimMicros t) {
  if (mode_ == ClockMode::Logical) {
    SimMicros cur = logical_now_.load(std::memory_order_relaxed);
    while (cur < t && !logical_now_.compare_exchange_weak(
                          cur, t, std::memory_order_release,
                          std::memory_order_relaxed)) {
    }
    return;
  }
  auto target = wall_epoch_ + std::chrono::duration_cast<
                                  std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double, std::micro>(
                                      static_cast<double>(t - epoch_) / factor_));
  std::this_thread::sleep_until(target);
}

// --- StateStore ---------------------------------------------------------

void StateStore::set(const std::string& port, const std::string& field,
                     std::string value) {
  std::lock_guard lock(mutex_);
  entries_[port][field] = std::move(value);
}

std::optional<std::string> StateStore::get(const std::string& port,
                                           const std::string& field) const {
  std::lock_guard lock(mutex_);
  auto p = entries_.find(port);
  if (p == entries_.end()) return std::nullopt;
  auto f = p->second.find(field);
  if (f == p->second.end()) return std::nullopt;
  return f->second;
}

// --- WhiteboxSim --------------------------------------------------------

WhiteboxSim::WhiteboxSim(std::string whitebox_id,
                         std::shared_ptr<VirtualClock> clock,
                         std::uint64_t seed)
    : whitebox_id_(std::move(whitebox_id)),
      clock_(std::move(clock)),
      seed_(seed) {}

void WhiteboxSim::add_port(const std::string& name,
                           const LaserModelParams& params) {
  std::lock_guard lock(state_mutex_);
  if (ports_.contains(name)) {
    throw Error("duplicate port " + name + " on " + whitebox_id_);
  }
  auto runtime = std::make_unique<PortRuntime>(
      name, params, mix_seed(seed_, hash_name(name)));
  runtime->cursor = clock_->epoch();
  ports_.emplace(name, std::move(runtime));
  store_.set(name, "status", "idle");
}

void WhiteboxSim::add_log_sink(LogSink sink) {
  std::lock_guard lock(log_mutex_);
  sinks_.push_back(std::move(sink));
}

std::vector<std::string> WhiteboxSim::port_names() const {
  std::lock_guard lock(state_mutex_);
  std::vector<std::string> names;
  names.reserve(ports_.size());
  for (const auto& [name, _] : ports_) names.push_back(name);
  return names;
}

TransceiverState WhiteboxSim::transceiver_state(const std::string& port) const {
  std::lock_guard lock(state_mutex_);
  auto it = ports_.find(port);
  if (it == ports_.end()) throw UnknownPort("unknown port " + port);
  return it->second->state;
}

WhiteboxSim::PortRuntime& WhiteboxSim::runtime(const std::string& port) {
  std::lock_guard lock(state_mutex_);
  auto it = ports_.find(port);
  if (it == ports_.end()) {
    throw UnknownPort("unknown port " + port + " on " + whitebox_id_);
  }
  return *it->second;
}

void WhiteboxSim::emit(const std::string& line) {
  std::lock_guard lock(log_mutex_);
  for (const LogSink& sink : sinks_) sink(line);
}

void WhiteboxSim::emit_cmis(SimMicros at, const std::string& payload,
                            bool warning) {
  emit(format_syslog(at) + " sonic " + (warning ? "WARNING" : "NOTICE") +
       " pmon#xcvrd: CMIS: " + payload);
}

ConfigOutcome WhiteboxSim::set_frequency(const std::string& port,
                                         int frequency_ghz) {
  return set_frequency(port, frequency_ghz, clock_->now());
}

ConfigOutcome WhiteboxSim::set_frequency(const std::string& port,
                                         int frequency_ghz, SimMicros anchor) {
  FrequencySlot slot = frequency_to_slot(frequency_ghz);
  PortRuntime& rt = runtime(port);

  std::uint64_t ticket;
  {
    std::unique_lock lock(rt.gate.mutex);
    ticket = rt.gate.next_ticket++;
    rt.gate.cv.wait(lock, [&] { return rt.gate.serving == ticket; });
  }

  ConfigOutcome outcome;
  try {
    store_.set(port, "desired_freq", std::to_string(frequency_ghz));

    double delay_s = rt.laser.sample(slot);
    SimMicros duration =
        std::max<SimMicros>(1, std::llround(delay_s * kMicrosPerSecond));
    SimMicros start = std::max(anchor, rt.cursor);
    SimMicros end = start + duration;

    const std::string state_line_tail = ": 400G, lanemask=0xff, state=";

    {
      std::lock_guard lock(state_mutex_);
      rt.state.dp_state = TransceiverState::Dp::DpDeinit;
      rt.state.desired_frequency_ghz = frequency_ghz;
      rt.state.applied_frequency_ghz.reset();
    }
    store_.set(port, "status", "dp_deinit");
    clock_->wait_until(start);
    emit_cmis(start, port + ": force Datapath reinit", false);

    SimMicros echo_at = start + frac_offset(duration, kDpDeinitEchoFrac);
    clock_->wait_until(echo_at);
    emit_cmis(echo_at, port + state_line_tail + "DP_DEINIT, appl=1, retries=0",
              false);

    SimMicros ap_at = start + frac_offset(duration, kApConfiguredFrac);
    clock_->wait_until(ap_at);
    emit_cmis(ap_at, port + state_line_tail + "DP_DEINIT, appl=1, retries=0",
              false);
    emit_cmis(ap_at, port + state_line_tail + "AP_CONFIGURED, appl=1, retries=0",
              false);
    {
      std::lock_guard lock(state_mutex_);
      rt.state.dp_state = TransceiverState::Dp::ApConfigured;
    }
    store_.set(port, "status", "ap_configured");

    SimMicros warn_at = start + frac_offset(duration, kTuningWarnFrac);
    clock_->wait_until(warn_at);
    emit_cmis(warn_at,
              port + " Tuning in progress, channel selection may fail!", true);

    clock_->wait_until(end);
    emit_cmis(end,
              port + " configured laser frequency " +
                  std::to_string(frequency_ghz) + " GHz grid space " +
                  std::to_string(kGridGhz) + " GHz",
              false);
    {
      std::lock_guard lock(state_mutex_);
      rt.state.dp_state = TransceiverState::Dp::ConfiguredActive;
      rt.state.applied_frequency_ghz = frequency_ghz;
    }
    store_.set(port, "applied_freq", std::to_string(frequency_ghz));
    store_.set(port, "status", "configured");

    rt.cursor = end;
    outcome = ConfigOutcome{
        slot, static_cast<double>(duration) / kMicrosPerSecond, start, end};
  } catch (...) {
    std::lock_guard lock(rt.gate.mutex);
    ++rt.gate.serving;
    rt.gate.cv.notify_all();
    throw;
  }

  {
    std::lock_guard lock(rt.gate.mutex);
    ++rt.gate.serving;
    rt.gate.cv.notify_all();
  }
  return outcome;
}

}  // namespace lfa
