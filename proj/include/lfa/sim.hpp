#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfa/cmis.hpp"
#include "lfa/core.hpp"
#include "lfa/rng.hpp"

namespace lfa {

class UnknownPort : public Error {
 public:
  using Error::Error;
};

/// Per-slot log-normal delay parameters.
struct LaserModelParams {
  std::array<double, kSlotCount> mu{};
  std::array<double, kSlotCount> sigma{};

  /// Degenerate model: every slot takes exactly `seconds`.
  static LaserModelParams constant(double seconds);
};

/// Moment-matched parameters from per-slot statistics; all 49 slots required.
LaserModelParams params_from_stats(std::span<const SlotStatistics> stats);
LaserModelParams params_from_fits(
    const std::array<LogNormalParams, kSlotCount>& fits);

/// Sampling side of the simulated laser: exp(N(mu[slot], sigma[slot]^2)) from
/// a deterministic, replayable generator.
class LaserModel {
 public:
  LaserModel(const LaserModelParams& params, std::uint64_t seed)
      : params_(params), rng_(seed) {}

  double sample(FrequencySlot slot);

  const LaserModelParams& params() const { return params_; }

 private:
  LaserModelParams params_;
  CountingRng rng_;
};

double sample_config_time(LaserModel& model, FrequencySlot slot);

enum class ClockMode { Logical, RealtimeScaled };

/// Simulated time source. Logical mode advances instantly; scaled mode maps
/// simulated durations onto wall time divided by the factor. All emitted
/// timestamps and feedback use simulated (unscaled) durations either way.
class VirtualClock {
 public:
  static std::shared_ptr<VirtualClock> logical(SimMicros epoch);
  static std::shared_ptr<VirtualClock> realtime_scaled(double factor,
                                                       SimMicros epoch);

  SimMicros now() const;
  /// Logical: lifts now() to at least t. Scaled: sleeps until the wall
  /// instant corresponding to t.
  void wait_until(SimMicros t);

  ClockMode mode() const { return mode_; }
  double factor() const { return factor_; }
  SimMicros epoch() const { return epoch_; }

 private:
  VirtualClock(ClockMode mode, double factor, SimMicros epoch);

  ClockMode mode_;
  double factor_;
  SimMicros epoch_;
  std::atomic<SimMicros> logical_now_;
  std::chrono::steady_clock::time_point wall_epoch_;
};

/// SONiC-style key-value store: (port, field) -> string, atomic per key.
class StateStore {
 public:
  void set(const std::string& port, const std::string& field,
           std::string value);
  std::optional<std::string> get(const std::string& port,
                                 const std::string& field) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::map<std::string, std::string>> entries_;
};

struct TransceiverState {
  enum class Dp { Idle, DpDeinit, ApConfigured, ConfiguredActive };
  Dp dp_state = Dp::Idle;
  std::optional<int> desired_frequency_ghz;
  std::optional<int> applied_frequency_ghz;
};

struct ConfigOutcome {
  FrequencySlot slot{0};
  double config_time_s = 0.0;
  SimMicros reinit_at = 0;
  SimMicros configured_at = 0;
};

using LogSink = std::function<void(const std::string& line)>;

/// A whitebox host: state store plus one daemon context per port. Applying a
/// frequency runs the reinit -> AP_CONFIGURED -> configured sequence with a
/// sampled delay and CMIS log lines whose reinit/configured timestamps bound
/// exactly the returned configuration time.
class WhiteboxSim {
 public:
  WhiteboxSim(std::string whitebox_id, std::shared_ptr<VirtualClock> clock,
              std::uint64_t seed);

  void add_port(const std::string& name, const LaserModelParams& params);

  /// Blocking configure; same-port calls complete in submission order,
  /// distinct ports run independently. Throws UnknownPort / InvalidFrequency.
  ConfigOutcome set_frequency(const std::string& port, int frequency_ghz);
  ConfigOutcome set_frequency(const std::string& port, int frequency_ghz,
                              SimMicros anchor);

  void add_log_sink(LogSink sink);

  std::vector<std::string> port_names() const;
  TransceiverState transceiver_state(const std::string& port) const;
  const StateStore& store() const { return store_; }
  VirtualClock& clock() { return *clock_; }
  const std::shared_ptr<VirtualClock>& clock_ptr() const { return clock_; }
  const std::string& id() const { return whitebox_id_; }

 private:
  // FIFO gate so same-port configurations run strictly in arrival order.
  struct TicketGate {
    std::mutex mutex;
    std::condition_variable cv;
    std::uint64_t next_ticket = 0;
    std::uint64_t serving = 0;
  };

  struct PortRuntime {
    std::string name;
    LaserModel laser;
    TicketGate gate;
    SimMicros cursor = 0;  // end of the last configuration
    TransceiverState state;

    PortRuntime(std::string n, const LaserModelParams& params,
                std::uint64_t seed)
        : name(std::move(n)), laser(params, seed) {}
  };

  void emit(const std::string& line);
  void emit_cmis(SimMicros at, const std::string& payload, bool warning);
  PortRuntime& runtime(const std::string& port);

  std::string whitebox_id_;
  std::shared_ptr<VirtualClock> clock_;
  std::uint64_t seed_;
  StateStore store_;
  std::map<std::string, std::unique_ptr<PortRuntime>> ports_;
  mutable std::mutex state_mutex_;
  std::mutex log_mutex_;
  std::vector<LogSink> sinks_;
};

}  // namespace lfa
