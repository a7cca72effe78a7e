#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lfa {

// Tunable laser grid: 49 positions, 100 GHz spacing, 191300..196100 GHz.
inline constexpr int kSlotCount = 49;
inline constexpr int kBaseFrequencyGhz = 191300;
inline constexpr int kGridGhz = 100;
inline constexpr int kMaxFrequencyGhz =
    kBaseFrequencyGhz + kGridGhz * (kSlotCount - 1);

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidFrequency : public Error {
 public:
  using Error::Error;
};

/// One laser position on the 100 GHz grid. Always valid once constructed.
class FrequencySlot {
 public:
  explicit FrequencySlot(int index) : index_(index) {
    if (index < 0 || index >= kSlotCount) {
      throw InvalidFrequency("slot index " + std::to_string(index) +
                             " outside [0, " + std::to_string(kSlotCount - 1) +
                             "]");
    }
  }

  int index() const { return index_; }
  int frequency_ghz() const { return kBaseFrequencyGhz + kGridGhz * index_; }

  auto operator<=>(const FrequencySlot&) const = default;

 private:
  int index_;
};

int slot_to_frequency(FrequencySlot slot);

/// Inverse of slot_to_frequency. Off-grid or out-of-range values throw
/// InvalidFrequency naming the offending frequency.
FrequencySlot frequency_to_slot(int frequency_ghz);

/// Identifies one pluggable: host whitebox plus port name.
struct TransceiverId {
  std::string whitebox;
  std::string port;

  std::string key() const { return whitebox + "/" + port; }

  auto operator<=>(const TransceiverId&) const = default;
};

struct ConnectivityRequest {
  std::uint64_t request_id = 0;
  TransceiverId ingress;
  TransceiverId egress;
};

/// Microseconds into a nominal non-leap year; the one time scale shared by
/// syslog timestamps, the virtual clock, and feedback records.
using SimMicros = std::int64_t;

/// One measured laser configuration time, the reward source.
struct FeedbackRecord {
  TransceiverId transceiver;
  FrequencySlot slot{0};
  double config_time_s = 0.0;
  SimMicros wall_time = 0;
};

struct SlotStatistics {
  FrequencySlot slot{0};
  double mean_s = 0.0;
  double std_s = 0.0;
  std::int64_t count = 0;
};

}  // namespace lfa
