#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "lfa/core.hpp"

namespace lfa {

inline constexpr std::int64_t kMicrosPerSecond = 1000000;
inline constexpr std::int64_t kMicrosPerDay = 86400LL * kMicrosPerSecond;
inline constexpr std::int64_t kMicrosPerYear = 365LL * kMicrosPerDay;

/// Calendar view of a SimMicros instant: syslog timestamps carry no year, so
/// the scale is anchored to a nominal non-leap year.
struct SyslogTimestamp {
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  std::int64_t usec_of_day = 0;

  SimMicros to_micros() const;
  static SyslogTimestamp from_micros(SimMicros t);

  bool operator==(const SyslogTimestamp&) const = default;
};

/// "Jun 20 12:30:41.069151" — the syslog leading field.
std::string format_syslog(SimMicros t);
std::string format_syslog(const SyslogTimestamp& ts);

/// Strict parse of the syslog leading field; nullopt when the text does not
/// start with a well-formed "Mon DD HH:MM:SS.ffffff".
std::optional<SyslogTimestamp> parse_syslog_timestamp(std::string_view text);

/// "2025-06-20T12:30:41.069151Z" — used in feedback DB lines and telemetry.
std::string format_iso8601(SimMicros t);
std::optional<SimMicros> parse_iso8601(std::string_view text);

/// Default simulation epoch: Jun 20, 12:00:00.000000.
SimMicros default_sim_epoch();

}  // namespace lfa
