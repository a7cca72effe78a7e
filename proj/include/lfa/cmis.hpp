#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfa/core.hpp"
#include "lfa/simtime.hpp"

namespace lfa {

class MalformedLine : public Error {
 public:
  MalformedLine(const std::string& what, std::string line)
      : Error(what + ": " + line), line_(std::move(line)) {}
  const std::string& line() const { return line_; }

 private:
  std::string line_;
};

class NonMonotonicTimestamps : public Error {
 public:
  using Error::Error;
};

class InvalidStatistics : public Error {
 public:
  using Error::Error;
};

enum class CmisEventKind {
  DatapathReinit,
  ApConfigured,
  TuningWarning,
  ConfiguredFrequency,
};

/// One xcvrd CMIS log event. frequency/grid are present only for
/// ConfiguredFrequency.
struct CmisEvent {
  SyslogTimestamp timestamp;
  std::string port;
  CmisEventKind kind = CmisEventKind::DatapathReinit;
  std::optional<int> frequency_ghz;
  std::optional<int> grid_ghz;

  bool operator==(const CmisEvent&) const = default;
};

/// Recognizes xcvrd CMIS lines; unrelated syslog lines yield nullopt. A line
/// with the CMIS prefix but a broken timestamp or frequency throws
/// MalformedLine.
std::optional<CmisEvent> parse_log_line(std::string_view line);

/// Canonical single-line rendering; parse_log_line(format_event(e)) == e.
std::string format_event(const CmisEvent& event);

enum class MeasurementOrigin { Real, Augmented };

struct Measurement {
  std::string port;
  FrequencySlot slot{0};
  double config_time_s = 0.0;
  MeasurementOrigin origin = MeasurementOrigin::Real;
};

struct PairingResult {
  std::vector<Measurement> measurements;
  int unmatched_reinits = 0;
};

/// Matches each port's pending DatapathReinit with the next
/// ConfiguredFrequency on that port. Reinits left open (superseded or at
/// stream end) are counted, not measured. Events must be time-ordered.
PairingResult pair_events(std::span<const CmisEvent> events);

/// Per-slot mean / population standard deviation / count, sorted by slot.
/// Only slots with at least one measurement appear.
std::vector<SlotStatistics> aggregate(std::span<const Measurement> samples);

// Augmented copies never go below this floor.
inline constexpr double kMinConfigTimeS = 0.1;

struct AugmentOptions {
  int copies = 8;
  double noise_fraction = 0.05;
  std::uint64_t seed = 1;
};

/// Originals pass through unchanged; each also gains `copies` records with
/// N(0, (noise_fraction * value)^2) perturbed times, clamped at the floor,
/// same port and slot, origin Augmented. Deterministic per seed.
std::vector<Measurement> augment(std::span<const Measurement> originals,
                                 const AugmentOptions& options);

struct LogNormalParams {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Moment-matching fit: a log-normal with the returned parameters has exactly
/// the statistics' mean and standard deviation.
LogNormalParams fit_lognormal(const SlotStatistics& stats);

struct SynthesisSpec {
  double mean_min = 3.2;
  double mean_max = 5.5;
  double std_fraction = 0.1;
  std::uint64_t seed = 7;
};

struct SynthesizedDataset {
  std::vector<SlotStatistics> stats;  // exactly one entry per slot
  double overall_mean = 0.0;
  double min_mean = 0.0;
};

/// Deterministic stand-in dataset: 49 slot means uniform in
/// [mean_min, mean_max], std = std_fraction * mean.
SynthesizedDataset synthesize_dataset(const SynthesisSpec& spec);

// --- file formats ------------------------------------------------------

/// CSV with header "slot,frequency_ghz,mean_s,std_s,count".
std::string stats_to_csv(std::span<const SlotStatistics> stats);
std::vector<SlotStatistics> stats_from_csv(std::string_view csv);

/// JSON fit document: {"fits":[{"slot":..,"frequency_ghz":..,"mu":..,"sigma":..}]}.
std::string fits_to_json(std::span<const SlotStatistics> stats);

/// Loads a fit document covering all 49 slots; anything less throws Error.
std::array<LogNormalParams, kSlotCount> load_fit_json(std::string_view text);

/// Runs parse + pair over a whole log stream, skipping unrelated lines.
PairingResult parse_log_stream(std::istream& in);

}  // namespace lfa
