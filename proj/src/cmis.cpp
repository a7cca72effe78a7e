#include "lfa/cmis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lfa/rng.hpp"

namespace lfa {
namespace {

constexpr std::string_view kNoticeTag = " sonic NOTICE pmon#xcvrd: CMIS: ";
constexpr std::string_view kWarningTag = " sonic WARNING pmon#xcvrd: CMIS: ";
constexpr std::string_view kReinitSuffix = ": force Datapath reinit";
constexpr std::string_view kTuningSuffix =
    " Tuning in progress, channel selection may fail!";
constexpr std::string_view kConfiguredMark = " configured laser frequency ";

bool parse_int(std::string_view text, int* out) {
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), *out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

// Finds the CMIS payload after the syslog prefix, or npos.
size_t payload_offset(std::string_view line, bool* is_warning) {
  size_t pos = line.find(kNoticeTag);
  if (pos != std::string_view::npos) {
    *is_warning = false;
    return pos + kNoticeTag.size();
  }
  pos = line.find(kWarningTag);
  if (pos != std::string_view::npos) {
    *is_warning = true;
    return pos + kWarningTag.size();
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<CmisEvent> parse_log_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
    line.remove_suffix(1);

  bool is_warning = false;
  size_t payload_at = payload_offset(line, &is_warning);
  if (payload_at == std::string_view::npos) return std::nullopt;

  auto ts = parse_syslog_timestamp(line);
  if (!ts) {
    throw MalformedLine("CMIS line with unparseable timestamp",
                        std::string(line));
  }
  std::string_view payload = line.substr(payload_at);

  CmisEvent event;
  event.timestamp = *ts;

  if (payload.ends_with(kReinitSuffix)) {
    event.port = std::string(payload.substr(0, payload.size() - kReinitSuffix.size()));
    event.kind = CmisEventKind::DatapathReinit;
    return event;
  }
  if (is_warning && payload.ends_with(kTuningSuffix)) {
    event.port = std::string(payload.substr(0, payload.size() - kTuningSuffix.size()));
    event.kind = CmisEventKind::TuningWarning;
    return event;
  }
  if (size_t mark = payload.find(kConfiguredMark);
      mark != std::string_view::npos) {
    event.port = std::string(payload.substr(0, mark));
    event.kind = CmisEventKind::ConfiguredFrequency;
    std::string_view rest = payload.substr(mark + kConfiguredMark.size());
    // "<freq> GHz grid space <grid> GHz"
    size_t ghz = rest.find(" GHz grid space ");
    int freq = 0, grid = 0;
    if (ghz == std::string_view::npos || !parse_int(rest.substr(0, ghz), &freq)) {
      throw MalformedLine("CMIS configured line with unparseable frequency",
                          std::string(line));
    }
    std::string_view grid_part = rest.substr(ghz + 16);
    if (!grid_part.ends_with(" GHz") ||
        !parse_int(grid_part.substr(0, grid_part.size() - 4), &grid)) {
      throw MalformedLine("CMIS configured line with unparseable grid",
                          std::string(line));
    }
    event.frequency_ghz = freq;
    event.grid_ghz = grid;
    return event;
  }
  if (size_t state = payload.find(", state=AP_CONFIGURED,");
      state != std::string_view::npos) {
    size_t colon = payload.find(": ");
    event.port = std::string(payload.substr(0, colon == std::string_view::npos
                                                   ? state
                                                   : colon));
    event.kind = CmisEventKind::ApConfigured;
    return event;
  }
  // Other CMIS chatter (DP_DEINIT state lines and the like) is not an event
  // the pipeline consumes.
  return std::nullopt;
}

std::string format_event(const CmisEvent& event) {
  std::string line = format_syslog(event.timestamp);
  switch (event.kind) {
    case CmisEventKind::DatapathReinit:
      line += std::string(kNoticeTag) + event.port + std::string(kReinitSuffix);
      break;
    case CmisEventKind::ApConfigured:
      line += std::string(kNoticeTag) + event.port +
              ": 400G, lanemask=0xff, state=AP_CONFIGURED, appl=1, retries=0";
      break;
    case CmisEventKind::TuningWarning:
      line += std::string(kWarningTag) + event.port + std::string(kTuningSuffix);
      break;
    case CmisEventKind::ConfiguredFrequency:
      line += std::string(kNoticeTag) + event.port + " configured laser frequency " +
              std::to_string(event.frequency_ghz.value()) +
              " GHz grid space " + std::to_string(event.grid_ghz.value()) +
              " GHz";
      break;
  }
  return line;
}

PairingResult pair_events(std::span<const CmisEvent> events) {
  PairingResult result;
  std::map<std::string, std::optional<SyslogTimestamp>> open_reinit;
  for (const CmisEvent& event : events) {
    switch (event.kind) {
      case CmisEventKind::DatapathReinit: {
        auto& slot = open_reinit[event.port];
        if (slot.has_value()) ++result.unmatched_reinits;  // superseded
        slot = event.timestamp;
        break;
      }
      case CmisEventKind::ConfiguredFrequency: {
        auto it = open_reinit.find(event.port);
        if (it == open_reinit.end() || !it->second.has_value()) break;
        SimMicros start = it->second->to_micros();
        SimMicros end = event.timestamp.to_micros();
        if (end < start) {
          throw NonMonotonicTimestamps(
              "configured event at " + format_syslog(event.timestamp) +
              " precedes reinit at " + format_syslog(*it->second) +
              " on port " + event.port);
        }
        result.measurements.push_back(
            Measurement{event.port, frequency_to_slot(*event.frequency_ghz),
                        static_cast<double>(end - start) / kMicrosPerSecond,
                        MeasurementOrigin::Real});
        it->second.reset();
        break;
      }
      default:
        break;
    }
  }
  for (const auto& [port, pending] : open_reinit) {
    if (pending.has_value()) ++result.unmatched_reinits;
  }
  return result;
}

std::vector<SlotStatistics> aggregate(std::span<const Measurement> samples) {
  std::map<int, std::pair<std::vector<double>, int>> by_slot;
  for (const Measurement& m : samples) {
    by_slot[m.slot.index()].first.push_back(m.config_time_s);
  }
  std::vector<SlotStatistics> out;
  out.reserve(by_slot.size());
  for (const auto& [index, entry] : by_slot) {
    const std::vector<double>& values = entry.first;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());  // population
    out.push_back(SlotStatistics{FrequencySlot(index), mean, std::sqrt(var),
                                 static_cast<std::int64_t>(values.size())});
  }
  return out;
}

std::vector<Measurement> augment(std::span<const Measurement> originals,
                                 const AugmentOptions& options) {
  std::vector<Measurement> out;
  out.reserve(originals.size() * (1 + std::max(options.copies, 0)));
  CountingRng rng(options.seed);
  for (const Measurement& m : originals) {
    out.push_back(m);
    for (int i = 0; i < options.copies; ++i) {
      double noisy =
          m.config_time_s + rng.next_normal() * options.noise_fraction *
                                m.config_time_s;
      out.push_back(Measurement{m.port, m.slot,
                                std::max(noisy, kMinConfigTimeS),
                                MeasurementOrigin::Augmented});
    }
  }
  return out;
}

LogNormalParams fit_lognormal(const SlotStatistics& stats) {
  if (!(stats.mean_s > 0.0)) {
    throw InvalidStatistics("log-normal fit needs mean > 0, got " +
                            std::to_string(stats.mean_s));
  }
  double ratio = stats.std_s / stats.mean_s;
  double sigma_sq = std::log(1.0 + ratio * ratio);
  return LogNormalParams{std::log(stats.mean_s) - sigma_sq / 2.0,
                         std::sqrt(sigma_sq)};
}

SynthesizedDataset synthesize_dataset(const SynthesisSpec& spec) {
  if (!(spec.mean_min > 0.0) || spec.mean_max < spec.mean_min) {
    throw InvalidStatistics("mean range must be positive and ordered");
  }
  CountingRng rng(spec.seed);
  SynthesizedDataset out;
  out.stats.reserve(kSlotCount);
  double total = 0.0;
  double lowest = spec.mean_max;
  for (int i = 0; i < kSlotCount; ++i) {
    double mean =
        spec.mean_min + rng.next_unit() * (spec.mean_max - spec.mean_min);
    total += mean;
    lowest = std::min(lowest, mean);
    out.stats.push_back(
        SlotStatistics{FrequencySlot(i), mean, spec.std_fraction * mean, 1});
  }
  out.overall_mean = total / kSlotCount;
  out.min_mean = lowest;
  return out;
}

std::string stats_to_csv(std::span<const SlotStatistics> stats) {
  std::string out = "slot,frequency_ghz,mean_s,std_s,count\n";
  char buf[128];
  for (const SlotStatistics& s : stats) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9f,%.9f,%lld\n", s.slot.index(),
                  s.slot.frequency_ghz(), s.mean_s, s.std_s,
                  static_cast<long long>(s.count));
    out += buf;
  }
  return out;
}

std::vector<SlotStatistics> stats_from_csv(std::string_view csv) {
  std::vector<SlotStatistics> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    int slot = 0, freq = 0;
    double mean = 0.0, std_s = 0.0;
    long long count = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lld", &slot, &freq, &mean,
                    &std_s, &count) != 5) {
      throw Error("bad stats CSV row: " + line);
    }
    out.push_back(SlotStatistics{FrequencySlot(slot), mean, std_s, count});
  }
  return out;
}

std::string fits_to_json(std::span<const SlotStatistics> stats) {
  nlohmann::ordered_json doc;
  doc["fits"] = nlohmann::ordered_json::array();
  for (const SlotStatistics& s : stats) {
    LogNormalParams p = fit_lognormal(s);
    doc["fits"].push_back({{"slot", s.slot.index()},
                           {"frequency_ghz", s.slot.frequency_ghz()},
                           {"mu", p.mu},
                           {"sigma", p.sigma}});
  }
  return doc.dump(2) + "\n";
}

std::array<LogNormalParams, kSlotCount> load_fit_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad fit document: ") + e.what());
  }
  if (!doc.contains("fits") || !doc["fits"].is_array()) {
    throw Error("fit document missing \"fits\" array");
  }
  std::array<LogNormalParams, kSlotCount> out;
  std::array<bool, kSlotCount> seen{};
  for (const auto& entry : doc["fits"]) {
    int slot = entry.at("slot").get<int>();
    if (slot < 0 || slot >= kSlotCount) {
      throw Error("fit document slot " + std::to_string(slot) + " out of range");
    }
    out[slot] = LogNormalParams{entry.at("mu").get<double>(),
                                entry.at("sigma").get<double>()};
    seen[slot] = true;
  }
  int covered = static_cast<int>(std::count(seen.begin(), seen.end(), true));
  if (covered != kSlotCount) {
    throw Error("fit document covers " + std::to_string(covered) + " of " +
                std::to_string(kSlotCount) + " slots");
  }
  return out;
}

PairingResult parse_log_stream(std::istream& in) {
  std::vector<CmisEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (auto event = parse_log_line(line)) events.push_back(*event);
  }
  return pair_events(events);
}

}  // namespace lfa
