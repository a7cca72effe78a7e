#include "lfa/simtime.hpp"

#include <array>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>

namespace lfa {
namespace {

constexpr std::array<const char*, 12> kMonthNames = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

constexpr std::array<int, 12> kMonthDays = {31, 28, 31, 30, 31, 30,
                                            31, 31, 30, 31, 30, 31};

constexpr std::array<int, 12> month_starts() {
  std::array<int, 12> out{};
  int acc = 0;
  for (int m = 0; m < 12; ++m) {
    out[m] = acc;
    acc += kMonthDays[m];
  }
  return out;
}

constexpr std::array<int, 12> kMonthStartDay = month_starts();

// Nominal, non-leap rendering year for ISO timestamps.
constexpr int kNominalYear = 2025;

int month_from_name(std::string_view name) {
  for (int m = 0; m < 12; ++m) {
    if (name == kMonthNames[m]) return m + 1;
  }
  return 0;
}

bool read_fixed_digits(std::string_view text, size_t pos, int n, long* out) {
  long v = 0;
  for (int i = 0; i < n; ++i) {
    if (pos + i >= text.size()) return false;
    char c = text[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  *out = v;
  return true;
}

}  // namespace

SimMicros SyslogTimestamp::to_micros() const {
  std::int64_t days = kMonthStartDay[month - 1] + (day - 1);
  return days * kMicrosPerDay + usec_of_day;
}

SyslogTimestamp SyslogTimestamp::from_micros(SimMicros t) {
  // Wrap into the nominal year so formatting stays total.
  std::int64_t within = t % kMicrosPerYear;
  if (within < 0) within += kMicrosPerYear;
  int day_of_year = static_cast<int>(within / kMicrosPerDay);
  std::int64_t usec = within % kMicrosPerDay;
  int month = 11;
  while (month > 0 && kMonthStartDay[month] > day_of_year) --month;
  return SyslogTimestamp{month + 1, day_of_year - kMonthStartDay[month] + 1,
                         usec};
}

std::string format_syslog(const SyslogTimestamp& ts) {
  int secs = static_cast<int>(ts.usec_of_day / kMicrosPerSecond);
  int usec = static_cast<int>(ts.usec_of_day % kMicrosPerSecond);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s %2d %02d:%02d:%02d.%06d",
                kMonthNames[ts.month - 1], ts.day, secs / 3600,
                (secs / 60) % 60, secs % 60, usec);
  return buf;
}

std::string format_syslog(SimMicros t) {
  return format_syslog(SyslogTimestamp::from_micros(t));
}

std::optional<SyslogTimestamp> parse_syslog_timestamp(std::string_view text) {
  // "Mon DD HH:MM:SS.ffffff" — day may be space-padded.
  if (text.size() < 22) return std::nullopt;
  int month = month_from_name(text.substr(0, 3));
  if (month == 0 || text[3] != ' ') return std::nullopt;
  size_t pos = 4;
  if (text[pos] == ' ') ++pos;  // "Jun  5"
  long day = 0;
  size_t day_end = pos;
  while (day_end < text.size() && text[day_end] >= '0' && text[day_end] <= '9')
    ++day_end;
  if (day_end == pos || day_end - pos > 2) return std::nullopt;
  for (size_t i = pos; i < day_end; ++i) day = day * 10 + (text[i] - '0');
  if (day < 1 || day > kMonthDays[month - 1]) return std::nullopt;
  pos = day_end;
  if (pos + 16 > text.size() || text[pos] != ' ') return std::nullopt;
  ++pos;
  long hh = 0, mm = 0, ss = 0, us = 0;
  if (!read_fixed_digits(text, pos, 2, &hh) || text[pos + 2] != ':' ||
      !read_fixed_digits(text, pos + 3, 2, &mm) || text[pos + 5] != ':' ||
      !read_fixed_digits(text, pos + 6, 2, &ss) || text[pos + 8] != '.' ||
      !read_fixed_digits(text, pos + 9, 6, &us)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return SyslogTimestamp{month, static_cast<int>(day),
                         ((hh * 60 + mm) * 60 + ss) * kMicrosPerSecond + us};
}

std::string format_iso8601(SimMicros t) {
  SyslogTimestamp ts = SyslogTimestamp::from_micros(t);
  int secs = static_cast<int>(ts.usec_of_day / kMicrosPerSecond);
  int usec = static_cast<int>(ts.usec_of_day % kMicrosPerSecond);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%06dZ",
                kNominalYear, ts.month, ts.day, secs / 3600, (secs / 60) % 60,
                secs % 60, usec);
  return buf;
}

std::optional<SimMicros> parse_iso8601(std::string_view text) {
  // "YYYY-MM-DDTHH:MM:SS.ffffffZ"
  if (text.size() != 27 || text[26] != 'Z') return std::nullopt;
  long year = 0, month = 0, day = 0, hh = 0, mm = 0, ss = 0, us = 0;
  if (!read_fixed_digits(text, 0, 4, &year) || text[4] != '-' ||
      !read_fixed_digits(text, 5, 2, &month) || text[7] != '-' ||
      !read_fixed_digits(text, 8, 2, &day) || text[10] != 'T' ||
      !read_fixed_digits(text, 11, 2, &hh) || text[13] != ':' ||
      !read_fixed_digits(text, 14, 2, &mm) || text[16] != ':' ||
      !read_fixed_digits(text, 17, 2, &ss) || text[19] != '.' ||
      !read_fixed_digits(text, 20, 6, &us)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > kMonthDays[month - 1] ||
      hh > 23 || mm > 59 || ss > 59) {
    return std::nullopt;
  }
  SyslogTimestamp ts{static_cast<int>(month), static_cast<int>(day),
                     ((hh * 60 + mm) * 60 + ss) * kMicrosPerSecond + us};
  return ts.to_micros();
}

SimMicros default_sim_epoch() {
  return SyslogTimestamp{6, 20, 12LL * 3600 * kMicrosPerSecond}.to_micros();
}

}  // namespace lfa
