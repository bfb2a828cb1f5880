#include "scits/time_util.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace scits {
namespace {

using std::chrono::days;
using std::chrono::floor;
using std::chrono::sys_days;
using std::chrono::year_month_day;

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Reads exactly `width` digits starting at `pos`.
int ReadDigits(std::string_view s, std::size_t& pos, int width, std::string_view what) {
  if (pos + width > s.size()) {
    throw std::invalid_argument("timestamp too short while reading " + std::string(what));
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + width, value);
  if (ec != std::errc() || ptr != s.data() + pos + width) {
    throw std::invalid_argument("bad " + std::string(what) + " in timestamp '" + std::string(s) +
                                "'");
  }
  pos += width;
  return value;
}

void Expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw std::invalid_argument("expected '" + std::string(1, c) + "' in timestamp '" +
                                std::string(s) + "'");
  }
  ++pos;
}

}  // namespace

Millis ParseDuration(std::string_view text) {
  std::string_view s = Trim(text);
  if (s.empty()) throw std::invalid_argument("empty duration");

  double total_ms = 0.0;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t start = pos;
    while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
      ++pos;
    }
    if (start == pos) {
      throw std::invalid_argument("duration '" + std::string(s) + "': expected a number");
    }
    double amount = 0.0;
    auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + pos, amount);
    if (ec != std::errc() || ptr != s.data() + pos) {
      throw std::invalid_argument("duration '" + std::string(s) + "': bad number");
    }

    std::size_t unit_start = pos;
    while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
    std::string_view unit = s.substr(unit_start, pos - unit_start);
    double scale = 0.0;
    if (unit == "ms") {
      scale = 1.0;
    } else if (unit == "s") {
      scale = 1e3;
    } else if (unit == "m" || unit == "min") {
      scale = 60e3;
    } else if (unit == "h") {
      scale = 3600e3;
    } else if (unit == "d") {
      scale = 86400e3;
    } else {
      throw std::invalid_argument("duration '" + std::string(s) + "': unknown unit '" +
                                  std::string(unit) + "'");
    }
    total_ms += amount * scale;
  }

  double rounded = std::round(total_ms);
  if (std::abs(total_ms - rounded) > 1e-6) {
    throw std::invalid_argument("duration '" + std::string(s) +
                                "' does not resolve to whole milliseconds");
  }
  return Millis{static_cast<std::int64_t>(rounded)};
}

std::string FormatDuration(Millis d) {
  std::int64_t ms = d.count();
  if (ms == 0) return "0ms";
  std::string out;
  if (ms < 0) {
    out.push_back('-');
    ms = -ms;
  }
  struct Unit {
    std::int64_t size;
    const char* suffix;
  };
  constexpr Unit kUnits[] = {{86400000, "d"}, {3600000, "h"}, {60000, "m"}, {1000, "s"}, {1, "ms"}};
  for (const auto& u : kUnits) {
    if (ms >= u.size) {
      out += std::to_string(ms / u.size);
      out += u.suffix;
      ms %= u.size;
    }
  }
  return out;
}

Timestamp ParseUtc(std::string_view text) {
  std::string_view s = Trim(text);
  std::size_t pos = 0;
  int year = ReadDigits(s, pos, 4, "year");
  Expect(s, pos, '-');
  int month = ReadDigits(s, pos, 2, "month");
  Expect(s, pos, '-');
  int day = ReadDigits(s, pos, 2, "day");
  if (pos >= s.size() || (s[pos] != 'T' && s[pos] != ' ')) {
    throw std::invalid_argument("expected 'T' in timestamp '" + std::string(s) + "'");
  }
  ++pos;
  int hour = ReadDigits(s, pos, 2, "hour");
  Expect(s, pos, ':');
  int minute = ReadDigits(s, pos, 2, "minute");
  Expect(s, pos, ':');
  int second = ReadDigits(s, pos, 2, "second");

  int millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) millis = millis * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw std::invalid_argument("empty fraction in '" + std::string(s) + "'");
    for (int i = digits; i < 3; ++i) millis *= 10;
  }
  std::string_view zone = s.substr(pos);
  if (!(zone.empty() || zone == "Z" || zone == "+00:00" || zone == "+00")) {
    throw std::invalid_argument("only UTC timestamps are accepted: '" + std::string(s) + "'");
  }

  year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                     std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) {
    throw std::invalid_argument("invalid calendar timestamp '" + std::string(s) + "'");
  }
  auto t = sys_days{ymd} + std::chrono::hours{hour} + std::chrono::minutes{minute} +
           std::chrono::seconds{second} + Millis{millis};
  return Timestamp{t.time_since_epoch()};
}

std::string FormatUtc(Timestamp t) {
  auto day_point = floor<days>(t);
  year_month_day ymd{day_point};
  std::int64_t ms_of_day = (t - day_point).count();
  int hour = static_cast<int>(ms_of_day / 3600000);
  int minute = static_cast<int>(ms_of_day / 60000 % 60);
  int second = static_cast<int>(ms_of_day / 1000 % 60);
  int millis = static_cast<int>(ms_of_day % 1000);

  char buf[40];
  if (millis == 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour,
                  minute, second);
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), hour, minute, second, millis);
  }
  return buf;
}

Timestamp FloorToBucket(Timestamp t, Millis width) {
  std::int64_t ms = EpochMillis(t);
  std::int64_t w = width.count();
  std::int64_t q = ms / w;
  if (ms % w != 0 && ms < 0) --q;
  return FromEpochMillis(q * w);
}

}  // namespace scits
