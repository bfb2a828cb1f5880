#include "scits/reference_oracle.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "scits/time_util.h"

namespace scits {
namespace {

bool InFilter(const QuerySpec& spec, SensorId id) {
  return std::find(spec.sensors.begin(), spec.sensors.end(), id) != spec.sensors.end();
}

bool InRange(const QuerySpec& spec, Timestamp t) { return t >= spec.t_start && t < spec.t_end; }

std::optional<double> Aggregate(AggFunc f, const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  switch (f) {
    case AggFunc::kAverage: {
      double sum = 0.0;
      for (double x : xs) sum += x;
      return sum / static_cast<double>(xs.size());
    }
    case AggFunc::kStdDev: {
      if (xs.size() < 2) return std::nullopt;
      double sum = 0.0;
      for (double x : xs) sum += x;
      double mean = sum / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    case AggFunc::kMin:
      return *std::min_element(xs.begin(), xs.end());
    case AggFunc::kMax:
      return *std::max_element(xs.begin(), xs.end());
  }
  return std::nullopt;
}

// SELECT TRUNCATE(period, t) AS interval, agg(value) ... WHERE sensor_id = id GROUP BY interval
std::map<Timestamp, std::vector<double>> GroupBySingleSensor(std::span<const SensorRecord> data,
                                                             const QuerySpec& spec, SensorId id) {
  std::map<Timestamp, std::vector<double>> groups;
  for (const auto& r : data) {
    if (r.sensor_id == id && InRange(spec, r.timestamp)) {
      groups[FloorToBucket(r.timestamp, spec.bucket_width)].push_back(r.value);
    }
  }
  return groups;
}

}  // namespace

ResultSet ReferenceEvaluate(std::span<const SensorRecord> data, const QuerySpec& spec) {
  ResultSet out;
  out.type = spec.type;

  switch (spec.type) {
    case QueryType::kQ1: {
      for (const auto& r : data) {
        if (InRange(spec, r.timestamp) && InFilter(spec, r.sensor_id)) {
          out.rows.push_back(ResultRow{r.timestamp, r.sensor_id, r.value, std::nullopt});
        }
      }
      break;
    }
    case QueryType::kQ2: {
      for (const auto& [interval, xs] : GroupBySingleSensor(data, spec, spec.sensors.front())) {
        double mx = *std::max_element(xs.begin(), xs.end());
        double mn = *std::min_element(xs.begin(), xs.end());
        if (mn < spec.min_value || mx > spec.max_value) {
          out.rows.push_back(ResultRow{interval, 0, mx, mn});
        }
      }
      break;
    }
    case QueryType::kQ3: {
      std::vector<double> xs;
      for (const auto& r : data) {
        if (InRange(spec, r.timestamp) && InFilter(spec, r.sensor_id)) xs.push_back(r.value);
      }
      out.rows.push_back(ResultRow{Timestamp{}, 0, Aggregate(spec.agg, xs), std::nullopt});
      break;
    }
    case QueryType::kQ4: {
      std::map<std::pair<Timestamp, SensorId>, std::vector<double>> groups;
      for (const auto& r : data) {
        if (InRange(spec, r.timestamp) && InFilter(spec, r.sensor_id)) {
          groups[{FloorToBucket(r.timestamp, spec.bucket_width), r.sensor_id}].push_back(r.value);
        }
      }
      for (const auto& [key, xs] : groups) {
        out.rows.push_back(ResultRow{key.first, key.second, Aggregate(spec.agg, xs), std::nullopt});
      }
      break;
    }
    case QueryType::kQ5: {
      auto first = GroupBySingleSensor(data, spec, spec.sensors[0]);
      auto second = GroupBySingleSensor(data, spec, spec.sensors[1]);
      // INNER JOIN ... ON Sensor1.period = Sensor2.period
      for (const auto& [interval, xs] : first) {
        auto match = second.find(interval);
        if (match == second.end()) continue;
        auto a = Aggregate(spec.agg, xs);
        auto b = Aggregate(spec.agg, match->second);
        std::optional<double> combined;
        if (a && b) combined = *a - *b;
        out.rows.push_back(ResultRow{interval, 0, combined, std::nullopt});
      }
      break;
    }
  }
  SortCanonical(out);
  return out;
}

}  // namespace scits
