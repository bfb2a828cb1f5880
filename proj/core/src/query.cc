#include "scits/query.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "scits/time_util.h"

namespace scits {
namespace {

std::string Describe(const std::optional<double>& v) {
  if (!v) return "NULL";
  std::ostringstream out;
  out.precision(17);
  out << *v;
  return out.str();
}

std::string Describe(const ResultRow& r) {
  return "(" + FormatUtc(r.time) + ", " + std::to_string(r.sensor_id) + ", " + Describe(r.value) +
         ", " + Describe(r.value2) + ")";
}

}  // namespace

void ValidateQuerySpec(const QuerySpec& spec) {
  if (!(spec.t_start < spec.t_end)) throw std::invalid_argument("query range is empty");
  if (spec.sensors.empty()) throw std::invalid_argument("query needs at least one sensor");
  if (spec.type != QueryType::kQ1 && spec.bucket_width <= Millis{0}) {
    throw std::invalid_argument("bucket width must be positive");
  }
  if (spec.type == QueryType::kQ2) {
    if (spec.sensors.size() != 1) throw std::invalid_argument("Q2 takes exactly one sensor");
    if (!(spec.min_value < spec.max_value)) {
      throw std::invalid_argument("Q2 needs min_value < max_value");
    }
  }
  if (spec.type == QueryType::kQ5 && spec.sensors.size() != 2) {
    throw std::invalid_argument("Q5 takes exactly two sensors");
  }
}

QuerySpec MakeQuerySpec(const WorkloadDefinition& def, Timestamp window_start) {
  if (!def.query_type) throw std::invalid_argument("definition has no query type");
  QuerySpec spec;
  spec.type = *def.query_type;
  spec.t_start = window_start;
  spec.t_end = window_start + std::chrono::minutes{def.duration_minutes};
  spec.sensors = def.sensors_filter;
  spec.bucket_width = def.aggregation_interval;
  spec.agg = def.agg_func;
  spec.comp = CompFunc::kSubtract;
  spec.min_value = def.min_value.value_or(0.0);
  spec.max_value = def.max_value.value_or(0.0);
  return spec;
}

void SortCanonical(ResultSet& result) {
  std::sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.time, a.sensor_id, a.value, a.value2) <
           std::tie(b.time, b.sensor_id, b.value, b.value2);
  });
}

bool ValuesClose(std::optional<double> a, std::optional<double> b, double rel_tol) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  double x = *a;
  double y = *b;
  if (x == y) return true;
  return std::abs(x - y) <= rel_tol * std::max(std::abs(x), std::abs(y));
}

std::optional<std::string> CompareResults(const ResultSet& expected, const ResultSet& actual,
                                          double rel_tol) {
  if (expected.type != actual.type) {
    return "query type differs: " + std::string(ToString(expected.type)) + " vs " +
           std::string(ToString(actual.type));
  }
  if (expected.rows.size() != actual.rows.size()) {
    return "row count differs: expected " + std::to_string(expected.rows.size()) + ", got " +
           std::to_string(actual.rows.size());
  }
  for (std::size_t i = 0; i < expected.rows.size(); ++i) {
    const ResultRow& e = expected.rows[i];
    const ResultRow& a = actual.rows[i];
    if (e.time != a.time || e.sensor_id != a.sensor_id || !ValuesClose(e.value, a.value, rel_tol) ||
        !ValuesClose(e.value2, a.value2, rel_tol)) {
      return "row " + std::to_string(i) + " differs: expected " + Describe(e) + ", got " +
             Describe(a);
    }
  }
  return std::nullopt;
}

}  // namespace scits
