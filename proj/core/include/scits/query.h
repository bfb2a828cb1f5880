#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scits/types.h"
#include "scits/workload_config.h"

namespace scits {

// Parameters of one Q1-Q5 execution. The time range is half-open
// [t_start, t_end) for every query type.
struct QuerySpec {
  QueryType type = QueryType::kQ1;
  Timestamp t_start{};
  Timestamp t_end{};
  std::vector<SensorId> sensors;
  Millis bucket_width{3600000};  // Q2-Q5
  AggFunc agg = AggFunc::kAverage;  // Q3-Q5
  CompFunc comp = CompFunc::kSubtract;  // Q5
  double min_value = 0.0;  // Q2
  double max_value = 0.0;  // Q2

  friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

// Throws std::invalid_argument when the spec breaks an invariant
// (empty range, non-positive bucket, wrong sensor count for Q2/Q5, ...).
void ValidateQuerySpec(const QuerySpec& spec);

// Spec for the definition's query type over [window_start, window_start + DurationMinutes).
QuerySpec MakeQuerySpec(const WorkloadDefinition& def, Timestamp window_start);

// Row layout by query type:
//   Q1  time = record timestamp, sensor_id, value
//   Q2  time = interval start,   value = MAX, value2 = MIN
//   Q3  value = aggregate (time and sensor_id unused); always exactly one row
//   Q4  time = interval start,   sensor_id, value = aggregate
//   Q5  time = interval start,   value = comp(sensor1, sensor2)
// An absent value is SQL NULL: an empty aggregate, or a sample standard
// deviation over fewer than two values.
struct ResultRow {
  Timestamp time{};
  SensorId sensor_id = 0;
  std::optional<double> value;
  std::optional<double> value2;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultSet {
  QueryType type = QueryType::kQ1;
  std::vector<ResultRow> rows;

  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

// Sorts rows by (time, sensor_id, value), the order every adapter returns.
void SortCanonical(ResultSet& result);

// Compares timestamps and ids exactly and values to `rel_tol` relative
// tolerance. Returns a description of the first difference, or nullopt.
std::optional<std::string> CompareResults(const ResultSet& expected, const ResultSet& actual,
                                          double rel_tol = 1e-9);

bool ValuesClose(std::optional<double> a, std::optional<double> b, double rel_tol);

}  // namespace scits
