#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scits {

// All timestamps carry millisecond precision and are UTC.
using Millis = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Millis>;
using SensorId = std::uint64_t;

// One row of the measurements table: (timestamp, sensor_id, value).
struct SensorRecord {
  Timestamp timestamp;
  SensorId sensor_id = 0;
  double value = 0.0;

  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

// Upper bound of generated values: the max of a signed 32-bit integer.
inline constexpr double kMaxSensorValue = 2147483647.0;

// On-the-wire size of one record: 8-byte timestamp, 8-byte id, 8-byte double.
inline constexpr std::size_t kRecordSizeBytes = 24;

enum class TargetDatabase { kClickHouse, kInfluxDB, kTimescaleDB, kPostgreSQL, kReference };
enum class WorkloadKind { kIngestion, kQuery };
enum class QueryType { kQ1 = 1, kQ2, kQ3, kQ4, kQ5 };
enum class AggFunc { kAverage, kStdDev, kMin, kMax };
enum class CompFunc { kSubtract };

std::string_view ToString(TargetDatabase db);
std::string_view ToString(WorkloadKind kind);
std::string_view ToString(QueryType q);
std::string_view ToString(AggFunc f);
std::string_view ToString(CompFunc f);

// Case-insensitive parsers; return nullopt for unknown names.
std::optional<TargetDatabase> ParseTargetDatabase(std::string_view s);
std::optional<WorkloadKind> ParseWorkloadKind(std::string_view s);
std::optional<QueryType> ParseQueryType(std::string_view s);
std::optional<AggFunc> ParseAggFunc(std::string_view s);
std::optional<CompFunc> ParseCompFunc(std::string_view s);

inline std::int64_t EpochMillis(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp FromEpochMillis(std::int64_t ms) { return Timestamp{Millis{ms}}; }

}  // namespace scits
