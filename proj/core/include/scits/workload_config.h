#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scits/types.h"

namespace scits {

// Where and how to reach the target database. Fields a backend does not use
// are left empty. Credentials may be overridden at connect time through
// environment variables (see adapters.h).
struct Connection {
  std::string host;
  int port = 0;
  std::string user;
  std::string password;
  std::string database;      // InfluxDB: bucket name
  std::string organization;  // InfluxDB only
  std::string token;         // InfluxDB only

  friend bool operator==(const Connection&, const Connection&) = default;
};

// When an ingestion run ends.
struct BatchesPerClient {
  std::uint64_t batches = 0;
  friend bool operator==(const BatchesPerClient&, const BatchesPerClient&) = default;
};
struct TotalRecords {
  std::uint64_t records = 0;
  friend bool operator==(const TotalRecords&, const TotalRecords&) = default;
};
struct StopAfter {
  Millis duration{0};
  friend bool operator==(const StopAfter&, const StopAfter&) = default;
};
using StopCondition = std::variant<BatchesPerClient, TotalRecords, StopAfter>;

// "batches:500", "records:10000000", "duration:10m".
StopCondition ParseStopCondition(std::string_view text);
std::string FormatStopCondition(const StopCondition& stop);

struct WorkloadDefinition {
  TargetDatabase target_database = TargetDatabase::kReference;
  Connection connection;
  WorkloadKind workload_kind = WorkloadKind::kIngestion;

  // Generic parameters.
  std::int64_t day_span = 1;  // days
  Timestamp start_time{};
  std::uint64_t sensor_number = 1;
  Millis timestamp_granularity{1000};
  std::uint64_t seed = 42;

  // Ingestion.
  std::vector<std::uint64_t> batch_size_options;
  std::vector<std::uint32_t> client_number_options;
  StopCondition stop = BatchesPerClient{500};
  std::uint64_t warmup_batches = 0;
  std::uint32_t max_consecutive_failures = 3;
  bool reset_between_runs = true;

  // Query.
  std::optional<QueryType> query_type;
  std::uint32_t test_retries = 1;
  std::uint32_t duration_minutes = 0;
  Millis aggregation_interval{3600000};
  AggFunc agg_func = AggFunc::kAverage;
  std::vector<SensorId> sensors_filter;
  std::optional<double> min_value;
  std::optional<double> max_value;
  Millis query_timeout{60000};

  // Run environment; empty strings mean "off".
  std::string reset_hook;
  std::string monitor_endpoint;
  Millis monitor_period{1000};

  Timestamp end_time() const { return start_time + std::chrono::days{day_span}; }

  friend bool operator==(const WorkloadDefinition&, const WorkloadDefinition&) = default;
};

// One concrete execution: a single batch size and a single client count.
// Query plans carry batch_size 0 and client_count 1.
struct RunPlan {
  std::uint32_t ordinal = 0;
  WorkloadKind workload_kind = WorkloadKind::kIngestion;
  std::uint64_t batch_size = 0;
  std::uint32_t client_count = 1;
  WorkloadDefinition definition;

  friend bool operator==(const RunPlan&, const RunPlan&) = default;
};

// Parses the XML workload document. Throws ParseError on malformed input or
// unknown/duplicate elements and ValidationError when an invariant fails.
WorkloadDefinition ParseWorkload(std::string_view document);
WorkloadDefinition ParseWorkloadFile(const std::filesystem::path& path);

// Checks every invariant; throws ValidationError naming the field.
void ValidateWorkload(const WorkloadDefinition& def);

// Emits a document that ParseWorkload maps back to an equal definition.
std::string SerializeWorkload(const WorkloadDefinition& def);

// Ingestion: batch_size_options x client_number_options, batch sizes outer.
// Query: exactly one plan.
std::vector<RunPlan> ExpandRuns(const WorkloadDefinition& def);

// One line per plan, as printed by a dry run.
std::string DescribeRunPlan(const RunPlan& plan);

// "1000, 100000" -> {1000, 100000}. Throws std::invalid_argument.
std::vector<std::uint64_t> ParseIntegerList(std::string_view text);

}  // namespace scits
