#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "scits/query.h"
#include "scits/types.h"
#include "scits/workload_config.h"

namespace scits {

// Name of the single measurements table on every backend.
inline constexpr const char* kTableName = "sensors_table";

struct InsertReceipt {
  std::uint64_t records_written = 0;
  std::chrono::nanoseconds elapsed{0};  // monotonic, submission to acknowledgment
};

struct QueryResult {
  ResultSet result;
  std::chrono::nanoseconds elapsed{0};  // monotonic, send to full materialization
};

// One client connection to a target database. Instances are single-owner:
// each workload worker creates and uses its own.
class DbAdapter {
 public:
  virtual ~DbAdapter() = default;

  // Drops and recreates the measurements table with the combined
  // (timestamp, sensor_id) index. Called once before workers start.
  virtual void InitSchema(std::uint64_t sensor_number) = 0;

  // Writes the whole batch with one all-or-nothing bulk operation.
  // Throws std::invalid_argument for an empty batch and BackendError on failure.
  virtual InsertReceipt InsertBatch(std::span<const SensorRecord> batch) = 0;

  // Rows come back in canonical order (see SortCanonical).
  virtual QueryResult ExecuteQuery(const QuerySpec& spec) = 0;

  // Trivial round trip used as a health probe. Throws BackendError.
  virtual void Ping() = 0;

  virtual std::string ServerVersion() = 0;

  // COUNT(*) over the measurements table.
  virtual std::uint64_t RowCount() = 0;
};

using AdapterFactory = std::function<std::unique_ptr<DbAdapter>()>;

// Builds a factory for the definition's target database. Empty ports are
// replaced by the backend default, and credentials are overridden from the
// environment:
//   SCITS_PG_USER, SCITS_PG_PASSWORD         PostgreSQL and TimescaleDB
//   SCITS_CH_USER, SCITS_CH_PASSWORD         ClickHouse
//   SCITS_INFLUX_ORG, SCITS_INFLUX_TOKEN     InfluxDB
// The Reference factory shares one in-memory store among all its adapters.
AdapterFactory MakeAdapterFactory(const WorkloadDefinition& def);

// Connection with defaults and environment overrides applied.
Connection ResolveConnection(TargetDatabase db, Connection c);

}  // namespace scits
