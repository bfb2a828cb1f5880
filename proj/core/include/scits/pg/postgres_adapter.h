#pragma once

#include <string>
#include <vector>

#include "scits/db_adapter.h"
#include "scits/pg/pg_connection.h"

namespace scits::pg {

enum class PgFlavor { kPostgreSQL, kTimescaleDB };

// DDL run by InitSchema, in order.
//
// PostgreSQL: plain table plus a B-tree on ("timestamp", sensor_id).
// TimescaleDB: the same table turned into a hypertable with 12-hour chunks,
// compressed after 7 days with rows ordered by ("timestamp", sensor_id).
std::vector<std::string> SchemaStatements(PgFlavor flavor);

// SQL text for one query. Buckets are returned as epoch milliseconds; both
// flavors align them to the Unix epoch (TimescaleDB through time_bucket with
// an explicit epoch origin).
std::string BuildQuery(const QuerySpec& spec, PgFlavor flavor);

// Maps text rows of BuildQuery's output onto a canonical ResultSet.
ResultSet DecodeRows(QueryType type, const PgResult& rows);

class PostgresAdapter : public DbAdapter {
 public:
  PostgresAdapter(PgParams params, PgFlavor flavor);

  void InitSchema(std::uint64_t sensor_number) override;
  InsertReceipt InsertBatch(std::span<const SensorRecord> batch) override;
  QueryResult ExecuteQuery(const QuerySpec& spec) override;
  void Ping() override;
  std::string ServerVersion() override;
  std::uint64_t RowCount() override;

 private:
  PgConnection& Conn();

  PgParams params_;
  PgFlavor flavor_;
  std::optional<PgConnection> conn_;
};

}  // namespace scits::pg
