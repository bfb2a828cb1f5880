#include "scits/pg/postgres_adapter.h"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "scits/errors.h"

namespace scits::pg {
namespace {

std::string Float(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr) + "::float8";
}

std::string TimeLiteral(Timestamp t) {
  return "(TIMESTAMPTZ 'epoch' + INTERVAL '1 millisecond' * " + std::to_string(EpochMillis(t)) +
         ")";
}

std::string AggExpr(AggFunc f) {
  switch (f) {
    case AggFunc::kAverage: return "avg(value)";
    case AggFunc::kStdDev: return "stddev_samp(value)";
    case AggFunc::kMin: return "min(value)";
    case AggFunc::kMax: return "max(value)";
  }
  throw std::logic_error("unknown aggregate");
}

std::string BucketExpr(const QuerySpec& spec, PgFlavor flavor) {
  std::string w = std::to_string(spec.bucket_width.count());
  if (flavor == PgFlavor::kTimescaleDB) {
    return "(extract(epoch from time_bucket(INTERVAL '" + w +
           " milliseconds', \"timestamp\", TIMESTAMPTZ 'epoch')) * 1000)::bigint";
  }
  return "(floor(extract(epoch from \"timestamp\") * 1000 / " + w + ") * " + w + ")::bigint";
}

std::string TimeFilter(const QuerySpec& spec) {
  return "\"timestamp\" >= " + TimeLiteral(spec.t_start) + " AND \"timestamp\" < " +
         TimeLiteral(spec.t_end);
}

std::string SensorFilter(const std::vector<SensorId>& ids) {
  if (ids.size() == 1) return "sensor_id = " + std::to_string(ids.front());
  std::string out = "sensor_id = ANY(ARRAY[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(ids[i]);
  }
  return out + "]::bigint[])";
}

std::int64_t ToInt(const std::optional<std::string>& cell) {
  if (!cell) throw BackendError("unexpected NULL in integer column", false);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(cell->data(), cell->data() + cell->size(), v);
  if (ec != std::errc() || ptr != cell->data() + cell->size()) {
    throw BackendError("bad integer '" + *cell + "' in result", false);
  }
  return v;
}

std::optional<double> ToDouble(const std::optional<std::string>& cell) {
  if (!cell) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(cell->c_str(), &end);
  if (end != cell->c_str() + cell->size()) {
    throw BackendError("bad float '" + *cell + "' in result", false);
  }
  if (std::isnan(v)) return std::nullopt;
  return v;
}

}  // namespace

std::vector<std::string> SchemaStatements(PgFlavor flavor) {
  std::vector<std::string> out;
  if (flavor == PgFlavor::kTimescaleDB) out.push_back("CREATE EXTENSION IF NOT EXISTS timescaledb");
  out.push_back(std::string("DROP TABLE IF EXISTS ") + kTableName);
  out.push_back(std::string("CREATE TABLE ") + kTableName +
                " (\"timestamp\" timestamptz NOT NULL, sensor_id bigint NOT NULL, value double "
                "precision NOT NULL)");
  if (flavor == PgFlavor::kTimescaleDB) {
    out.push_back(std::string("SELECT create_hypertable('") + kTableName +
                  "', 'timestamp', chunk_time_interval => INTERVAL '12 hours')");
  }
  out.push_back(std::string("CREATE INDEX ") + kTableName + "_ts_sensor_idx ON " + kTableName +
                " (\"timestamp\", sensor_id)");
  if (flavor == PgFlavor::kTimescaleDB) {
    out.push_back(std::string("ALTER TABLE ") + kTableName +
                  " SET (timescaledb.compress, timescaledb.compress_orderby = '\"timestamp\", "
                  "sensor_id')");
    out.push_back(std::string("SELECT add_compression_policy('") + kTableName +
                  "', INTERVAL '7 days')");
  }
  return out;
}

std::string BuildQuery(const QuerySpec& spec, PgFlavor flavor) {
  ValidateQuerySpec(spec);
  const std::string from = std::string(" FROM ") + kTableName + " WHERE " + TimeFilter(spec);
  const std::string bucket = BucketExpr(spec, flavor);

  switch (spec.type) {
    case QueryType::kQ1:
      return "SELECT (extract(epoch from \"timestamp\") * 1000)::bigint, sensor_id, value" + from +
             " AND " + SensorFilter(spec.sensors) + " ORDER BY 1, 2, 3";
    case QueryType::kQ2:
      return "SELECT " + bucket + " AS interval, max(value), min(value)" + from + " AND " +
             SensorFilter(spec.sensors) + " GROUP BY interval HAVING min(value) < " +
             Float(spec.min_value) + " OR max(value) > " + Float(spec.max_value) +
             " ORDER BY interval";
    case QueryType::kQ3:
      return "SELECT " + AggExpr(spec.agg) + from + " AND " + SensorFilter(spec.sensors);
    case QueryType::kQ4:
      return "SELECT " + bucket + " AS interval, sensor_id, " + AggExpr(spec.agg) + from +
             " AND " + SensorFilter(spec.sensors) +
             " GROUP BY interval, sensor_id ORDER BY interval, sensor_id";
    case QueryType::kQ5: {
      auto side = [&](SensorId id) {
        return "(SELECT " + bucket + " AS interval, " + AggExpr(spec.agg) + " AS val" + from +
               " AND " + SensorFilter({id}) + " GROUP BY interval)";
      };
      return "SELECT s1.interval, s1.val - s2.val FROM " + side(spec.sensors[0]) +
             " s1 INNER JOIN " + side(spec.sensors[1]) +
             " s2 ON s1.interval = s2.interval ORDER BY s1.interval";
    }
  }
  throw std::logic_error("unknown query type");
}

ResultSet DecodeRows(QueryType type, const PgResult& rows) {
  ResultSet out;
  out.type = type;
  for (const auto& row : rows.rows) {
    ResultRow r;
    switch (type) {
      case QueryType::kQ1:
        r.time = FromEpochMillis(ToInt(row.at(0)));
        r.sensor_id = static_cast<SensorId>(ToInt(row.at(1)));
        r.value = ToDouble(row.at(2));
        break;
      case QueryType::kQ2:
        r.time = FromEpochMillis(ToInt(row.at(0)));
        r.value = ToDouble(row.at(1));
        r.value2 = ToDouble(row.at(2));
        break;
      case QueryType::kQ3:
        r.value = ToDouble(row.at(0));
        break;
      case QueryType::kQ4:
        r.time = FromEpochMillis(ToInt(row.at(0)));
        r.sensor_id = static_cast<SensorId>(ToInt(row.at(1)));
        r.value = ToDouble(row.at(2));
        break;
      case QueryType::kQ5:
        r.time = FromEpochMillis(ToInt(row.at(0)));
        r.value = ToDouble(row.at(1));
        break;
    }
    out.rows.push_back(r);
  }
  if (type == QueryType::kQ3 && out.rows.empty()) out.rows.push_back(ResultRow{});
  SortCanonical(out);
  return out;
}

PostgresAdapter::PostgresAdapter(PgParams params, PgFlavor flavor)
    : params_(std::move(params)), flavor_(flavor) {}

PgConnection& PostgresAdapter::Conn() {
  if (!conn_) conn_.emplace(PgConnection::Connect(params_));
  return *conn_;
}

void PostgresAdapter::InitSchema(std::uint64_t) {
  for (const auto& stmt : SchemaStatements(flavor_)) Conn().Query(stmt);
}

InsertReceipt PostgresAdapter::InsertBatch(std::span<const SensorRecord> batch) {
  if (batch.empty()) throw std::invalid_argument("insert_batch: empty batch");
  std::string payload = EncodeBinaryCopy(batch);
  PgConnection& conn = Conn();
  auto start = std::chrono::steady_clock::now();
  std::uint64_t written;
  try {
    written = conn.CopyIn(std::string("COPY ") + kTableName +
                              " (\"timestamp\", sensor_id, value) FROM STDIN (FORMAT binary)",
                          payload);
  } catch (const BackendError& e) {
    if (e.retryable()) conn_.reset();
    throw;
  }
  auto elapsed = std::chrono::steady_clock::now() - start;
  return InsertReceipt{written, elapsed};
}

QueryResult PostgresAdapter::ExecuteQuery(const QuerySpec& spec) {
  std::string sql = BuildQuery(spec, flavor_);
  PgConnection& conn = Conn();
  auto start = std::chrono::steady_clock::now();
  ResultSet rows;
  try {
    rows = DecodeRows(spec.type, conn.Query(sql));
  } catch (const BackendError& e) {
    if (e.retryable()) conn_.reset();
    throw;
  }
  auto elapsed = std::chrono::steady_clock::now() - start;
  return QueryResult{std::move(rows), elapsed};
}

void PostgresAdapter::Ping() {
  try {
    Conn().Query("SELECT 1");
  } catch (const BackendError&) {
    conn_.reset();
    throw;
  }
}

std::string PostgresAdapter::ServerVersion() {
  std::string base = Conn().server_version();
  if (flavor_ == PgFlavor::kTimescaleDB) {
    auto r = Conn().Query("SELECT extversion FROM pg_extension WHERE extname = 'timescaledb'");
    if (!r.rows.empty() && r.rows[0][0]) return "PostgreSQL " + base + " / TimescaleDB " + *r.rows[0][0];
  }
  return "PostgreSQL " + base;
}

std::uint64_t PostgresAdapter::RowCount() {
  auto r = Conn().Query(std::string("SELECT count(*) FROM ") + kTableName);
  if (r.rows.empty()) throw BackendError("COUNT(*) returned no rows", false);
  return static_cast<std::uint64_t>(ToInt(r.rows[0].at(0)));
}

}  // namespace scits::pg
