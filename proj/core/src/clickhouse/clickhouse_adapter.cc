#include "scits/clickhouse/clickhouse_adapter.h"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "scits/errors.h"

namespace scits::ch {
namespace {

constexpr std::uint64_t kClientVersionMajor = 22;
constexpr std::uint64_t kClientVersionMinor = 1;
constexpr std::uint64_t kClientVersionPatch = 0;
constexpr const char* kClientName = "scits";

class SocketSource : public ByteSource {
 public:
  explicit SocketSource(net::TcpStream& stream) : stream_(stream) {}
  void Read(void* out, std::size_t n) override { stream_.ReadExact(out, n); }

 private:
  net::TcpStream& stream_;
};

std::string HostName() {
  char buf[256] = {};
  if (::gethostname(buf, sizeof(buf) - 1) != 0) return "localhost";
  return buf;
}

std::string ReadException(WireReader& r) {
  std::string out;
  for (;;) {
    std::int32_t code = r.Int32();
    std::string name = r.String();
    std::string message = r.String();
    r.String();  // stack trace
    bool nested = r.UInt8() != 0;
    if (!out.empty()) out += "; caused by: ";
    out += "Code: " + std::to_string(code) + ". " + name + ": " + message;
    if (!nested) return out;
  }
}

std::string Float(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return "toFloat64(" + std::string(buf, ptr) + ")";
}

std::string AggExpr(AggFunc f) {
  switch (f) {
    case AggFunc::kAverage: return "avgOrNull(value)";
    case AggFunc::kStdDev: return "stddevSampOrNull(value)";
    case AggFunc::kMin: return "minOrNull(value)";
    case AggFunc::kMax: return "maxOrNull(value)";
  }
  throw std::logic_error("unknown aggregate");
}

std::string SensorFilter(const std::vector<SensorId>& ids) {
  if (ids.size() == 1) return "sensor_id = " + std::to_string(ids.front());
  std::string out = "sensor_id IN (";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out + ")";
}

std::string TimeLiteral(Timestamp t) {
  return "fromUnixTimestamp64Milli(toInt64(" + std::to_string(EpochMillis(t)) + "), 'UTC')";
}

// stddevSamp of a single value is NaN or inf where SQL would say NULL.
std::optional<double> Normalize(std::optional<double> v) {
  if (v && !std::isfinite(*v)) return std::nullopt;
  return v;
}

const Column& ColumnAt(const Block& b, std::size_t i) {
  if (i >= b.columns.size()) throw BackendError("result block has too few columns", false);
  return b.columns[i];
}

}  // namespace

ChConnection::ChConnection(net::TcpStream stream) : stream_(std::move(stream)) {}

ChConnection ChConnection::Connect(const ChParams& params) {
  ChConnection conn(net::TcpStream::Connect(params.host, params.port, params.timeout));
  WireWriter w;
  w.VarUInt(client_code::kHello);
  w.String(std::string("ClickHouse ") + kClientName);
  w.VarUInt(kClientVersionMajor);
  w.VarUInt(kClientVersionMinor);
  w.VarUInt(kClientRevision);
  w.String(params.database);
  w.String(params.user);
  w.String(params.password);
  conn.stream_.WriteAll(w.bytes());

  SocketSource src(conn.stream_);
  WireReader r(src);
  try {
    std::uint64_t code = r.VarUInt();
    if (code == server_code::kException) throw BackendError(ReadException(r), false);
    if (code != server_code::kHello) {
      throw BackendError("unexpected packet " + std::to_string(code) + " instead of hello", false);
    }
    std::string name = r.String();
    std::uint64_t major = r.VarUInt();
    std::uint64_t minor = r.VarUInt();
    std::uint64_t server_revision = r.VarUInt();
    conn.revision_ = std::min(server_revision, kClientRevision);
    if (conn.revision_ >= kRevisionWithServerTimezone) r.String();
    if (conn.revision_ >= kRevisionWithServerDisplayName) r.String();
    std::uint64_t patch = 0;
    if (conn.revision_ >= kRevisionWithVersionPatch) patch = r.VarUInt();
    conn.server_version_ = name + " " + std::to_string(major) + "." + std::to_string(minor) + "." +
                           std::to_string(patch);
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const BackendError*>(&e)) throw;
    throw BackendError(std::string("malformed server hello: ") + e.what(), false);
  }
  return conn;
}

void ChConnection::SendQuery(const std::string& sql) {
  WireWriter w;
  w.VarUInt(client_code::kQuery);
  w.String("");  // query id
  if (revision_ >= kRevisionWithClientInfo) {
    w.UInt8(1);  // initial query
    w.String("");  // initial user
    w.String("");  // initial query id
    w.String("[::ffff:127.0.0.1]:0");
    w.UInt8(1);  // TCP interface
    const char* os_user = ::getenv("USER");
    w.String(os_user ? os_user : "");
    w.String(HostName());
    w.String(std::string("ClickHouse ") + kClientName);
    w.VarUInt(kClientVersionMajor);
    w.VarUInt(kClientVersionMinor);
    w.VarUInt(kClientRevision);
    if (revision_ >= kRevisionWithQuotaKeyInClientInfo) w.String("");
    if (revision_ >= kRevisionWithVersionPatch) w.VarUInt(kClientVersionPatch);
  }
  w.String("");  // end of settings
  w.VarUInt(kStageComplete);
  w.VarUInt(0);  // no compression
  w.String(sql);
  stream_.WriteAll(w.bytes());
  SendData(Block{});
}

void ChConnection::SendData(const Block& block) {
  WireWriter w;
  w.VarUInt(client_code::kData);
  if (revision_ >= kRevisionWithTemporaryTables) w.String("");
  WriteBlock(w, block);
  stream_.WriteAll(w.bytes());
}

std::uint64_t ChConnection::ReceivePacket(std::vector<Block>* blocks) {
  SocketSource src(stream_);
  WireReader r(src);
  try {
    std::uint64_t code = r.VarUInt();
    switch (code) {
      case server_code::kData: {
        if (revision_ >= kRevisionWithTemporaryTables) r.String();
        Block b = ReadBlock(r);
        if (blocks && b.rows > 0) blocks->push_back(std::move(b));
        break;
      }
      case server_code::kException:
        throw BackendError(ReadException(r), false);
      case server_code::kProgress:
        r.VarUInt();  // rows
        r.VarUInt();  // bytes
        if (revision_ >= kRevisionWithTotalRowsInProgress) r.VarUInt();
        if (revision_ >= kRevisionWithClientWriteInfo) {
          r.VarUInt();
          r.VarUInt();
        }
        break;
      case server_code::kProfileInfo:
        r.VarUInt();  // rows
        r.VarUInt();  // blocks
        r.VarUInt();  // bytes
        r.UInt8();    // applied limit
        r.VarUInt();  // rows before limit
        r.UInt8();    // calculated rows before limit
        break;
      case server_code::kTotals:
      case server_code::kExtremes:
      case server_code::kLog:
      case server_code::kProfileEvents:
        r.String();
        ReadBlock(r);
        break;
      case server_code::kTableColumns:
        r.String();
        r.String();
        break;
      case server_code::kPong:
      case server_code::kEndOfStream:
        break;
      default:
        throw BackendError("unknown server packet " + std::to_string(code), false);
    }
    return code;
  } catch (const BackendError&) {
    throw;
  } catch (const std::runtime_error& e) {
    stream_.Close();
    throw BackendError(std::string("protocol error: ") + e.what(), true);
  }
}

std::vector<Block> ChConnection::DrainUntilEnd() {
  std::vector<Block> blocks;
  while (ReceivePacket(&blocks) != server_code::kEndOfStream) {
  }
  return blocks;
}

void ChConnection::Execute(const std::string& sql) {
  SendQuery(sql);
  DrainUntilEnd();
}

std::vector<Block> ChConnection::Select(const std::string& sql) {
  SendQuery(sql);
  return DrainUntilEnd();
}

void ChConnection::Insert(const std::string& insert_sql, const Block& data) {
  SendQuery(insert_sql);
  // The server answers with the table header before accepting data.
  for (;;) {
    std::uint64_t code = ReceivePacket(nullptr);
    if (code == server_code::kData) break;
    if (code == server_code::kEndOfStream) {
      throw BackendError("server ended the INSERT before asking for data", false);
    }
  }
  SendData(data);
  SendData(Block{});
  DrainUntilEnd();
}

void ChConnection::Ping() {
  WireWriter w;
  w.VarUInt(client_code::kPing);
  stream_.WriteAll(w.bytes());
  while (ReceivePacket(nullptr) != server_code::kPong) {
  }
}

std::vector<std::string> SchemaStatements() {
  return {
      std::string("DROP TABLE IF EXISTS ") + kTableName,
      std::string("CREATE TABLE ") + kTableName +
          " (timestamp DateTime64(3, 'UTC'), sensor_id UInt64, value Float64) "
          "ENGINE = MergeTree() PARTITION BY toYYYYMMDD(timestamp) "
          "ORDER BY (timestamp, sensor_id) SETTINGS index_granularity = 8192",
  };
}

std::string BuildQuery(const QuerySpec& spec) {
  ValidateQuerySpec(spec);
  const std::string w = std::to_string(spec.bucket_width.count());
  const std::string bucket = "intDiv(toUnixTimestamp64Milli(timestamp), " + w + ") * " + w;
  const std::string from = std::string(" FROM ") + kTableName + " WHERE timestamp >= " +
                           TimeLiteral(spec.t_start) + " AND timestamp < " +
                           TimeLiteral(spec.t_end);

  switch (spec.type) {
    case QueryType::kQ1:
      return "SELECT toUnixTimestamp64Milli(timestamp) AS t, sensor_id, value" + from + " AND " +
             SensorFilter(spec.sensors) + " ORDER BY t, sensor_id, value";
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
             " AS s1 INNER JOIN " + side(spec.sensors[1]) +
             " AS s2 ON s1.interval = s2.interval ORDER BY s1.interval";
    }
  }
  throw std::logic_error("unknown query type");
}

Block EncodeRecords(std::span<const SensorRecord> records) {
  WireWriter ts, ids, values;
  for (const auto& r : records) {
    ts.Int64(EpochMillis(r.timestamp));
    ids.UInt64(r.sensor_id);
    values.Float64(r.value);
  }
  Block b;
  b.rows = records.size();
  b.columns.push_back(Column{"timestamp", "DateTime64(3, 'UTC')", ts.Take()});
  b.columns.push_back(Column{"sensor_id", "UInt64", ids.Take()});
  b.columns.push_back(Column{"value", "Float64", values.Take()});
  return b;
}

ResultSet DecodeBlocks(QueryType type, const std::vector<Block>& blocks) {
  ResultSet out;
  out.type = type;
  try {
    for (const Block& b : blocks) {
      const std::uint64_t n = b.rows;
      switch (type) {
        case QueryType::kQ1: {
          auto t = ColumnAsInt64(ColumnAt(b, 0), n);
          auto id = ColumnAsUInt64(ColumnAt(b, 1), n);
          auto v = ColumnAsFloat64(ColumnAt(b, 2), n);
          for (std::uint64_t i = 0; i < n; ++i) {
            out.rows.push_back(ResultRow{FromEpochMillis(t[i]), id[i], v[i], std::nullopt});
          }
          break;
        }
        case QueryType::kQ2: {
          auto t = ColumnAsInt64(ColumnAt(b, 0), n);
          auto mx = ColumnAsFloat64(ColumnAt(b, 1), n);
          auto mn = ColumnAsFloat64(ColumnAt(b, 2), n);
          for (std::uint64_t i = 0; i < n; ++i) {
            out.rows.push_back(ResultRow{FromEpochMillis(t[i]), 0, mx[i], mn[i]});
          }
          break;
        }
        case QueryType::kQ3: {
          auto v = ColumnAsFloat64(ColumnAt(b, 0), n);
          for (std::uint64_t i = 0; i < n; ++i) {
            out.rows.push_back(ResultRow{Timestamp{}, 0, Normalize(v[i]), std::nullopt});
          }
          break;
        }
        case QueryType::kQ4: {
          auto t = ColumnAsInt64(ColumnAt(b, 0), n);
          auto id = ColumnAsUInt64(ColumnAt(b, 1), n);
          auto v = ColumnAsFloat64(ColumnAt(b, 2), n);
          for (std::uint64_t i = 0; i < n; ++i) {
            out.rows.push_back(
                ResultRow{FromEpochMillis(t[i]), id[i], Normalize(v[i]), std::nullopt});
          }
          break;
        }
        case QueryType::kQ5: {
          auto t = ColumnAsInt64(ColumnAt(b, 0), n);
          auto v = ColumnAsFloat64(ColumnAt(b, 1), n);
          for (std::uint64_t i = 0; i < n; ++i) {
            out.rows.push_back(ResultRow{FromEpochMillis(t[i]), 0, Normalize(v[i]), std::nullopt});
          }
          break;
        }
      }
    }
  } catch (const BackendError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw BackendError(std::string("cannot decode result: ") + e.what(), false);
  }
  if (type == QueryType::kQ3 && out.rows.empty()) out.rows.push_back(ResultRow{});
  SortCanonical(out);
  return out;
}

ChConnection& ClickHouseAdapter::Conn() {
  if (!conn_) conn_.emplace(ChConnection::Connect(params_));
  return *conn_;
}

// Drops the connection after transport failures so the next call reconnects.
template <typename F>
auto ClickHouseAdapter::Guarded(F&& f) {
  try {
    return f(Conn());
  } catch (const BackendError& e) {
    if (e.retryable()) conn_.reset();
    throw;
  }
}

void ClickHouseAdapter::InitSchema(std::uint64_t) {
  Guarded([](ChConnection& c) {
    for (const auto& stmt : SchemaStatements()) c.Execute(stmt);
    return 0;
  });
}

InsertReceipt ClickHouseAdapter::InsertBatch(std::span<const SensorRecord> batch) {
  if (batch.empty()) throw std::invalid_argument("insert_batch: empty batch");
  Block block = EncodeRecords(batch);
  const std::string sql =
      std::string("INSERT INTO ") + kTableName + " (timestamp, sensor_id, value) VALUES";
  return Guarded([&](ChConnection& c) {
    auto start = std::chrono::steady_clock::now();
    c.Insert(sql, block);
    auto elapsed = std::chrono::steady_clock::now() - start;
    return InsertReceipt{batch.size(), elapsed};
  });
}

QueryResult ClickHouseAdapter::ExecuteQuery(const QuerySpec& spec) {
  const std::string sql = BuildQuery(spec);
  return Guarded([&](ChConnection& c) {
    auto start = std::chrono::steady_clock::now();
    ResultSet rows = DecodeBlocks(spec.type, c.Select(sql));
    auto elapsed = std::chrono::steady_clock::now() - start;
    return QueryResult{std::move(rows), elapsed};
  });
}

void ClickHouseAdapter::Ping() {
  Guarded([](ChConnection& c) {
    c.Ping();
    return 0;
  });
}

std::string ClickHouseAdapter::ServerVersion() {
  return Guarded([](ChConnection& c) { return c.server_version(); });
}

std::uint64_t ClickHouseAdapter::RowCount() {
  return Guarded([](ChConnection& c) {
    auto blocks = c.Select(std::string("SELECT count() FROM ") + kTableName);
    if (blocks.empty() || blocks[0].columns.empty()) {
      throw BackendError("count() returned no rows", false);
    }
    return ColumnAsUInt64(blocks[0].columns[0], blocks[0].rows).at(0);
  });
}

}  // namespace scits::ch
