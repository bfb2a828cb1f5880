#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scits/clickhouse/ch_protocol.h"
#include "scits/db_adapter.h"
#include "scits/net/tcp_stream.h"

namespace scits::ch {

struct ChParams {
  std::string host = "localhost";
  int port = 9000;
  std::string user = "default";
  std::string password;
  std::string database = "default";
  Millis timeout{60000};
};

// Client side of the ClickHouse native TCP protocol, uncompressed.
// Server exceptions raise BackendError(retryable=false).
class ChConnection {
 public:
  static ChConnection Connect(const ChParams& params);

  // Statements without a result set (DDL).
  void Execute(const std::string& sql);
  // All non-empty data blocks of a SELECT.
  std::vector<Block> Select(const std::string& sql);
  // `insert_sql` must end in "VALUES"; `data` travels as one native block.
  void Insert(const std::string& insert_sql, const Block& data);
  void Ping();

  // "ClickHouse 22.1.3" style string from the server hello.
  const std::string& server_version() const { return server_version_; }
  std::uint64_t revision() const { return revision_; }

 private:
  explicit ChConnection(net::TcpStream stream);

  void SendQuery(const std::string& sql);
  void SendData(const Block& block);
  // Reads one server packet; returns its code. Data payloads are appended to
  // `blocks` when non-null.
  std::uint64_t ReceivePacket(std::vector<Block>* blocks);
  std::vector<Block> DrainUntilEnd();

  net::TcpStream stream_;
  std::uint64_t revision_ = kClientRevision;
  std::string server_version_;
};

// CREATE TABLE and friends, in order: MergeTree partitioned by day and
// ordered by (timestamp, sensor_id) with index_granularity 8192.
std::vector<std::string> SchemaStatements();

// SQL for one query; buckets come back as Int64 epoch milliseconds computed
// with integer division, so they are epoch-aligned by construction.
std::string BuildQuery(const QuerySpec& spec);

// Native block holding (timestamp DateTime64(3, 'UTC'), sensor_id UInt64, value Float64).
Block EncodeRecords(std::span<const SensorRecord> records);

ResultSet DecodeBlocks(QueryType type, const std::vector<Block>& blocks);

class ClickHouseAdapter : public DbAdapter {
 public:
  explicit ClickHouseAdapter(ChParams params) : params_(std::move(params)) {}

  void InitSchema(std::uint64_t sensor_number) override;
  InsertReceipt InsertBatch(std::span<const SensorRecord> batch) override;
  QueryResult ExecuteQuery(const QuerySpec& spec) override;
  void Ping() override;
  std::string ServerVersion() override;
  std::uint64_t RowCount() override;

 private:
  ChConnection& Conn();
  template <typename F>
  auto Guarded(F&& f);

  ChParams params_;
  std::optional<ChConnection> conn_;
};

}  // namespace scits::ch
