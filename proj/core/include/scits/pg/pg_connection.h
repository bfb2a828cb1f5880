#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scits/net/tcp_stream.h"
#include "scits/types.h"

namespace scits::pg {

struct PgParams {
  std::string host = "localhost";
  int port = 5432;
  std::string user = "postgres";
  std::string password;
  std::string database = "postgres";
  Millis timeout{60000};
};

struct PgResult {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<std::string>>> rows;  // text format
  std::string command_tag;
};

// Minimal frontend for the PostgreSQL v3 wire protocol: startup with
// cleartext, MD5 or SCRAM-SHA-256 authentication, simple queries and
// COPY FROM STDIN. Server errors raise BackendError(retryable=false), after
// the connection has been brought back to ReadyForQuery.
class PgConnection {
 public:
  static PgConnection Connect(const PgParams& params);

  // Runs one or more ';'-separated statements; returns the last result that
  // carried rows (or the last command tag).
  PgResult Query(std::string_view sql);

  // Sends `copy_sql` (a COPY ... FROM STDIN statement), streams `payload` as
  // CopyData and returns the row count from the "COPY n" tag.
  std::uint64_t CopyIn(std::string_view copy_sql, std::string_view payload);

  const std::string& server_version() const { return server_version_; }

 private:
  explicit PgConnection(net::TcpStream stream) : stream_(std::move(stream)) {}

  struct Message {
    char type;
    std::string body;
  };

  Message Read();
  void Send(char type, std::string_view body);
  void Authenticate(const PgParams& params);
  // Drains messages up to ReadyForQuery, collecting rows. Throws the first
  // ErrorResponse seen.
  PgResult DrainResults();

  net::TcpStream stream_;
  std::string server_version_;
};

// COPY ... (FORMAT binary) payload for (timestamptz, bigint, float8) rows.
std::string EncodeBinaryCopy(std::span<const SensorRecord> records);

// Microseconds between the Unix epoch and 2000-01-01, PostgreSQL's epoch.
inline constexpr std::int64_t kPgEpochOffsetMicros = 946684800LL * 1000000LL;

}  // namespace scits::pg
