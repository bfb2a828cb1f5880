#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "scits/db_adapter.h"

namespace httplib {
class Client;
}

namespace scits::influx {

struct InfluxParams {
  std::string host = "localhost";
  int port = 8086;
  std::string organization;
  std::string token;
  std::string bucket = "scits";
  Millis timeout{60000};
};

// Measurement name; sensor_id is a tag and value the only field.
inline constexpr const char* kMeasurement = "sensors";

// "sensors,sensor_id=7 value=123.5 1640995200000\n" per record, ms precision.
std::string EncodeLineProtocol(std::span<const SensorRecord> records);

// Flux script for one query. Buckets are computed from the integer
// nanosecond timestamp so they stay epoch-aligned, and come back in a
// `bucket` column as epoch milliseconds.
std::string BuildFlux(const QuerySpec& spec, std::string_view bucket);

// Parses an annotation-free CSV response into rows of name -> cell. Blank
// lines separate tables, each with its own header. An `error` column raises
// BackendError.
std::vector<std::map<std::string, std::string>> ParseFluxCsv(std::string_view body);

ResultSet DecodeFlux(QueryType type, std::string_view body);

// InfluxDB 2.x over its HTTP API: line protocol writes, Flux reads.
class InfluxAdapter : public DbAdapter {
 public:
  explicit InfluxAdapter(InfluxParams params);
  ~InfluxAdapter() override;

  // Deletes and recreates the bucket.
  void InitSchema(std::uint64_t sensor_number) override;
  InsertReceipt InsertBatch(std::span<const SensorRecord> batch) override;
  QueryResult ExecuteQuery(const QuerySpec& spec) override;
  void Ping() override;
  std::string ServerVersion() override;
  std::uint64_t RowCount() override;

 private:
  std::string RunFlux(const std::string& flux);

  InfluxParams params_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace scits::influx
