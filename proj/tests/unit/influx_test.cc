#include <gtest/gtest.h>

#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "scits/errors.h"
#include "scits/net/tcp_stream.h"
#include "scits/influx/influx_adapter.h"
#include "scits/time_util.h"

namespace scits::influx {
namespace {

TEST(LineProtocol, ExactLinesAndRoundTrip) {
  std::vector<SensorRecord> recs = {{ParseUtc("2022-01-01T00:00:00.005Z"), 7, 123.5},
                                    {ParseUtc("2022-01-01T00:00:01Z"), 0, 0.1}};
  const std::string lp = EncodeLineProtocol(recs);
  EXPECT_EQ(lp,
            "sensors,sensor_id=7 value=123.5 1640995200005\n"
            "sensors,sensor_id=0 value=0.1 1640995201000\n");
  // Shortest round-trip formatting must survive a full 53-bit mantissa.
  SensorRecord r{ParseUtc("2022-01-01T00:00:00Z"), 1, 1234567.1234567891};
  std::istringstream in(EncodeLineProtocol(std::span(&r, 1)));
  std::string head, field;
  long long ms;
  in >> head >> field >> ms;
  EXPECT_EQ(std::stod(field.substr(6)), r.value);
}

TEST(FluxCsv, MultipleTablesQuotingAndCrLf) {
  const std::string body =
      ",result,table,bucket,sensor_id,_value\r\n"
      ",_result,0,1640995200000,1,2.5\r\n"
      "\r\n"
      ",result,table,bucket,note\r\n"
      ",_result,1,1640998800000,\"a,\"\"b\"\"\"\r\n";
  auto rows = ParseFluxCsv(body);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].at("_value"), "2.5");
  EXPECT_EQ(rows[1].at("note"), "a,\"b\"");
  EXPECT_EQ(rows[1].count("sensor_id"), 0u);
}

TEST(FluxCsv, ErrorColumnThrows) {
  EXPECT_THROW(ParseFluxCsv("error,reference\ntype error: bad,\n"), BackendError);
}

TEST(DecodeFlux, ShapesPerQueryType) {
  auto q4 = DecodeFlux(QueryType::kQ4,
                       ",result,table,bucket,sensor_id,_value\n"
                       ",_result,0,1640998800000,3,4\n"
                       ",_result,0,1640995200000,3,\n");
  ASSERT_EQ(q4.rows.size(), 2u);
  EXPECT_EQ(q4.rows[0].time, ParseUtc("2022-01-01T00:00:00Z"));
  EXPECT_FALSE(q4.rows[0].value.has_value());
  auto q1 = DecodeFlux(QueryType::kQ1,
                       ",result,table,_time,sensor_id,_value\n"
                       ",_result,0,2022-01-01T00:00:00.001Z,9,1\n");
  EXPECT_EQ(q1.rows.at(0).time, ParseUtc("2022-01-01T00:00:00.001Z"));
  EXPECT_EQ(q1.rows.at(0).sensor_id, 9u);
  EXPECT_EQ(DecodeFlux(QueryType::kQ3, "").rows, std::vector<ResultRow>{ResultRow{}});
  EXPECT_THROW(DecodeFlux(QueryType::kQ5, ",result,bucket\n,_result,1\n"), BackendError);
}

TEST(BuildFlux, RangeAndBucketArithmetic) {
  QuerySpec s;
  s.type = QueryType::kQ4;
  s.t_start = ParseUtc("2022-01-01T00:00:00Z");
  s.t_end = ParseUtc("2022-01-02T00:00:00Z");
  s.sensors = {1, 2};
  s.agg = AggFunc::kStdDev;
  const std::string f = BuildFlux(s, "b");
  EXPECT_NE(f.find("range(start: 2022-01-01T00:00:00Z, stop: 2022-01-02T00:00:00Z)"),
            std::string::npos);
  EXPECT_NE(f.find("(int(v: r._time) / 3600000000000) * 3600000000000 / 1000000"), std::string::npos);
  EXPECT_NE(f.find("r.sensor_id == \"1\" or r.sensor_id == \"2\""), std::string::npos);
  EXPECT_NE(f.find("stddev(mode: \"sample\")"), std::string::npos);
}

// InfluxDB 2.x HTTP API stand-in with an in-memory bucket.
class InfluxStub {
 public:
  InfluxStub() {
    using nlohmann::json;
    auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
      if (req.get_header_value("Authorization") != "Token tok") {
        res.status = 401;
        res.set_content(R"({"code":"unauthorized"})", "application/json");
        return false;
      }
      return true;
    };
    server_.Get("/ping", [](const auto&, auto& res) { res.status = 204; });
    server_.Get("/health", [](const auto&, auto& res) {
      res.set_content(R"({"status":"pass","version":"v2.7.1"})", "application/json");
    });
    server_.Get("/api/v2/orgs", [=, this](const auto& req, auto& res) {
      if (!authorized(req, res)) return;
      std::lock_guard l(mu_);
      log_.push_back("orgs " + req.get_param_value("org"));
      res.set_content(R"({"orgs":[{"id":"org1","name":"acme"}]})", "application/json");
    });
    server_.Get("/api/v2/buckets", [=, this](const auto& req, auto& res) {
      if (!authorized(req, res)) return;
      std::lock_guard l(mu_);
      log_.push_back("buckets " + req.get_param_value("orgID") + " " + req.get_param_value("name"));
      res.set_content(R"({"buckets":[{"id":"old1"}]})", "application/json");
    });
    server_.Delete(R"(/api/v2/buckets/(\w+))", [=, this](const auto& req, auto& res) {
      if (!authorized(req, res)) return;
      std::lock_guard l(mu_);
      log_.push_back("delete " + std::string(req.matches[1]));
      res.status = 204;
    });
    server_.Post("/api/v2/buckets", [=, this](const auto& req, auto& res) {
      if (!authorized(req, res)) return;
      auto body = json::parse(req.body);
      std::lock_guard l(mu_);
      log_.push_back("create " + body.at("orgID").template get<std::string>() + " " +
                     body.at("name").template get<std::string>());
      lines_.clear();
      res.status = 201;
    });
    server_.Post("/api/v2/write", [=, this](const auto& req, auto& res) {
      if (!authorized(req, res)) return;
      if (req.get_param_value("precision") != "ms" || req.get_param_value("bucket") != "scits") {
        res.status = 400;
        return;
      }
      std::lock_guard l(mu_);
      std::istringstream in(req.body);
      for (std::string line; std::getline(in, line);) lines_.push_back(line);
      res.status = 204;
    });
    server_.Post("/api/v2/query", [=, this](const auto& req, auto& res) {
      if (!authorized(req, res)) return;
      auto body = json::parse(req.body);
      EXPECT_EQ(body.at("dialect").at("header"), true);
      const std::string flux = body.at("query");
      std::lock_guard l(mu_);
      if (flux.find("count()") != std::string::npos) {
        res.set_content(",result,table,_value\r\n,_result,0," + std::to_string(lines_.size()) + "\r\n\r\n",
                        "text/csv");
      } else if (flux.find("join(") != std::string::npos) {
        res.set_content(",result,table,bucket,diff\r\n,_result,0,1640995200000,-1.5\r\n", "text/csv");
      } else {
        res.status = 400;
        res.set_content(R"({"code":"invalid","message":"compilation failed"})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~InfluxStub() {
    server_.stop();
    thread_.join();
  }
  int port() const { return port_; }
  std::vector<std::string> log() {
    std::lock_guard l(mu_);
    return log_;
  }
  std::vector<std::string> lines() {
    std::lock_guard l(mu_);
    return lines_;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::vector<std::string> log_;
  std::vector<std::string> lines_;
};

InfluxParams Params(int port, std::string token = "tok") {
  InfluxParams p;
  p.host = "127.0.0.1";
  p.port = port;
  p.organization = "acme";
  p.token = std::move(token);
  p.timeout = Millis{5000};
  return p;
}

TEST(InfluxAdapter, BucketLifecycleWritesAndQueries) {
  InfluxStub stub;
  InfluxAdapter a(Params(stub.port()));
  EXPECT_NO_THROW(a.Ping());
  EXPECT_EQ(a.ServerVersion(), "InfluxDB v2.7.1");
  a.InitSchema(10);
  EXPECT_EQ(stub.log(), (std::vector<std::string>{"orgs acme", "buckets org1 scits", "delete old1",
                                                   "create org1 scits"}));
  std::vector<SensorRecord> batch = {{ParseUtc("2022-01-01T00:00:00Z"), 1, 2.0},
                                     {ParseUtc("2022-01-01T00:00:00Z"), 2, 3.0}};
  EXPECT_EQ(a.InsertBatch(batch).records_written, 2u);
  EXPECT_EQ(stub.lines().size(), 2u);
  EXPECT_EQ(a.RowCount(), 2u);

  QuerySpec q;
  q.type = QueryType::kQ5;
  q.t_start = ParseUtc("2022-01-01T00:00:00Z");
  q.t_end = ParseUtc("2022-01-01T01:00:00Z");
  q.sensors = {1, 2};
  auto rows = a.ExecuteQuery(q).result.rows;
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].value, -1.5);

  q.type = QueryType::kQ1;
  try {
    a.ExecuteQuery(q);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
    EXPECT_NE(std::string(e.what()).find("HTTP 400"), std::string::npos);
  }
}

TEST(InfluxAdapter, BadTokenAndDeadServer) {
  InfluxStub stub;
  InfluxAdapter a(Params(stub.port(), "wrong"));
  try {
    a.InitSchema(1);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
  }
  int dead;
  {
    net::TcpListener l;
    dead = l.port();
  }
  InfluxParams p = Params(dead);
  p.timeout = Millis{500};
  InfluxAdapter b(p);
  try {
    b.Ping();
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.retryable());
  }
}

}  // namespace
}  // namespace scits::influx
