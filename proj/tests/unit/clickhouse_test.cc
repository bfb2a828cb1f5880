#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "scits/clickhouse/clickhouse_adapter.h"
#include "scits/errors.h"
#include "scits/net/tcp_stream.h"
#include "scits/time_util.h"

namespace scits::ch {
namespace {

class StringSource : public ByteSource {
 public:
  explicit StringSource(std::string s) : s_(std::move(s)) {}
  void Read(void* out, std::size_t n) override {
    if (pos_ + n > s_.size()) throw std::runtime_error("eof");
    std::memcpy(out, s_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  std::string s_;
  std::size_t pos_ = 0;
};

class StreamSource : public ByteSource {
 public:
  explicit StreamSource(net::TcpStream& s) : s_(s) {}
  void Read(void* out, std::size_t n) override { s_.ReadExact(out, n); }

 private:
  net::TcpStream& s_;
};

std::string Le64(std::uint64_t v) {
  std::string s;
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
  return s;
}

TEST(WireFormat, VarUIntEncoding) {
  WireWriter w;
  w.VarUInt(0);
  w.VarUInt(127);
  w.VarUInt(128);
  w.VarUInt(300);
  EXPECT_EQ(w.bytes(), std::string("\x00\x7f\x80\x01\xac\x02", 6));
  StringSource src(w.bytes());
  WireReader r(src);
  EXPECT_EQ(r.VarUInt(), 0u);
  EXPECT_EQ(r.VarUInt(), 127u);
  EXPECT_EQ(r.VarUInt(), 128u);
  EXPECT_EQ(r.VarUInt(), 300u);
}

TEST(WireFormat, BlockBytesMatchHandLayout) {
  Block b;
  b.rows = 1;
  b.columns.push_back(Column{"sensor_id", "UInt64", Le64(258)});
  WireWriter w;
  WriteBlock(w, b);
  std::string expected("\x01\x00\x02\xff\xff\xff\xff\x00", 8);  // block info
  expected += "\x01\x01";                                        // 1 column, 1 row
  expected += "\x09sensor_id\x06UInt64";
  expected += Le64(258);
  EXPECT_EQ(w.bytes(), expected);
}

TEST(WireFormat, NullableAndStringColumns) {
  WireWriter w;
  w.VarUInt(0);  // no block info fields
  w.VarUInt(2);
  w.VarUInt(3);
  w.String("v");
  w.String("Nullable(Float64)");
  w.Raw(std::string("\x00\x01\x00", 3));
  w.Float64(1.5);
  w.Float64(0.0);
  w.Float64(-2.0);
  w.String("s");
  w.String("String");
  w.String("a");
  w.String("");
  w.String("xyz");
  StringSource src(w.Take());
  WireReader r(src);
  Block b = ReadBlock(r);
  EXPECT_TRUE(src.done());
  ASSERT_EQ(b.rows, 3u);
  auto v = ColumnAsFloat64(b.columns[0], 3);
  EXPECT_EQ(v[0], 1.5);
  EXPECT_FALSE(v[1].has_value());
  EXPECT_EQ(v[2], -2.0);
}

TEST(WireFormat, UnsupportedTypeThrows) {
  WireWriter w;
  w.VarUInt(0);
  w.VarUInt(1);
  w.VarUInt(1);
  w.String("x");
  w.String("Array(UInt8)");
  StringSource src(w.Take());
  WireReader r(src);
  EXPECT_THROW(ReadBlock(r), std::runtime_error);
}

TEST(EncodeRecords, RoundTripsThroughBlockFormat) {
  std::vector<SensorRecord> recs = {{ParseUtc("2022-01-01T00:00:00.250Z"), 7, 12.5},
                                    {ParseUtc("1969-12-31T23:59:59.999Z"), 8, 0.0}};
  Block b = EncodeRecords(recs);
  EXPECT_EQ(b.columns[0].type, "DateTime64(3, 'UTC')");
  WireWriter w;
  WriteBlock(w, b);
  StringSource src(w.Take());
  WireReader r(src);
  Block back = ReadBlock(r);
  auto t = ColumnAsInt64(back.columns[0], 2);
  auto id = ColumnAsUInt64(back.columns[1], 2);
  auto v = ColumnAsFloat64(back.columns[2], 2);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(FromEpochMillis(t[i]), recs[i].timestamp);
    EXPECT_EQ(id[i], recs[i].sensor_id);
    EXPECT_EQ(v[i], recs[i].value);
  }
}

TEST(BuildQuery, HalfOpenRangeAndIntDivBuckets) {
  QuerySpec s;
  s.type = QueryType::kQ2;
  s.t_start = ParseUtc("2022-01-01T00:00:00Z");
  s.t_end = ParseUtc("2022-01-01T03:00:00Z");
  s.sensors = {2023};
  s.min_value = 100000;
  s.max_value = 2147383647;
  const std::string q = BuildQuery(s);
  EXPECT_NE(q.find("timestamp >= fromUnixTimestamp64Milli(toInt64(1640995200000), 'UTC')"),
            std::string::npos);
  EXPECT_NE(q.find("timestamp < fromUnixTimestamp64Milli(toInt64(1641006000000), 'UTC')"),
            std::string::npos);
  EXPECT_NE(q.find("intDiv(toUnixTimestamp64Milli(timestamp), 3600000) * 3600000"), std::string::npos);
  EXPECT_NE(q.find("HAVING min(value) < "), std::string::npos);
  s.type = QueryType::kQ3;
  s.agg = AggFunc::kStdDev;
  EXPECT_NE(BuildQuery(s).find("stddevSampOrNull(value)"), std::string::npos);
}

TEST(DecodeBlocks, EmptyQ3IsOneNullRowAndNaNIsNull) {
  EXPECT_EQ(DecodeBlocks(QueryType::kQ3, {}).rows, std::vector<ResultRow>{ResultRow{}});
  Block b;
  b.rows = 1;
  WireWriter w;
  w.Float64(std::nan(""));
  b.columns.push_back(Column{"x", "Float64", w.Take()});
  EXPECT_FALSE(DecodeBlocks(QueryType::kQ3, {b}).rows.at(0).value.has_value());
}

// Native-protocol server speaking revision 54460, which the client caps at
// its own revision.
class ChStub {
 public:
  ChStub() { thread_ = std::thread([this] { Serve(); }); }
  ~ChStub() {
    if (thread_.joinable()) thread_.join();
  }
  int port() const { return listener_.port(); }
  std::vector<std::string> queries() {
    std::lock_guard l(mu_);
    return queries_;
  }
  std::vector<SensorRecord> inserted() {
    std::lock_guard l(mu_);
    return inserted_;
  }
  std::string login() {
    std::lock_guard l(mu_);
    return login_;
  }

 private:
  static Block ReadData(WireReader& r) {
    EXPECT_EQ(r.VarUInt(), client_code::kData);
    r.String();
    return ReadBlock(r);
  }

  std::string ReadQuery(WireReader& r) {
    r.String();   // query id
    r.UInt8();    // query kind
    r.String();
    r.String();
    r.String();   // address
    r.UInt8();    // interface
    r.String();   // os user
    r.String();   // hostname
    r.String();   // client name
    r.VarUInt();
    r.VarUInt();
    EXPECT_EQ(r.VarUInt(), kClientRevision);
    r.String();   // quota key
    r.VarUInt();  // patch
    EXPECT_EQ(r.String(), "");  // settings terminator
    EXPECT_EQ(r.VarUInt(), kStageComplete);
    EXPECT_EQ(r.VarUInt(), 0u);
    std::string sql = r.String();
    EXPECT_EQ(ReadData(r).rows, 0u);
    return sql;
  }

  static void SendData(net::TcpStream& s, const Block& b) {
    WireWriter w;
    w.VarUInt(server_code::kData);
    w.String("");
    WriteBlock(w, b);
    s.WriteAll(w.bytes());
  }
  static void SendCode(net::TcpStream& s, std::uint64_t code) {
    WireWriter w;
    w.VarUInt(code);
    s.WriteAll(w.bytes());
  }

  void Serve() {
    net::TcpStream s = listener_.Accept();
    StreamSource src(s);
    WireReader r(src);
    try {
      EXPECT_EQ(r.VarUInt(), client_code::kHello);
      r.String();
      r.VarUInt();
      r.VarUInt();
      EXPECT_EQ(r.VarUInt(), kClientRevision);
      std::string db = r.String(), user = r.String(), pw = r.String();
      {
        std::lock_guard l(mu_);
        login_ = db + "/" + user + "/" + pw;
      }
      WireWriter hello;
      hello.VarUInt(server_code::kHello);
      hello.String("ClickHouse");
      hello.VarUInt(23);
      hello.VarUInt(8);
      hello.VarUInt(54460);
      hello.String("UTC");
      hello.String("stub");
      hello.VarUInt(7);
      s.WriteAll(hello.bytes());

      for (;;) {
        std::uint64_t code = r.VarUInt();
        if (code == client_code::kPing) {
          SendCode(s, server_code::kPong);
          continue;
        }
        ASSERT_EQ(code, client_code::kQuery);
        std::string sql = ReadQuery(r);
        {
          std::lock_guard l(mu_);
          queries_.push_back(sql);
        }
        if (sql.rfind("INSERT", 0) == 0) {
          // Header block first, then the client's data and a terminator.
          Block header = EncodeRecords({});
          SendData(s, header);
          Block data = ReadData(r);
          EXPECT_EQ(ReadData(r).rows, 0u);
          auto t = ColumnAsInt64(data.columns.at(0), data.rows);
          auto id = ColumnAsUInt64(data.columns.at(1), data.rows);
          auto v = ColumnAsFloat64(data.columns.at(2), data.rows);
          std::lock_guard l(mu_);
          for (std::uint64_t i = 0; i < data.rows; ++i) {
            inserted_.push_back({FromEpochMillis(t[i]), id[i], *v[i]});
          }
        } else if (sql.rfind("SELECT count()", 0) == 0) {
          WireWriter c;
          c.UInt64(inserted().size());
          SendData(s, Block{1, {Column{"count()", "UInt64", c.Take()}}});
        } else if (sql.find("GROUP BY interval, sensor_id") != std::string::npos) {
          // Progress and profile packets interleave with data on a real server.
          WireWriter p;
          p.VarUInt(server_code::kProgress);
          p.VarUInt(2);
          p.VarUInt(48);
          p.VarUInt(0);
          s.WriteAll(p.bytes());
          WireWriter t, id, v;
          t.Int64(1640998800000);
          t.Int64(1640995200000);
          id.UInt64(4);
          id.UInt64(4);
          v.Raw(std::string("\x00\x01", 2));
          v.Float64(3.5);
          v.Float64(0);
          SendData(s, Block{2, {Column{"interval", "Int64", t.Take()}, Column{"sensor_id", "UInt64", id.Take()},
                                Column{"avg", "Nullable(Float64)", v.Take()}}});
          WireWriter pi;
          pi.VarUInt(server_code::kProfileInfo);
          pi.VarUInt(2);
          pi.VarUInt(1);
          pi.VarUInt(48);
          pi.UInt8(0);
          pi.VarUInt(0);
          pi.UInt8(0);
          s.WriteAll(pi.bytes());
        } else if (sql.rfind("BROKEN", 0) == 0) {
          WireWriter e;
          e.VarUInt(server_code::kException);
          e.Int32(62);
          e.String("DB::Exception");
          e.String("Syntax error");
          e.String("");
          e.UInt8(1);
          e.Int32(1);
          e.String("DB::Exception");
          e.String("inner");
          e.String("");
          e.UInt8(0);
          s.WriteAll(e.bytes());
          continue;  // no EndOfStream after an exception
        }
        SendCode(s, server_code::kEndOfStream);
      }
    } catch (const std::exception&) {
      // client disconnected
    }
  }

  net::TcpListener listener_;
  std::thread thread_;
  std::mutex mu_;
  std::vector<std::string> queries_;
  std::vector<SensorRecord> inserted_;
  std::string login_;
};

ChParams Params(int port) {
  ChParams p;
  p.host = "127.0.0.1";
  p.port = port;
  p.user = "bench";
  p.password = "pw";
  p.timeout = Millis{5000};
  return p;
}

TEST(ClickHouseAdapter, SchemaInsertQueryAgainstStub) {
  ChStub stub;
  std::vector<SensorRecord> batch = {{ParseUtc("2022-01-01T00:00:00Z"), 1, 5.0},
                                     {ParseUtc("2022-01-01T00:00:00Z"), 2, 6.5},
                                     {ParseUtc("2022-01-01T00:00:01Z"), 1, 7.0}};
  {
    ClickHouseAdapter a(Params(stub.port()));
    EXPECT_EQ(a.ServerVersion(), "ClickHouse 23.8.7");
    a.InitSchema(100);
    EXPECT_EQ(a.InsertBatch(batch).records_written, 3u);
    EXPECT_EQ(a.RowCount(), 3u);
    a.Ping();
    QuerySpec q;
    q.type = QueryType::kQ4;
    q.t_start = ParseUtc("2022-01-01T00:00:00Z");
    q.t_end = ParseUtc("2022-01-01T02:00:00Z");
    q.sensors = {4};
    ResultSet rs = a.ExecuteQuery(q).result;
    ASSERT_EQ(rs.rows.size(), 2u);
    EXPECT_EQ(rs.rows[0].time, ParseUtc("2022-01-01T00:00:00Z"));
    EXPECT_FALSE(rs.rows[0].value.has_value());
    EXPECT_EQ(rs.rows[1].value, 3.5);
  }
  EXPECT_EQ(stub.inserted(), batch);
  EXPECT_EQ(stub.login(), "default/bench/pw");
  auto qs = stub.queries();
  ASSERT_GE(qs.size(), 3u);
  EXPECT_EQ(qs[0], "DROP TABLE IF EXISTS sensors_table");
  EXPECT_EQ(qs[2], "INSERT INTO sensors_table (timestamp, sensor_id, value) VALUES");
}

TEST(ChConnection, ServerExceptionIsNotRetryableAndNested) {
  ChStub stub;
  ChConnection c = ChConnection::Connect(Params(stub.port()));
  EXPECT_EQ(c.revision(), kClientRevision);
  try {
    c.Execute("BROKEN");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
    EXPECT_STREQ(e.what(), "Code: 62. DB::Exception: Syntax error; caused by: Code: 1. DB::Exception: inner");
  }
  c.Ping();  // still in sync
}

TEST(ChConnection, RefusedConnectionIsRetryable) {
  int port;
  {
    net::TcpListener l;
    port = l.port();
  }
  try {
    ChConnection::Connect(Params(port));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.retryable());
  }
}

}  // namespace
}  // namespace scits::ch
