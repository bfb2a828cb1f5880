// Acceptance checks. One line per criterion: PASS, FAIL or SKIP, then detail.
// Real backends join the oracle and conservation checks when
// SCITS_ACCEPT_<DB>=host:port is set (DB one of POSTGRESQL, TIMESCALEDB,
// CLICKHOUSE, INFLUXDB); credentials come from the usual SCITS_* variables.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "scits/data_generator.h"
#include "scits/memory_adapter.h"
#include "scits/metrics.h"
#include "scits/reference_oracle.h"
#include "scits/runner.h"
#include "scits/sysmon.h"
#include "scits/time_util.h"
#include "scits/workload_engine.h"

namespace fs = std::filesystem;
using namespace scits;
using std::chrono::nanoseconds;

namespace {

int failures = 0;

void Report(const std::string& status, const std::string& name, const std::string& detail) {
  if (status == "FAIL") ++failures;
  std::cout << status << "  " << name << ": " << detail << std::endl;
}

// Runs `check`, which returns a failure description or "" plus detail text.
void Criterion(const std::string& name, const std::function<std::pair<std::string, std::string>()>& check) {
  try {
    auto [error, detail] = check();
    if (error.empty()) {
      Report("PASS", name, detail);
    } else {
      Report("FAIL", name, error);
    }
  } catch (const std::exception& e) {
    Report("FAIL", name, std::string("exception: ") + e.what());
  }
}

double Seconds(std::chrono::steady_clock::duration d) { return std::chrono::duration<double>(d).count(); }

struct Backend {
  std::string name;
  TargetDatabase db;
  const char* env;
};

const Backend kRealBackends[] = {
    {"PostgreSQL", TargetDatabase::kPostgreSQL, "SCITS_ACCEPT_POSTGRESQL"},
    {"TimescaleDB", TargetDatabase::kTimescaleDB, "SCITS_ACCEPT_TIMESCALEDB"},
    {"ClickHouse", TargetDatabase::kClickHouse, "SCITS_ACCEPT_CLICKHOUSE"},
    {"InfluxDB", TargetDatabase::kInfluxDB, "SCITS_ACCEPT_INFLUXDB"},
};

void ApplyEndpoint(WorkloadDefinition& def, const std::string& host_port) {
  auto colon = host_port.rfind(':');
  def.connection.host = host_port.substr(0, colon);
  if (colon != std::string::npos) def.connection.port = std::stoi(host_port.substr(colon + 1));
}

// 1000 sensors x 1000 timestamps (86.4 s apart over one day) = 10^6 records.
WorkloadDefinition OracleDataset() {
  WorkloadDefinition d;
  d.start_time = ParseUtc("2022-01-01T00:00:00Z");
  d.day_span = 1;
  d.sensor_number = 1000;
  d.timestamp_granularity = Millis{86400};
  d.seed = 20220101;
  return d;
}

struct QueryVariant {
  QueryType type;
  std::uint32_t minutes;
  std::vector<SensorId> sensors;
  AggFunc agg = AggFunc::kAverage;
  double min_value = 100000;
  double max_value = 2147383647;
};

std::vector<QueryVariant> Variants() {
  std::vector<SensorId> ten = {0, 17, 101, 250, 333, 499, 500, 742, 998, 999};
  return {
      {QueryType::kQ1, 10, ten},
      {QueryType::kQ1, 240, {5, 6}},
      {QueryType::kQ2, 180, {2023 % 1000}},
      {QueryType::kQ2, 180, {7}, AggFunc::kAverage, 2e8, 1.9e9},
      {QueryType::kQ3, 60, ten, AggFunc::kStdDev},
      {QueryType::kQ3, 600, {1, 2, 3}, AggFunc::kMax},
      {QueryType::kQ3, 60, {5000}, AggFunc::kStdDev},  // no such sensor
      {QueryType::kQ4, 1440, ten, AggFunc::kAverage},
      {QueryType::kQ4, 1440, {3, 4}, AggFunc::kMin},
      {QueryType::kQ4, 300, {9}, AggFunc::kStdDev},
      {QueryType::kQ5, 1440, {23, 874}, AggFunc::kAverage},
      {QueryType::kQ5, 1440, {23, 5000}, AggFunc::kMax},  // empty join
  };
}

std::pair<std::string, std::string> OracleEquivalence(const WorkloadDefinition& base) {
  const auto t0 = std::chrono::steady_clock::now();
  WorkloadDefinition def = base;
  AdapterFactory factory = MakeAdapterFactory(def);
  const std::uint64_t loaded = Populate(def, factory, 20000);
  if (loaded != 1'000'000) return {"populated " + std::to_string(loaded) + " records", ""};

  DataGenerator gen(def, 1, 0);
  const std::vector<SensorRecord> data = gen.NextBatch(loaded);

  auto adapter = factory();
  std::mt19937_64 rng(def.seed);
  std::size_t queries = 0, rows = 0, types_with_rows = 0;
  std::set<QueryType> nonempty;
  for (const auto& v : Variants()) {
    WorkloadDefinition qd = def;
    qd.workload_kind = WorkloadKind::kQuery;
    qd.query_type = v.type;
    qd.duration_minutes = v.minutes;
    qd.sensors_filter = v.sensors;
    qd.agg_func = v.agg;
    qd.aggregation_interval = Millis{3600000};
    if (v.type == QueryType::kQ2) {
      qd.min_value = v.min_value;
      qd.max_value = v.max_value;
    }
    for (int i = 0; i < 5; ++i) {
      const QuerySpec spec = MakeQuerySpec(qd, DrawWindowStart(rng, qd));
      const ResultSet expected = ReferenceEvaluate(data, spec);
      const ResultSet actual = adapter->ExecuteQuery(spec).result;
      if (auto diff = CompareResults(expected, actual)) {
        return {std::string(ToString(v.type)) + " window " + FormatUtc(spec.t_start) + ": " + *diff, ""};
      }
      ++queries;
      rows += expected.rows.size();
      if (!expected.rows.empty() && expected.rows[0].value) nonempty.insert(v.type);
    }
  }
  types_with_rows = nonempty.size();
  const double elapsed = Seconds(std::chrono::steady_clock::now() - t0);
  if (types_with_rows != 5) return {"only " + std::to_string(types_with_rows) + " query types returned data", ""};
  if (elapsed > 300) return {"took " + std::to_string(elapsed) + " s, limit 300 s", ""};
  std::ostringstream d;
  d << queries << " queries, " << rows << " rows equal over 10^6 records in " << std::fixed
    << std::setprecision(1) << elapsed << " s";
  return {"", d.str()};
}

std::pair<std::string, std::string> Conservation(WorkloadDefinition def) {
  def.sensor_number = 1000;
  def.timestamp_granularity = Millis{1000};
  def.stop = BatchesPerClient{250};
  RunPlan plan;
  plan.workload_kind = WorkloadKind::kIngestion;
  plan.batch_size = 1000;
  plan.client_count = 4;
  plan.definition = def;
  CheckSpanCapacity(plan);
  AdapterFactory factory = MakeAdapterFactory(def);
  factory()->InitSchema(def.sensor_number);
  IngestionResult r = RunIngestion(plan, factory);
  const std::uint64_t count = factory()->RowCount();
  if (r.summary.aborted) return {"run aborted: " + r.summary.abort_reason, ""};
  if (r.summary.total_records != 1'000'000 || count != 1'000'000) {
    return {"total_records " + std::to_string(r.summary.total_records) + ", COUNT(*) " + std::to_string(count), ""};
  }
  return {"", "total_records = COUNT(*) = 1000000 (4 clients x 250 batches x 1000)"};
}

std::pair<std::string, std::string> StatisticsOracle() {
  std::mt19937_64 rng(12345);
  double worst_mean = 0, worst_sd = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng() % 1000;
    std::vector<nanoseconds> v(n);
    // Mix of scales: sub-millisecond to tens of seconds.
    const std::uint64_t scale = std::uint64_t{1000} << (rng() % 25);
    for (auto& x : v) x = nanoseconds(static_cast<std::int64_t>(rng() % scale));

    std::vector<std::int64_t> sorted;
    for (auto x : v) sorted.push_back(x.count());
    std::sort(sorted.begin(), sorted.end());
    // Exact integer moments: sum of squared deviations = (n S2 - S1^2) / n.
    __int128 s1 = 0, s2 = 0;
    for (auto x : sorted) {
      s1 += x;
      s2 += static_cast<__int128>(x) * x;
    }
    const __int128 num = static_cast<__int128>(n) * s2 - s1 * s1;
    const long double mean = static_cast<long double>(s1) / n;
    const long double sd = n > 1 ? std::sqrt(static_cast<long double>(num) / n / (n - 1)) : 0.0L;
    // Smallest rank r with r / n >= 0.95, found by search.
    std::size_t rank = 1;
    while (100 * rank < 95 * n) ++rank;

    const QueryStats st = ComputeStats(v);
    if (st.n != n || st.min.count() != sorted.front() || st.max.count() != sorted.back() ||
        st.p95.count() != sorted[rank - 1]) {
      return {"rank statistic mismatch at trial " + std::to_string(trial), ""};
    }
    auto rel = [](long double got, long double want) {
      if (want == 0) return static_cast<double>(std::fabs(got));
      return static_cast<double>(std::fabs(got - want) / std::fabs(want));
    };
    worst_mean = std::max(worst_mean, rel(st.mean_ns, mean));
    worst_sd = std::max(worst_sd, rel(st.stddev_ns, sd));
  }
  std::ostringstream d;
  d << "10^4 vectors; min/max/p95 exact; worst relative error mean " << worst_mean << ", stddev " << worst_sd;
  if (worst_mean > 1e-12 || worst_sd > 1e-12) return {d.str(), ""};
  return {"", d.str()};
}

std::pair<std::string, std::string> TableTwoAnchor() {
  const double ch = ThroughputMBps(1278928, 24);
  const double influx = ThroughputMBps(741688.5, 24);
  std::ostringstream d;
  d << std::setprecision(6) << "1278928 rec/s -> " << ch << " MB/s (30.69), 741688.5 rec/s -> " << influx
    << " MB/s (17.8)";
  if (std::fabs(ch - 30.69) > 30.69 * 0.005 || std::fabs(influx - 17.8) > 17.8 * 0.005) return {d.str(), ""};
  return {"", d.str()};
}

std::pair<std::string, std::string> RollingConservation() {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LatencySample> samples;
    std::uint64_t total = 0;
    const int n = 1 + static_cast<int>(rng() % 2000);
    const std::int64_t horizon = 1'000'000'000LL * (1 + static_cast<std::int64_t>(rng() % 1800));
    for (int i = 0; i < n; ++i) {
      LatencySample s;
      s.start_offset = nanoseconds(static_cast<std::int64_t>(rng() % horizon));
      s.elapsed = nanoseconds(static_cast<std::int64_t>(rng() % 2'000'000'000));
      s.records = 1 + rng() % 100000;
      s.failed = rng() % 20 == 0;
      if (!s.failed) total += s.records;
      samples.push_back(s);
    }
    const nanoseconds run_end(horizon + static_cast<std::int64_t>(rng() % 3'000'000'000LL));
    long double recovered = 0;
    std::uint64_t counted = 0;
    for (const auto& b : RollingRate(samples, run_end)) {
      recovered += static_cast<long double>(b.rate) * b.length.count() / 1e9L;
      counted += b.records;
    }
    if (counted != total || std::llround(recovered) != static_cast<long long>(total)) {
      return {"trial " + std::to_string(trial) + ": total " + std::to_string(total) + ", bucket records " +
                  std::to_string(counted) + ", rate x length " + std::to_string(static_cast<double>(recovered)),
              ""};
    }
  }
  return {"", "100 randomized sets; sum of bucket records and of rate x length equal the total"};
}

std::string DumpStore(const MemoryStore& store) {
  std::ostringstream out;
  DumpRecords(store.Snapshot(), out);
  return out.str();
}

std::pair<std::string, std::string> Determinism() {
  const fs::path file = fs::path(SCITS_WORKLOAD_DIR) / "smoke-ingestion-reference.xml";
  std::vector<std::string> dumps;
  std::vector<std::vector<RunPlan>> plan_lists;
  for (int attempt = 0; attempt < 2; ++attempt) {
    WorkloadDefinition def = ParseWorkloadFile(file);
    auto plans = ExpandRuns(def);
    plan_lists.push_back(plans);
    std::string all;
    for (const auto& plan : plans) {
      auto store = std::make_shared<MemoryStore>();
      AdapterFactory factory = [store] { return std::make_unique<MemoryAdapter>(store); };
      RunIngestion(plan, factory);
      all += DumpStore(*store);
    }
    dumps.push_back(all);
  }
  if (plan_lists[0] != plan_lists[1]) return {"expanded run plans differ", ""};
  if (dumps[0] != dumps[1]) return {"record dumps differ", ""};
  // A different seed must change the data, or the comparison proves nothing.
  WorkloadDefinition other = ParseWorkloadFile(file);
  other.seed += 1;
  auto store = std::make_shared<MemoryStore>();
  RunIngestion(ExpandRuns(other).front(), [store] { return std::make_unique<MemoryAdapter>(store); });
  if (dumps[0].compare(0, DumpStore(*store).size(), DumpStore(*store)) == 0) {
    return {"changing the seed did not change the data", ""};
  }
  return {"", std::to_string(plan_lists[0].size()) + " plans equal; " + std::to_string(dumps[0].size()) +
                  " dump bytes identical"};
}

std::pair<std::string, std::string> WorkloadCorpus() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(SCITS_WORKLOAD_DIR)) {
    if (e.path().extension() == ".xml") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t plans = 0;
  for (const auto& f : files) {
    RunOptions opt;
    opt.definition = f;
    opt.dry_run = true;
    std::ostringstream out, err;
    if (int code = RunMain(opt, out, err); code != kExitOk) {
      return {f.filename().string() + ": dry run exited " + std::to_string(code) + ": " + err.str(), ""};
    }
    plans += ExpandRuns(ParseWorkloadFile(f)).size();
  }

  // The experiments themselves, for every database.
  const std::vector<std::uint64_t> batching = {1000, 2000, 5000, 10000, 20000, 50000, 100000};
  const std::vector<std::uint32_t> concurrency = {1, 2, 4, 8, 12, 16, 24, 32, 48};
  for (const char* db : {"clickhouse", "influxdb", "timescaledb", "postgresql"}) {
    auto load = [&](const std::string& kind) {
      return ParseWorkloadFile(fs::path(SCITS_WORKLOAD_DIR) / (kind + "-" + db + ".xml"));
    };
    const std::string tag = std::string(" (") + db + ")";
    auto b = load("batching");
    if (b.batch_size_options != batching) return {"batching sizes" + tag, ""};
    auto c = load("concurrency");
    if (c.client_number_options != concurrency || c.batch_size_options != std::vector<std::uint64_t>{20000}) {
      return {"concurrency sweep" + tag, ""};
    }
    auto s = load("scaling");
    if (s.stop != StopCondition{TotalRecords{10'000'000}}) return {"scaling stop condition" + tag, ""};
    auto q1 = load("q1");
    if (q1.sensors_filter.size() != 10 || q1.duration_minutes != 10) return {"Q1 parameters" + tag, ""};
    auto q2 = load("q2");
    if (q2.sensors_filter.size() != 1 || q2.duration_minutes != 180) return {"Q2 parameters" + tag, ""};
    auto q3 = load("q3");
    if (q3.sensors_filter.size() != 10 || q3.duration_minutes != 60 || q3.agg_func != AggFunc::kStdDev) {
      return {"Q3 parameters" + tag, ""};
    }
    auto q4 = load("q4");
    if (q4.duration_minutes != 1440 || q4.aggregation_interval != Millis{3600000}) return {"Q4 parameters" + tag, ""};
    auto q5 = load("q5");
    if (q5.sensors_filter.size() != 2 || q5.duration_minutes != 1440 ||
        q5.aggregation_interval != Millis{3600000}) {
      return {"Q5 parameters" + tag, ""};
    }
  }
  return {"", std::to_string(files.size()) + " definitions parse and dry-run (" + std::to_string(plans) +
                  " plans); experiment parameters present for 4 databases"};
}

std::pair<std::string, std::string> MonitorCadence() {
  const fs::path fixture = fs::path(SCITS_FIXTURE_DIR) / "glances" / "glances3-iowait-1479.json";
  std::ifstream f(fixture);
  std::stringstream body;
  body << f.rdbuf();
  const std::string text = body.str();
  if (ParseSnapshot(text, Timestamp{}).cpu_iowait_pct != 14.79) return {"fixture iowait is not 14.79", ""};

  httplib::Server server;
  server.Get("/api/3/all", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(text, "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ResourceMonitor monitor("http://127.0.0.1:" + std::to_string(port) + "/api/3/all", std::chrono::seconds(1));
  monitor.Start();
  std::this_thread::sleep_for(std::chrono::seconds(60));
  monitor.Stop();
  server.stop();
  t.join();

  const auto snaps = monitor.snapshots();
  for (const auto& s : snaps) {
    if (s.cpu_iowait_pct != 14.79) return {"a snapshot parsed iowait other than 14.79", ""};
  }
  const std::string detail = std::to_string(snaps.size()) + " snapshots in 60 s at 1 s, " +
                             std::to_string(monitor.gaps()) + " gaps, iowait 14.79";
  if (snaps.size() < 59 || snaps.size() > 61) return {detail, ""};
  return {"", detail};
}

}  // namespace

int main() {
  std::cout << std::setprecision(6);
  Criterion("oracle equivalence [Reference]", [] {
    WorkloadDefinition d = OracleDataset();
    d.target_database = TargetDatabase::kReference;
    return OracleEquivalence(d);
  });
  for (const auto& b : kRealBackends) {
    const char* endpoint = std::getenv(b.env);
    if (!endpoint || !*endpoint) {
      Report("SKIP", "oracle equivalence [" + b.name + "]", std::string(b.env) + " not set");
      continue;
    }
    Criterion("oracle equivalence [" + b.name + "]", [&] {
      WorkloadDefinition d = OracleDataset();
      d.target_database = b.db;
      ApplyEndpoint(d, endpoint);
      return OracleEquivalence(d);
    });
  }

  Criterion("conservation [Reference]", [] {
    WorkloadDefinition d = OracleDataset();
    return Conservation(d);
  });
  for (const auto& b : kRealBackends) {
    const char* endpoint = std::getenv(b.env);
    if (!endpoint || !*endpoint) {
      Report("SKIP", "conservation [" + b.name + "]", std::string(b.env) + " not set");
      continue;
    }
    Criterion("conservation [" + b.name + "]", [&] {
      WorkloadDefinition d = OracleDataset();
      d.target_database = b.db;
      ApplyEndpoint(d, endpoint);
      return Conservation(d);
    });
  }

  Criterion("statistics oracle", StatisticsOracle);
  Criterion("throughput anchor", TableTwoAnchor);
  Criterion("rolling-rate conservation", RollingConservation);
  Criterion("determinism", Determinism);
  Criterion("workload corpus", WorkloadCorpus);
  Criterion("monitor cadence", MonitorCadence);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
