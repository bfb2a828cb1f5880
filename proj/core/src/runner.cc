#include "scits/runner.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "scits/errors.h"
#include "scits/net/crypto.h"
#include "scits/time_util.h"

namespace scits {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Shortest text that parses back to the same double.
std::string Num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string Opt(const std::optional<double>& v) { return v ? Num(*v) : std::string(); }

double Ms(double ns) { return ns / 1e6; }

void AddStats(std::vector<SummaryRow>& rows, const std::string& prefix,
              std::span<const LatencySample> samples) {
  std::uint64_t ok = 0;
  for (const auto& s : samples) ok += s.failed ? 0 : 1;
  if (ok == 0) return;
  const QueryStats st = ComputeStats(samples);
  rows.push_back({prefix + "_n", std::nullopt, static_cast<double>(st.n), "count"});
  rows.push_back({prefix + "_min", std::nullopt, Ms(st.min.count()), "ms"});
  rows.push_back({prefix + "_mean", std::nullopt, Ms(st.mean_ns), "ms"});
  rows.push_back({prefix + "_p95", std::nullopt, Ms(st.p95.count()), "ms"});
  rows.push_back({prefix + "_max", std::nullopt, Ms(st.max.count()), "ms"});
  rows.push_back({prefix + "_stddev", std::nullopt, Ms(st.stddev_ns), "ms"});
}

void WriteFile(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <typename F>
std::string Render(F&& f) {
  std::ostringstream s;
  f(s);
  return s.str();
}


void CheckWritable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".scits-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw std::runtime_error("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

}  // namespace

std::vector<SummaryRow> SummarizeIngestion(const IngestionResult& result) {
  const IngestionSummary& s = result.summary;
  std::vector<SummaryRow> rows;
  rows.push_back({"total_records", std::nullopt, static_cast<double>(s.total_records), "records"});
  rows.push_back({"wall_time", std::nullopt, std::chrono::duration<double>(s.wall_time).count(), "s"});
  rows.push_back({"ingestion_rate", std::nullopt, s.overall_rate, "records/s"});
  rows.push_back({"throughput", std::nullopt, ThroughputMBps(s.overall_rate), "MB/s"});
  rows.push_back({"failed_batches", std::nullopt, static_cast<double>(s.failed_batches), "count"});
  rows.push_back({"warmup_records", std::nullopt, static_cast<double>(s.warmup_records), "records"});
  rows.push_back({"aborted", std::nullopt, s.aborted ? 1.0 : 0.0, "bool"});
  AddStats(rows, "insert_latency", result.samples);
  for (const auto& b : s.rolling_rates) {
    rows.push_back({"rolling_rate", b.minute_index, b.rate, "records/s"});
  }
  return rows;
}

std::vector<SummaryRow> SummarizeQueries(const QueryRunResult& result) {
  std::vector<SummaryRow> rows;
  std::uint64_t failed = 0;
  for (const auto& s : result.samples) failed += s.failed ? 1 : 0;
  rows.push_back({"failed_queries", std::nullopt, static_cast<double>(failed), "count"});
  rows.push_back({"aborted", std::nullopt, result.aborted ? 1.0 : 0.0, "bool"});
  AddStats(rows, "query_latency", result.samples);
  return rows;
}

void WriteSamplesCsv(std::ostream& out, const std::vector<LatencySample>& samples) {
  out << kSamplesHeader << '\n';
  for (const auto& s : samples) {
    out << s.run_ordinal << ',' << s.client_ordinal << ',' << s.seq << ','
        << (s.kind == SampleKind::kInsert ? "insert" : "query") << ',' << s.batch_size << ','
        << (s.query_type ? ToString(*s.query_type) : "") << ',' << s.start_offset.count() << ','
        << s.elapsed.count() << ',' << s.records << ',' << (s.failed ? 1 : 0) << ','
        << FormatUtc(s.wall_start) << '\n';
  }
}

void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.metric << ',';
    if (r.minute_index) out << *r.minute_index;
    out << ',' << Num(r.value) << ',' << r.unit << '\n';
  }
}

void WriteResourcesCsv(std::ostream& out, const std::vector<ResourceSnapshot>& snapshots) {
  out << kResourcesHeader << '\n';
  for (const auto& s : snapshots) {
    out << FormatUtc(s.wall_timestamp) << ',' << Opt(s.cpu_user_pct) << ','
        << Opt(s.cpu_system_pct) << ',' << Opt(s.cpu_iowait_pct) << ','
        << Opt(s.ctx_switches_per_s) << ',' << Opt(s.mem_used_pct) << ','
        << Opt(s.mem_cached_bytes) << ',' << Opt(s.swap_used_bytes) << ','
        << Opt(s.disk_read_bytes_per_s) << ',' << Opt(s.disk_write_bytes_per_s) << ','
        << Opt(s.disk_io_ops_per_s) << ',' << Opt(s.net_sent_bytes_per_s) << ','
        << Opt(s.net_recv_bytes_per_s) << '\n';
  }
}

std::string ManifestJson(const RunManifest& m) {
  json runs = json::array();
  for (const auto& r : m.runs) {
    json j = {{"ordinal", r.plan.ordinal},
              {"workload_kind", ToString(r.plan.workload_kind)},
              {"batch_size", r.plan.batch_size},
              {"client_count", r.plan.client_count},
              {"samples_csv", r.samples_csv.string()},
              {"summary_csv", r.summary_csv.string()},
              {"resources_csv", r.resources_csv ? json(r.resources_csv->string()) : json(nullptr)},
              {"monitor_gaps", r.monitor_gaps},
              {"aborted", r.aborted}};
    if (r.plan.definition.query_type) j["query_type"] = ToString(*r.plan.definition.query_type);
    if (r.aborted) j["abort_reason"] = r.abort_reason;
    runs.push_back(std::move(j));
  }
  json doc = {{"benchmark_version", m.benchmark_version},
              {"csv_schema_version", kCsvSchemaVersion},
              {"definition_file", m.definition_file.string()},
              {"definition_sha256", m.definition_sha256},
              {"seed", m.seed},
              {"start_time", FormatUtc(m.start_time)},
              {"target_database", ToString(m.target_database)},
              {"server_version", m.server_version},
              {"monitor", m.monitor ? "on" : "off"},
              {"runs", std::move(runs)},
              {"aborted", m.aborted}};
  if (m.monitor) doc["monitor_endpoint"] = m.monitor_endpoint;
  if (m.aborted) doc["abort_reason"] = m.abort_reason;
  return doc.dump(2) + "\n";
}

RunRecord PersistResults(const fs::path& dir, RunRecord record,
                         const std::vector<LatencySample>& samples,
                         const std::vector<SummaryRow>& summary,
                         const std::optional<std::vector<ResourceSnapshot>>& snapshots) {
  const std::string stem = "run-" + std::to_string(record.plan.ordinal);
  record.samples_csv = dir / (stem + "-samples.csv");
  record.summary_csv = dir / (stem + "-summary.csv");
  WriteFile(record.samples_csv, Render([&](std::ostream& o) { WriteSamplesCsv(o, samples); }));
  WriteFile(record.summary_csv, Render([&](std::ostream& o) { WriteSummaryCsv(o, summary); }));
  if (snapshots) {
    record.resources_csv = dir / (stem + "-resources.csv");
    WriteFile(*record.resources_csv,
              Render([&](std::ostream& o) { WriteResourcesCsv(o, *snapshots); }));
  } else {
    record.resources_csv.reset();
  }
  return record;
}

std::string FormatStatsTable(const QueryStats& st) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3);
  s << std::setw(12) << "Min." << std::setw(12) << "Mean" << std::setw(12) << "95%"
    << std::setw(12) << "Max." << std::setw(12) << "Std. Dev." << '\n';
  s << std::setw(12) << Ms(st.min.count()) << std::setw(12) << Ms(st.mean_ns) << std::setw(12)
    << Ms(st.p95.count()) << std::setw(12) << Ms(st.max.count()) << std::setw(12)
    << Ms(st.stddev_ns) << '\n';
  return s.str();
}

int RunMain(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  // Configuration.
  WorkloadDefinition def;
  std::string document;
  std::vector<RunPlan> plans;
  try {
    std::ifstream f(opt.definition, std::ios::binary);
    if (!f) throw ParseError("cannot read " + opt.definition.string());
    document.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    def = ParseWorkload(document);
    if (opt.seed) def.seed = *opt.seed;
    if (opt.monitor) def.monitor_endpoint = *opt.monitor;
    if (opt.monitor_period) def.monitor_period = *opt.monitor_period;
    if (opt.reset_hook) def.reset_hook = *opt.reset_hook;
    ValidateWorkload(def);
    if (!def.monitor_endpoint.empty()) ParseMonitorUrl(def.monitor_endpoint);
    plans = ExpandRuns(def);
    for (const auto& p : plans) CheckSpanCapacity(p);
  } catch (const std::exception& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (opt.dry_run) {
    for (const auto& p : plans) out << DescribeRunPlan(p) << '\n';
    return kExitOk;
  }

  try {
    CheckWritable(opt.out_dir);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitAborted;
  }

  RunManifest manifest;
  manifest.definition_file = opt.definition;
  manifest.definition_sha256 = net::HexEncode(net::Sha256(document));
  manifest.seed = def.seed;
  manifest.start_time = std::chrono::floor<Millis>(std::chrono::system_clock::now());
  manifest.target_database = def.target_database;
  manifest.monitor = !def.monitor_endpoint.empty();
  manifest.monitor_endpoint = def.monitor_endpoint;

  // Connectivity, before anything is written.
  AdapterFactory factory;
  try {
    factory = MakeAdapterFactory(def);
    auto probe = factory();
    probe->Ping();
    manifest.server_version = probe->ServerVersion();
    if (manifest.monitor) {
      ResourceMonitor m(def.monitor_endpoint, def.monitor_period);
      m.Start();
      m.Stop();
    }
  } catch (const std::exception& e) {
    err << "connectivity error: " << e.what() << '\n';
    return kExitConnectivity;
  }
  out << "target: " << ToString(def.target_database) << " (" << manifest.server_version << ")\n";

  auto finish = [&](int code) -> int {
    try {
      WriteFile(opt.out_dir / "manifest.json", ManifestJson(manifest));
    } catch (const std::exception& e) {
      err << "cannot write manifest: " << e.what() << '\n';
      return kExitAborted;
    }
    return code;
  };
  auto abort_with = [&](const std::string& reason) -> int {
    manifest.aborted = true;
    manifest.abort_reason = reason;
    err << "run aborted: " << reason << '\n';
    return finish(kExitAborted);
  };

  try {
    if (opt.populate && def.workload_kind == WorkloadKind::kQuery) {
      out << "populating " << FormatUtc(def.start_time) << " .. " << FormatUtc(def.end_time())
          << '\n';
      out << "  " << Populate(def, factory) << " records loaded\n";
    }
  } catch (const std::exception& e) {
    return abort_with(std::string("populate: ") + e.what());
  }

  for (const auto& plan : plans) {
    out << DescribeRunPlan(plan) << '\n';
    try {
      std::string hook_output = BetweenRunsReset(def, factory, opt.health_timeout);
      if (!hook_output.empty()) out << hook_output;
      if (plan.workload_kind == WorkloadKind::kIngestion &&
          (def.reset_between_runs || plan.ordinal == plans.front().ordinal)) {
        factory()->InitSchema(def.sensor_number);
      }
    } catch (const ResetHookError& e) {
      err << e.output();
      return abort_with(std::string("reset hook: ") + e.what());
    } catch (const std::exception& e) {
      return abort_with(std::string("reset: ") + e.what());
    }

    std::unique_ptr<ResourceMonitor> monitor;
    if (manifest.monitor) {
      monitor = std::make_unique<ResourceMonitor>(def.monitor_endpoint, def.monitor_period);
      try {
        monitor->Start();
      } catch (const std::exception& e) {
        return abort_with(std::string("monitor: ") + e.what());
      }
    }

    RunRecord record;
    record.plan = plan;
    std::vector<LatencySample> samples;
    std::vector<SummaryRow> summary;
    try {
      if (plan.workload_kind == WorkloadKind::kIngestion) {
        IngestionResult r = RunIngestion(plan, factory);
        summary = SummarizeIngestion(r);
        record.aborted = r.summary.aborted;
        record.abort_reason = r.summary.abort_reason;
        out << "  " << r.summary.total_records << " records in "
            << std::chrono::duration<double>(r.summary.wall_time).count() << " s: "
            << r.summary.overall_rate << " records/s, " << ThroughputMBps(r.summary.overall_rate)
            << " MB/s\n";
        samples = std::move(r.samples);
      } else {
        QueryRunResult r = RunQueryWorkload(plan, factory);
        summary = SummarizeQueries(r);
        record.aborted = r.aborted;
        record.abort_reason = r.abort_reason;
        samples = std::move(r.samples);
      }
      if (std::any_of(samples.begin(), samples.end(), [](auto& s) { return !s.failed; })) {
        out << FormatStatsTable(ComputeStats(samples));
      }
    } catch (const std::exception& e) {
      record.aborted = true;
      record.abort_reason = e.what();
    }

    std::optional<std::vector<ResourceSnapshot>> snapshots;
    if (monitor) {
      monitor->Stop();
      snapshots = monitor->snapshots();
      record.monitor_gaps = monitor->gaps();
    }
    try {
      manifest.runs.push_back(PersistResults(opt.out_dir, record, samples, summary, snapshots));
    } catch (const std::exception& e) {
      return abort_with(std::string("persist: ") + e.what());
    }
    if (record.aborted) {
      return abort_with("run " + std::to_string(plan.ordinal) + ": " + record.abort_reason);
    }
  }
  out << "results in " << opt.out_dir.string() << '\n';
  return finish(kExitOk);
}

}  // namespace scits
