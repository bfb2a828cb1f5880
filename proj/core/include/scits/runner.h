#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scits/metrics.h"
#include "scits/sysmon.h"
#include "scits/workload_engine.h"

namespace scits {

inline constexpr const char* kScitsVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitConnectivity = 2,
  kExitAborted = 3,
};

// Column headers, fixed per schema version.
inline constexpr const char* kSamplesHeader =
    "run,client,seq,kind,batch_size,query_type,start_offset_ns,elapsed_ns,records,failed,"
    "wall_start";
inline constexpr const char* kSummaryHeader = "metric,minute_index,value,unit";
inline constexpr const char* kResourcesHeader =
    "wall_timestamp,cpu_user_pct,cpu_system_pct,cpu_iowait_pct,ctx_switches_per_s,mem_used_pct,"
    "mem_cached_bytes,swap_used_bytes,disk_read_bytes_per_s,disk_write_bytes_per_s,"
    "disk_io_ops_per_s,net_sent_bytes_per_s,net_recv_bytes_per_s";

// One row of the long-format summary CSV. minute_index is set only for the
// rolling_rate rows.
struct SummaryRow {
  std::string metric;
  std::optional<std::uint64_t> minute_index;
  double value = 0.0;
  std::string unit;
};

std::vector<SummaryRow> SummarizeIngestion(const IngestionResult& result);
std::vector<SummaryRow> SummarizeQueries(const QueryRunResult& result);

void WriteSamplesCsv(std::ostream& out, const std::vector<LatencySample>& samples);
void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows);
void WriteResourcesCsv(std::ostream& out, const std::vector<ResourceSnapshot>& snapshots);

struct RunRecord {
  RunPlan plan;
  std::filesystem::path samples_csv;
  std::filesystem::path summary_csv;
  std::optional<std::filesystem::path> resources_csv;
  std::uint64_t monitor_gaps = 0;
  bool aborted = false;
  std::string abort_reason;
};

struct RunManifest {
  std::string benchmark_version = kScitsVersion;
  std::filesystem::path definition_file;
  std::string definition_sha256;
  std::uint64_t seed = 0;
  Timestamp start_time{};
  TargetDatabase target_database = TargetDatabase::kReference;
  std::string server_version;
  bool monitor = false;
  std::string monitor_endpoint;
  std::vector<RunRecord> runs;
  bool aborted = false;
  std::string abort_reason;
};

std::string ManifestJson(const RunManifest& manifest);

// Writes the three CSVs of one run (resources only when `snapshots` is set)
// into `dir` and returns the record with their paths filled in.
RunRecord PersistResults(const std::filesystem::path& dir, RunRecord record,
                         const std::vector<LatencySample>& samples,
                         const std::vector<SummaryRow>& summary,
                         const std::optional<std::vector<ResourceSnapshot>>& snapshots);

// The row format of the query result tables: Min, Mean, 95%, Max, Std. Dev. in ms.
std::string FormatStatsTable(const QueryStats& stats);

struct RunOptions {
  std::filesystem::path definition;
  std::filesystem::path out_dir = "results";
  std::optional<std::string> monitor;
  std::optional<std::chrono::milliseconds> monitor_period;
  std::optional<std::string> reset_hook;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  bool populate = false;  // load the whole span before query runs
  std::chrono::milliseconds health_timeout{std::chrono::seconds(120)};
};

// Everything `scits run` does. Returns an ExitCode.
int RunMain(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace scits
