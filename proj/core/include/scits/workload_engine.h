#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "scits/db_adapter.h"
#include "scits/metrics.h"
#include "scits/workload_config.h"

namespace scits {

struct IngestionSummary {
  std::uint64_t total_records = 0;  // successful measured inserts
  std::chrono::nanoseconds wall_time{0};
  double overall_rate = 0.0;  // total_records / wall_time
  RollingRateSeries rolling_rates;
  std::uint64_t failed_batches = 0;
  std::uint64_t warmup_records = 0;  // inserted before the clock started
  bool aborted = false;
  std::string abort_reason;
};

struct IngestionResult {
  IngestionSummary summary;
  std::vector<LatencySample> samples;  // sorted by (client, seq)
};

struct QueryRunResult {
  std::vector<LatencySample> samples;
  bool aborted = false;
  std::string abort_reason;
};

// Records each client inserts under TotalRecords: an even split, the first
// (total % clients) clients taking one extra record. Deterministic, so the
// generated data depends only on the definition and the plan.
std::vector<std::uint64_t> SplitRecordQuota(std::uint64_t total, std::uint32_t clients);

// Throws ConfigurationError when a count-bounded plan would need timestamps
// past start_time + day_span. Duration-bounded plans are not checked; their
// clients simply stop when the span runs out.
void CheckSpanCapacity(const RunPlan& plan);

// Runs plan.client_count workers, each with its own adapter and generator,
// until the definition's stop condition holds. A failed batch is retried with
// the same records; max_consecutive_failures failures in a row on any client
// abort the run, keeping the samples gathered so far.
IngestionResult RunIngestion(const RunPlan& plan, const AdapterFactory& factory);

// Uniform integer in [lo, hi] by rejection sampling, so the draw is the same
// on every standard library.
std::int64_t UniformInt(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);

// Generator for query windows, seeded from the definition seed.
std::mt19937_64 QueryWindowRng(const WorkloadDefinition& def);

// Window start drawn uniformly from [start_time, end_time - duration], ms grid.
Timestamp DrawWindowStart(std::mt19937_64& rng, const WorkloadDefinition& def);

// test_retries repetitions, each over a freshly drawn window.
QueryRunResult RunQueryWorkload(const RunPlan& plan, const AdapterFactory& factory);

// Loads the whole [start_time, end_time) span with one client, for query
// workloads that need a populated table. Returns the number of records.
std::uint64_t Populate(const WorkloadDefinition& def, const AdapterFactory& factory,
                       std::uint64_t batch_size = 10000);

class ResetHookError : public std::runtime_error {
 public:
  ResetHookError(const std::string& what, std::string output)
      : std::runtime_error(what), output_(std::move(output)) {}
  const std::string& output() const { return output_; }

 private:
  std::string output_;
};

// Runs the definition's reset hook through the shell (stdout and stderr
// captured), then pings the backend until it answers or `health_timeout`
// passes. No-op without a hook. Returns the hook's output.
// Throws ResetHookError on a nonzero exit, BackendError if never healthy.
std::string BetweenRunsReset(const WorkloadDefinition& def, const AdapterFactory& factory,
                             std::chrono::milliseconds health_timeout = std::chrono::seconds(120));

}  // namespace scits
