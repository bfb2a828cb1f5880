#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scits/types.h"

namespace scits {

enum class SampleKind { kInsert, kQuery };

// One timed operation. Offsets and durations are monotonic-clock
// nanoseconds; `wall_start` is the system clock at submission and only serves
// to line samples up with resource snapshots.
struct LatencySample {
  std::uint32_t run_ordinal = 0;
  std::uint32_t client_ordinal = 0;
  std::uint64_t seq = 0;  // per-client operation counter, from 0
  SampleKind kind = SampleKind::kInsert;
  std::uint64_t batch_size = 0;          // inserts
  std::optional<QueryType> query_type;   // queries
  std::chrono::nanoseconds start_offset{0};
  std::chrono::nanoseconds elapsed{0};
  std::uint64_t records = 0;  // records written; 0 for queries and failures
  bool failed = false;
  Timestamp wall_start{};

  std::chrono::nanoseconds completion_offset() const { return start_offset + elapsed; }
  friend bool operator==(const LatencySample&, const LatencySample&) = default;
};

// Min, p95 and max are sample values and stay integral; mean and stddev are
// in fractional nanoseconds.
struct QueryStats {
  std::uint64_t n = 0;
  std::chrono::nanoseconds min{0};
  double mean_ns = 0.0;
  std::chrono::nanoseconds p95{0};
  std::chrono::nanoseconds max{0};
  double stddev_ns = 0.0;  // sample (n - 1) estimator; 0 when n == 1
};

// Throws std::invalid_argument on empty input. p95 is the nearest-rank
// value: the ceil(0.95 n)-th smallest sample.
QueryStats ComputeStats(std::span<const std::chrono::nanoseconds> samples);

// Stats over the successful samples' elapsed times.
QueryStats ComputeStats(std::span<const LatencySample> samples);

// Records per second. Throws std::invalid_argument unless wall_time > 0.
double IngestionRate(std::uint64_t total_records, std::chrono::nanoseconds wall_time);

// rate x record_size, in bytes per second and in MB/s (1 MB = 10^6 bytes).
double ThroughputBytes(double records_per_second, std::size_t record_size = kRecordSizeBytes);
double ThroughputMBps(double records_per_second, std::size_t record_size = kRecordSizeBytes);

struct RateBucket {
  std::uint64_t minute_index = 0;
  std::uint64_t records = 0;
  std::chrono::nanoseconds length{0};  // 60 s except possibly the last bucket
  double rate = 0.0;                   // records / length
};

using RollingRateSeries = std::vector<RateBucket>;

inline constexpr std::chrono::nanoseconds kRollingWindow = std::chrono::minutes(1);

// Attributes each successful sample's records to the minute containing its
// completion offset. Bucket k covers (k min, (k+1) min], bucket 0 also takes
// offset 0. Buckets are contiguous from 0; the last one ends at
// max(run_end, latest completion) and is divided by that actual length.
RollingRateSeries RollingRate(std::span<const LatencySample> samples,
                              std::chrono::nanoseconds run_end = std::chrono::nanoseconds{0});

}  // namespace scits
