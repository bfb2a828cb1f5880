#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "scits/types.h"
#include "scits/workload_config.h"

namespace scits {

// Contiguous range [begin, end) of sensor ids owned by one client.
struct SensorSlice {
  SensorId begin = 0;
  SensorId end = 0;

  std::uint64_t size() const { return end - begin; }
  friend bool operator==(const SensorSlice&, const SensorSlice&) = default;
};

// Client `ordinal` of `client_count` owns a slice of width
// ceil(sensor_number / client_count); the last slice is clipped. Throws
// ConfigurationError when a client would be left without sensors.
SensorSlice SliceForClient(std::uint64_t sensor_number, std::uint32_t client_count,
                           std::uint32_t ordinal);

// Per-client synthetic data source.
//
// Records cycle round-robin through the client's sensor slice; every time the
// cycle wraps, the timestamp advances by the definition's granularity. Values
// are uniform in [0, 2^31 - 1]. The random stream is std::mt19937_64 seeded
// with std::seed_seq{seed_lo, seed_hi, ordinal}, both of which the standard
// fully specifies, so the output is identical across platforms.
class DataGenerator {
 public:
  DataGenerator(const WorkloadDefinition& def, std::uint32_t client_count,
                std::uint32_t client_ordinal);

  // Throws SpanExhaustedError if any record of the batch would fall at or after
  // start_time + day_span; the state is left untouched in that case.
  std::vector<SensorRecord> NextBatch(std::uint64_t batch_size);

  // Same as NextBatch but reuses `out`'s storage.
  void FillBatch(std::uint64_t batch_size, std::vector<SensorRecord>& out);

  const SensorSlice& slice() const { return slice_; }
  Timestamp next_timestamp() const { return next_timestamp_; }
  std::uint64_t records_generated() const { return generated_; }

  friend bool operator==(const DataGenerator& a, const DataGenerator& b) {
    return a.slice_ == b.slice_ && a.granularity_ == b.granularity_ &&
           a.start_time_ == b.start_time_ && a.end_time_ == b.end_time_ &&
           a.next_timestamp_ == b.next_timestamp_ && a.next_sensor_ == b.next_sensor_ &&
           a.generated_ == b.generated_ && a.rng_ == b.rng_;
  }

 private:
  double NextValue();

  SensorSlice slice_;
  Millis granularity_;
  Timestamp start_time_;
  Timestamp end_time_;
  Timestamp next_timestamp_;
  SensorId next_sensor_;
  std::uint64_t generated_ = 0;
  std::mt19937_64 rng_;
};

// Little-endian 24-byte rows: int64 epoch ms, uint64 sensor id, IEEE-754 double.
void DumpRecords(std::span<const SensorRecord> records, std::ostream& out);

}  // namespace scits
