#include "scits/data_generator.h"

#include <bit>
#include <cstring>
#include <ostream>
#include <string>

#include "scits/errors.h"

namespace scits {
namespace {

std::mt19937_64 SeedStream(std::uint64_t seed, std::uint32_t ordinal) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    ordinal};
  return std::mt19937_64(seq);
}

template <typename T>
void PutLittleEndian(T value, unsigned char* out) {
  std::uint64_t bits;
  static_assert(sizeof(T) == sizeof(bits));
  std::memcpy(&bits, &value, sizeof(bits));
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

}  // namespace

SensorSlice SliceForClient(std::uint64_t sensor_number, std::uint32_t client_count,
                           std::uint32_t ordinal) {
  if (client_count == 0) throw ConfigurationError("client count must be >= 1");
  if (ordinal >= client_count) {
    throw ConfigurationError("client ordinal " + std::to_string(ordinal) +
                             " out of range for " + std::to_string(client_count) + " clients");
  }
  if (sensor_number < client_count) {
    throw ConfigurationError("SensorNumber (" + std::to_string(sensor_number) +
                             ") is smaller than the client count (" +
                             std::to_string(client_count) + ")");
  }
  std::uint64_t width = (sensor_number + client_count - 1) / client_count;
  std::uint64_t begin = width * ordinal;
  std::uint64_t end = std::min(begin + width, sensor_number);
  if (begin >= sensor_number) {
    throw ConfigurationError("client " + std::to_string(ordinal) + " would own no sensors (" +
                             std::to_string(sensor_number) + " sensors, slice width " +
                             std::to_string(width) + ")");
  }
  return SensorSlice{begin, end};
}

DataGenerator::DataGenerator(const WorkloadDefinition& def, std::uint32_t client_count,
                             std::uint32_t client_ordinal)
    : slice_(SliceForClient(def.sensor_number, client_count, client_ordinal)),
      granularity_(def.timestamp_granularity),
      start_time_(def.start_time),
      end_time_(def.end_time()),
      next_timestamp_(def.start_time),
      next_sensor_(slice_.begin),
      rng_(SeedStream(def.seed, client_ordinal)) {}

double DataGenerator::NextValue() {
  // 53 random bits -> [0, 1), scaled onto [0, 2^31 - 1).
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53 * kMaxSensorValue;
}

std::vector<SensorRecord> DataGenerator::NextBatch(std::uint64_t batch_size) {
  std::vector<SensorRecord> out;
  FillBatch(batch_size, out);
  return out;
}

void DataGenerator::FillBatch(std::uint64_t batch_size, std::vector<SensorRecord>& out) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

  // Timestamp of the batch's last record, computed before touching any state.
  std::uint64_t offset_in_cycle = next_sensor_ - slice_.begin;
  std::uint64_t last_wraps = (offset_in_cycle + batch_size - 1) / slice_.size();
  Timestamp last = next_timestamp_ + granularity_ * static_cast<std::int64_t>(last_wraps);
  if (last >= end_time_) {
    throw SpanExhaustedError("time span exhausted: next record would be at or after the end of "
                             "the configured day span (" +
                             std::to_string(generated_) + " records generated)");
  }

  out.resize(batch_size);
  for (auto& record : out) {
    record.timestamp = next_timestamp_;
    record.sensor_id = next_sensor_;
    record.value = NextValue();
    if (++next_sensor_ == slice_.end) {
      next_sensor_ = slice_.begin;
      next_timestamp_ += granularity_;
    }
  }
  generated_ += batch_size;
}

void DumpRecords(std::span<const SensorRecord> records, std::ostream& out) {
  unsigned char row[kRecordSizeBytes];
  for (const auto& r : records) {
    PutLittleEndian(EpochMillis(r.timestamp), row);
    PutLittleEndian(r.sensor_id, row + 8);
    PutLittleEndian(r.value, row + 16);
    out.write(reinterpret_cast<const char*>(row), sizeof(row));
  }
}

}  // namespace scits
