#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "scits/db_adapter.h"

namespace scits {

// Thread-safe in-memory measurements table for the Reference backend.
//
// Points are kept per sensor; a series is re-sorted by time lazily on the
// first query after an out-of-order append. Queries binary-search each
// filtered series and aggregate bucket runs in one streaming pass.
class MemoryStore {
 public:
  void Clear();
  void Append(std::span<const SensorRecord> batch);
  std::uint64_t size() const;

  // Every stored record, ordered by (sensor_id, timestamp).
  std::vector<SensorRecord> Snapshot() const;

  ResultSet Evaluate(const QuerySpec& spec) const;

 private:
  struct Point {
    std::int64_t t;
    double value;
  };
  struct Series {
    std::vector<Point> points;
    bool sorted = true;
  };

  void SortPending() const;

  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<SensorId, Series> series_;
  mutable bool dirty_ = false;
  std::uint64_t size_ = 0;
};

class MemoryAdapter : public DbAdapter {
 public:
  explicit MemoryAdapter(std::shared_ptr<MemoryStore> store) : store_(std::move(store)) {}

  void InitSchema(std::uint64_t sensor_number) override;
  InsertReceipt InsertBatch(std::span<const SensorRecord> batch) override;
  QueryResult ExecuteQuery(const QuerySpec& spec) override;
  void Ping() override {}
  std::string ServerVersion() override;
  std::uint64_t RowCount() override { return store_->size(); }

  const std::shared_ptr<MemoryStore>& store() const { return store_; }

 private:
  std::shared_ptr<MemoryStore> store_;
};

}  // namespace scits
