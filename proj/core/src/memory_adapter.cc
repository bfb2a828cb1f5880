#include "scits/memory_adapter.h"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "scits/time_util.h"

namespace scits {
namespace {

// Welford running moments plus extrema; mergeable across sensors.
struct Accumulator {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double min = 0.0;
  double max = 0.0;

  void Add(double x) {
    if (n == 0) {
      min = max = x;
    } else {
      min = std::min(min, x);
      max = std::max(max, x);
    }
    ++n;
    double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  void Merge(const Accumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    double total = static_cast<double>(n + o.n);
    double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.n) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
    min = std::min(min, o.min);
    max = std::max(max, o.max);
    n += o.n;
  }

  std::optional<double> Result(AggFunc f) const {
    if (n == 0) return std::nullopt;
    switch (f) {
      case AggFunc::kAverage:
        return mean;
      case AggFunc::kStdDev:
        if (n < 2) return std::nullopt;
        return std::sqrt(m2 / static_cast<double>(n - 1));
      case AggFunc::kMin:
        return min;
      case AggFunc::kMax:
        return max;
    }
    return std::nullopt;
  }
};

struct BucketAcc {
  Timestamp bucket;
  Accumulator acc;
};

std::vector<SensorId> Deduplicated(std::vector<SensorId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

void MemoryStore::Clear() {
  std::unique_lock lock(mutex_);
  series_.clear();
  size_ = 0;
  dirty_ = false;
}

void MemoryStore::Append(std::span<const SensorRecord> batch) {
  std::unique_lock lock(mutex_);
  for (const auto& r : batch) {
    Series& s = series_[r.sensor_id];
    std::int64_t t = EpochMillis(r.timestamp);
    if (!s.points.empty() && t < s.points.back().t) {
      s.sorted = false;
      dirty_ = true;
    }
    s.points.push_back(Point{t, r.value});
  }
  size_ += batch.size();
}

std::uint64_t MemoryStore::size() const {
  std::shared_lock lock(mutex_);
  return size_;
}

void MemoryStore::SortPending() const {
  for (auto& [id, s] : series_) {
    if (!s.sorted) {
      std::stable_sort(s.points.begin(), s.points.end(),
                       [](const Point& a, const Point& b) { return a.t < b.t; });
      s.sorted = true;
    }
  }
  dirty_ = false;
}

std::vector<SensorRecord> MemoryStore::Snapshot() const {
  std::unique_lock lock(mutex_);
  if (dirty_) SortPending();
  std::vector<SensorId> ids;
  ids.reserve(series_.size());
  for (const auto& [id, s] : series_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  std::vector<SensorRecord> out;
  out.reserve(size_);
  for (SensorId id : ids) {
    for (const Point& p : series_.at(id).points) {
      out.push_back(SensorRecord{FromEpochMillis(p.t), id, p.value});
    }
  }
  return out;
}

ResultSet MemoryStore::Evaluate(const QuerySpec& spec) const {
  ValidateQuerySpec(spec);

  std::unique_lock exclusive(mutex_, std::defer_lock);
  std::shared_lock shared(mutex_);
  if (dirty_) {
    shared.unlock();
    exclusive.lock();
    if (dirty_) SortPending();
  }

  const std::int64_t lo = EpochMillis(spec.t_start);
  const std::int64_t hi = EpochMillis(spec.t_end);

  // Points of one sensor inside [lo, hi).
  auto range_of = [&](SensorId id) -> std::span<const Point> {
    auto it = series_.find(id);
    if (it == series_.end()) return {};
    const auto& pts = it->second.points;
    auto first = std::lower_bound(pts.begin(), pts.end(), lo,
                                  [](const Point& p, std::int64_t t) { return p.t < t; });
    auto last = std::lower_bound(first, pts.end(), hi,
                                 [](const Point& p, std::int64_t t) { return p.t < t; });
    return {first, last};
  };

  // Consecutive points share a bucket, so each bucket is one contiguous run.
  auto buckets_of = [&](SensorId id) {
    std::vector<BucketAcc> out;
    for (const Point& p : range_of(id)) {
      Timestamp b = FloorToBucket(FromEpochMillis(p.t), spec.bucket_width);
      if (out.empty() || out.back().bucket != b) out.push_back(BucketAcc{b, {}});
      out.back().acc.Add(p.value);
    }
    return out;
  };

  ResultSet result;
  result.type = spec.type;
  const auto sensors = Deduplicated(spec.sensors);

  switch (spec.type) {
    case QueryType::kQ1:
      for (SensorId id : sensors) {
        for (const Point& p : range_of(id)) {
          result.rows.push_back(ResultRow{FromEpochMillis(p.t), id, p.value, std::nullopt});
        }
      }
      break;
    case QueryType::kQ2:
      for (const auto& b : buckets_of(spec.sensors.front())) {
        if (b.acc.min < spec.min_value || b.acc.max > spec.max_value) {
          result.rows.push_back(ResultRow{b.bucket, 0, b.acc.max, b.acc.min});
        }
      }
      break;
    case QueryType::kQ3: {
      Accumulator total;
      for (SensorId id : sensors) {
        Accumulator part;
        for (const Point& p : range_of(id)) part.Add(p.value);
        total.Merge(part);
      }
      result.rows.push_back(ResultRow{Timestamp{}, 0, total.Result(spec.agg), std::nullopt});
      break;
    }
    case QueryType::kQ4:
      for (SensorId id : sensors) {
        for (const auto& b : buckets_of(id)) {
          result.rows.push_back(ResultRow{b.bucket, id, b.acc.Result(spec.agg), std::nullopt});
        }
      }
      break;
    case QueryType::kQ5: {
      auto left = buckets_of(spec.sensors[0]);
      auto right = buckets_of(spec.sensors[1]);
      auto r = right.begin();
      for (const auto& l : left) {
        while (r != right.end() && r->bucket < l.bucket) ++r;
        if (r == right.end()) break;
        if (r->bucket != l.bucket) continue;
        auto a = l.acc.Result(spec.agg);
        auto b = r->acc.Result(spec.agg);
        std::optional<double> combined;
        if (a && b) combined = *a - *b;
        result.rows.push_back(ResultRow{l.bucket, 0, combined, std::nullopt});
      }
      break;
    }
  }
  SortCanonical(result);
  return result;
}

void MemoryAdapter::InitSchema(std::uint64_t) { store_->Clear(); }

InsertReceipt MemoryAdapter::InsertBatch(std::span<const SensorRecord> batch) {
  if (batch.empty()) throw std::invalid_argument("insert_batch: empty batch");
  auto start = std::chrono::steady_clock::now();
  store_->Append(batch);
  auto elapsed = std::chrono::steady_clock::now() - start;
  return InsertReceipt{batch.size(), elapsed};
}

QueryResult MemoryAdapter::ExecuteQuery(const QuerySpec& spec) {
  auto start = std::chrono::steady_clock::now();
  ResultSet rows = store_->Evaluate(spec);
  auto elapsed = std::chrono::steady_clock::now() - start;
  return QueryResult{std::move(rows), elapsed};
}

std::string MemoryAdapter::ServerVersion() { return "reference-memory-1"; }

}  // namespace scits
