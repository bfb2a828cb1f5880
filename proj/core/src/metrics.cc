#include "scits/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scits {

using std::chrono::nanoseconds;

QueryStats ComputeStats(std::span<const nanoseconds> samples) {
  if (samples.empty()) throw std::invalid_argument("compute_stats: no samples");
  std::vector<std::int64_t> v;
  v.reserve(samples.size());
  for (auto s : samples) v.push_back(s.count());
  std::sort(v.begin(), v.end());

  const std::uint64_t n = v.size();
  long double sum = 0;
  for (auto x : v) sum += x;
  const long double mean = sum / n;
  long double sq = 0;
  for (auto x : v) sq += (x - mean) * (x - mean);

  // ceil(95 n / 100) without floating point.
  const std::uint64_t rank = (95 * n + 99) / 100;

  QueryStats st;
  st.n = n;
  st.min = nanoseconds{v.front()};
  st.max = nanoseconds{v.back()};
  st.p95 = nanoseconds{v[rank - 1]};
  st.mean_ns = static_cast<double>(mean);
  st.stddev_ns = n > 1 ? static_cast<double>(std::sqrt(sq / (n - 1))) : 0.0;
  return st;
}

QueryStats ComputeStats(std::span<const LatencySample> samples) {
  std::vector<nanoseconds> ok;
  for (const auto& s : samples) {
    if (!s.failed) ok.push_back(s.elapsed);
  }
  return ComputeStats(ok);
}

double IngestionRate(std::uint64_t total_records, nanoseconds wall_time) {
  if (wall_time.count() <= 0) throw std::invalid_argument("ingestion_rate: wall time must be > 0");
  return static_cast<double>(total_records) / std::chrono::duration<double>(wall_time).count();
}

double ThroughputBytes(double records_per_second, std::size_t record_size) {
  if (record_size == 0) throw std::invalid_argument("throughput: record size must be > 0");
  return records_per_second * static_cast<double>(record_size);
}

double ThroughputMBps(double records_per_second, std::size_t record_size) {
  return ThroughputBytes(records_per_second, record_size) / 1e6;
}

RollingRateSeries RollingRate(std::span<const LatencySample> samples, nanoseconds run_end) {
  const std::int64_t window = kRollingWindow.count();
  auto index_of = [&](std::int64_t offset) -> std::uint64_t {
    return offset <= 0 ? 0 : static_cast<std::uint64_t>((offset - 1) / window);
  };

  std::int64_t end = run_end.count();
  std::vector<std::uint64_t> counts;
  bool any = false;
  for (const auto& s : samples) {
    if (s.failed || s.records == 0) continue;
    const std::int64_t c = s.completion_offset().count();
    const std::uint64_t k = index_of(c);
    if (counts.size() <= k) counts.resize(k + 1, 0);
    counts[k] += s.records;
    end = std::max(end, c);
    any = true;
  }
  if (!any) return {};
  counts.resize(std::max<std::size_t>(counts.size(), index_of(end) + 1), 0);

  RollingRateSeries out;
  out.reserve(counts.size());
  for (std::uint64_t k = 0; k < counts.size(); ++k) {
    RateBucket b;
    b.minute_index = k;
    b.records = counts[k];
    const bool last = k + 1 == counts.size();
    std::int64_t len = last ? end - static_cast<std::int64_t>(k) * window : window;
    b.length = nanoseconds{std::max<std::int64_t>(len, 1)};
    b.rate = static_cast<double>(b.records) / std::chrono::duration<double>(b.length).count();
    out.push_back(b);
  }
  return out;
}

}  // namespace scits
