#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "scits/metrics.h"

namespace scits {
namespace {

using std::chrono::milliseconds;
using std::chrono::nanoseconds;
using std::chrono::seconds;

std::vector<nanoseconds> Ms(std::initializer_list<int> v) {
  std::vector<nanoseconds> out;
  for (int x : v) out.push_back(milliseconds(x));
  return out;
}

TEST(ComputeStats, Singleton) {
  auto st = ComputeStats(Ms({100}));
  EXPECT_EQ(st.n, 1u);
  EXPECT_EQ(st.min, milliseconds(100));
  EXPECT_EQ(st.p95, milliseconds(100));
  EXPECT_EQ(st.max, milliseconds(100));
  EXPECT_DOUBLE_EQ(st.mean_ns, 1e8);
  EXPECT_EQ(st.stddev_ns, 0.0);
}

TEST(ComputeStats, OneToFour) {
  auto st = ComputeStats(Ms({3, 1, 4, 2}));
  EXPECT_EQ(st.min, milliseconds(1));
  EXPECT_DOUBLE_EQ(st.mean_ns, 2.5e6);
  EXPECT_EQ(st.p95, milliseconds(4));
  EXPECT_EQ(st.max, milliseconds(4));
  // sqrt(((1.5^2 + 0.5^2) * 2) / 3) = sqrt(5/3)
  EXPECT_NEAR(st.stddev_ns / 1e6, 1.2910, 5e-5);
  EXPECT_DOUBLE_EQ(st.stddev_ns, std::sqrt(5.0 / 3.0) * 1e6);
}

TEST(ComputeStats, ConstantSeries) {
  std::vector<nanoseconds> v(1000, milliseconds(5));
  auto st = ComputeStats(v);
  EXPECT_EQ(st.stddev_ns, 0.0);
  EXPECT_EQ(st.p95, milliseconds(5));
}

TEST(ComputeStats, NearestRankBoundaries) {
  // n = 20: rank 19. n = 21: ceil(19.95) = 20. n = 100: rank 95.
  std::vector<nanoseconds> v;
  for (int i = 1; i <= 20; ++i) v.push_back(nanoseconds(i));
  EXPECT_EQ(ComputeStats(v).p95, nanoseconds(19));
  v.push_back(nanoseconds(21));
  EXPECT_EQ(ComputeStats(v).p95, nanoseconds(20));
  v.clear();
  for (int i = 1; i <= 100; ++i) v.push_back(nanoseconds(i));
  EXPECT_EQ(ComputeStats(v).p95, nanoseconds(95));
}

TEST(ComputeStats, EmptyThrowsAndFailuresIgnored) {
  EXPECT_THROW(ComputeStats(std::span<const nanoseconds>{}), std::invalid_argument);
  std::vector<LatencySample> s(3);
  s[0].elapsed = milliseconds(2);
  s[1].elapsed = milliseconds(1000);
  s[1].failed = true;
  s[2].elapsed = milliseconds(4);
  auto st = ComputeStats(std::span<const LatencySample>(s));
  EXPECT_EQ(st.n, 2u);
  EXPECT_EQ(st.max, milliseconds(4));
  s[0].failed = s[2].failed = true;
  EXPECT_THROW(ComputeStats(std::span<const LatencySample>(s)), std::invalid_argument);
}

TEST(ComputeStats, MatchesBruteForceOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 1 + rng() % 300;
    std::vector<nanoseconds> v(n);
    for (auto& x : v) x = nanoseconds(static_cast<std::int64_t>(rng() % 5'000'000'000ULL));
    std::vector<std::int64_t> sorted;
    for (auto x : v) sorted.push_back(x.count());
    std::sort(sorted.begin(), sorted.end());
    double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0L) / n;
    double ss = 0;
    for (auto x : sorted) ss += (x - mean) * (x - mean);
    double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * n - 1e-9));

    auto st = ComputeStats(v);
    ASSERT_EQ(st.min.count(), sorted.front());
    ASSERT_EQ(st.max.count(), sorted.back());
    ASSERT_EQ(st.p95.count(), sorted[rank - 1]);
    ASSERT_NEAR(st.mean_ns, mean, 1e-9 * mean + 1e-9);
    ASSERT_NEAR(st.stddev_ns, sd, 1e-9 * sd + 1e-6);
    ASSERT_LE(st.min.count(), st.mean_ns);
    ASSERT_LE(st.mean_ns, st.max.count());
  }
}

TEST(IngestionRate, Examples) {
  EXPECT_DOUBLE_EQ(IngestionRate(20000, milliseconds(100)), 200000.0);
  EXPECT_NEAR(IngestionRate(2'880'000'000ULL, seconds(2252)), 2.88e9 / 2252, 1e-6);
  EXPECT_EQ(IngestionRate(0, seconds(10)), 0.0);
  EXPECT_THROW(IngestionRate(1, nanoseconds(0)), std::invalid_argument);
}

TEST(Throughput, TableTwoAnchors) {
  EXPECT_NEAR(ThroughputMBps(1278928), 30.69, 30.69 * 0.005);
  EXPECT_NEAR(ThroughputMBps(741688.5), 17.8, 17.8 * 0.005);
  EXPECT_EQ(ThroughputMBps(0), 0.0);
  EXPECT_DOUBLE_EQ(ThroughputBytes(10, 8), 80.0);
  EXPECT_THROW(ThroughputBytes(1, 0), std::invalid_argument);
}

LatencySample Done(nanoseconds completion, std::uint64_t records) {
  LatencySample s;
  s.start_offset = completion / 2;
  s.elapsed = completion - s.start_offset;
  s.records = records;
  return s;
}

TEST(RollingRate, SingleFullMinute) {
  std::vector<LatencySample> s;
  for (int i = 1; i <= 60; ++i) s.push_back(Done(seconds(i), 10000));
  auto r = RollingRate(s, seconds(60));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].minute_index, 0u);
  EXPECT_EQ(r[0].records, 600000u);
  EXPECT_DOUBLE_EQ(r[0].rate, 10000.0);
}

TEST(RollingRate, ThreeEqualMinutes) {
  std::vector<LatencySample> s;
  for (int m = 0; m < 3; ++m) s.push_back(Done(seconds(60 * m + 30), 1200));
  auto r = RollingRate(s, seconds(180));
  ASSERT_EQ(r.size(), 3u);
  for (const auto& b : r) EXPECT_DOUBLE_EQ(b.rate, 20.0);
}

TEST(RollingRate, BoundariesGapsAndPartialTail) {
  std::vector<LatencySample> s = {Done(nanoseconds(0), 1), Done(seconds(60), 2),
                                  Done(seconds(60) + nanoseconds(1), 4), Done(seconds(150), 8)};
  LatencySample failed = Done(seconds(10), 1000);
  failed.failed = true;
  s.push_back(failed);
  auto r = RollingRate(s);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].records, 3u);  // offsets 0 and exactly 60 s
  EXPECT_EQ(r[1].records, 4u);
  EXPECT_EQ(r[2].records, 8u);
  EXPECT_EQ(r[2].length, seconds(30));
  EXPECT_DOUBLE_EQ(r[2].rate, 8.0 / 30.0);
  // A later run end stretches the tail and adds empty minutes.
  auto longer = RollingRate(s, seconds(250));
  ASSERT_EQ(longer.size(), 5u);
  EXPECT_EQ(longer[4].records, 0u);
  EXPECT_EQ(longer[4].length, seconds(10));
  EXPECT_TRUE(RollingRate({}).empty());
}

TEST(RollingRate, ConservesRecords) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LatencySample> s;
    std::uint64_t total = 0;
    std::int64_t last = 0;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 200); i < n; ++i) {
      auto c = nanoseconds(static_cast<std::int64_t>(rng() % 400'000'000'000ULL));
      std::uint64_t recs = 1 + rng() % 50000;
      s.push_back(Done(c, recs));
      total += recs;
      last = std::max(last, c.count());
    }
    auto r = RollingRate(s);
    std::uint64_t by_records = 0;
    long double by_rate = 0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      ASSERT_EQ(r[k].minute_index, k);
      by_records += r[k].records;
      by_rate += static_cast<long double>(r[k].rate) * r[k].length.count() / 1e9L;
    }
    ASSERT_EQ(by_records, total);
    ASSERT_EQ(std::llround(by_rate), static_cast<long long>(total));
    // Independent bucket index for the latest completion.
    ASSERT_EQ(r.size(), last == 0 ? 1u : static_cast<std::size_t>((last + 59'999'999'999) / 60'000'000'000));
  }
}

}  // namespace
}  // namespace scits
