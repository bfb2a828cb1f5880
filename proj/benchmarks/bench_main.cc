#include <benchmark/benchmark.h>

#include "scits/clickhouse/clickhouse_adapter.h"
#include "scits/data_generator.h"
#include "scits/influx/influx_adapter.h"
#include "scits/memory_adapter.h"
#include "scits/metrics.h"
#include "scits/pg/pg_connection.h"
#include "scits/time_util.h"

namespace {

scits::WorkloadDefinition Definition(std::uint64_t sensors) {
  scits::WorkloadDefinition def;
  def.start_time = scits::ParseUtc("2022-01-01T00:00:00Z");
  def.day_span = 15;
  def.sensor_number = sensors;
  return def;
}

void BM_GenerateBatch(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  std::vector<scits::SensorRecord> batch;
  auto def = Definition(1000);
  def.day_span = 100000;
  scits::DataGenerator gen(def, 1, 0);
  for (auto _ : state) {
    gen.FillBatch(n, batch);
    benchmark::DoNotOptimize(batch.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GenerateBatch)->Arg(1000)->Arg(20000)->Arg(100000);

std::vector<scits::SensorRecord> Batch(std::uint64_t n) {
  scits::DataGenerator gen(Definition(100), 1, 0);
  return gen.NextBatch(n);
}

void BM_EncodePgCopy(benchmark::State& state) {
  auto batch = Batch(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(scits::pg::EncodeBinaryCopy(batch));
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_EncodePgCopy)->Arg(20000);

void BM_EncodeClickHouseBlock(benchmark::State& state) {
  auto batch = Batch(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(scits::ch::EncodeRecords(batch));
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_EncodeClickHouseBlock)->Arg(20000);

void BM_EncodeLineProtocol(benchmark::State& state) {
  auto batch = Batch(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(scits::influx::EncodeLineProtocol(batch));
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_EncodeLineProtocol)->Arg(20000);

void BM_MemoryQ4(benchmark::State& state) {
  auto def = Definition(10);
  scits::DataGenerator gen(def, 1, 0);
  scits::MemoryStore store;
  store.Append(gen.NextBatch(1000000));
  scits::QuerySpec spec;
  spec.type = scits::QueryType::kQ4;
  spec.t_start = def.start_time;
  spec.t_end = def.start_time + std::chrono::hours(24);
  spec.sensors = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  for (auto _ : state) benchmark::DoNotOptimize(store.Evaluate(spec));
}
BENCHMARK(BM_MemoryQ4);

void BM_ComputeStats(benchmark::State& state) {
  std::vector<std::chrono::nanoseconds> v;
  std::mt19937_64 rng(1);
  for (int i = 0; i < state.range(0); ++i) v.emplace_back(rng() % 1000000000);
  for (auto _ : state) benchmark::DoNotOptimize(scits::ComputeStats(v));
}
BENCHMARK(BM_ComputeStats)->Arg(1000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
