#include "scits/workload_engine.h"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <future>
#include <latch>
#include <limits>
#include <mutex>
#include <thread>

#include "scits/data_generator.h"
#include "scits/errors.h"

namespace scits {
namespace {

using Clock = std::chrono::steady_clock;
using std::chrono::nanoseconds;

// Many producers, one consumer. The collector is the only owner of the final
// sample vector.
class SampleChannel {
 public:
  void Push(LatencySample s) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(s));
    }
    cv_.notify_one();
  }

  void Close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  // Moves everything pending into `out`. Returns false once closed and drained.
  bool Drain(std::vector<LatencySample>& out) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return false;
    for (auto& s : queue_) out.push_back(std::move(s));
    queue_.clear();
    return true;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<LatencySample> queue_;
  bool closed_ = false;
};

class AbortFlag {
 public:
  void Raise(const std::string& reason) {
    std::lock_guard lock(mu_);
    if (!raised_.exchange(true)) reason_ = reason;
  }
  bool raised() const { return raised_.load(std::memory_order_relaxed); }
  std::string reason() {
    std::lock_guard lock(mu_);
    return reason_;
  }

 private:
  std::atomic<bool> raised_{false};
  std::mutex mu_;
  std::string reason_;
};

Timestamp WallNow() {
  return std::chrono::floor<Millis>(std::chrono::system_clock::now());
}

std::uint64_t TimestampSlots(const WorkloadDefinition& def) {
  const auto span = (def.end_time() - def.start_time).count();
  const auto g = def.timestamp_granularity.count();
  return static_cast<std::uint64_t>((span + g - 1) / g);
}

std::uint32_t FailureLimit(const WorkloadDefinition& def) {
  return std::max<std::uint32_t>(def.max_consecutive_failures, 1);
}

void SortSamples(std::vector<LatencySample>& samples) {
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.client_ordinal, a.seq) < std::tie(b.client_ordinal, b.seq);
  });
}

struct Worker {
  std::uint32_t ordinal = 0;
  DataGenerator generator;
  std::uint64_t record_quota = 0;  // TotalRecords only
};

}  // namespace

std::vector<std::uint64_t> SplitRecordQuota(std::uint64_t total, std::uint32_t clients) {
  if (clients == 0) throw ConfigurationError("client count must be positive");
  std::vector<std::uint64_t> out(clients, total / clients);
  for (std::uint64_t i = 0; i < total % clients; ++i) ++out[i];
  return out;
}

void CheckSpanCapacity(const RunPlan& plan) {
  const WorkloadDefinition& def = plan.definition;
  if (plan.workload_kind != WorkloadKind::kIngestion) return;
  if (std::holds_alternative<StopAfter>(def.stop)) return;
  const std::uint64_t slots = TimestampSlots(def);
  std::vector<std::uint64_t> per_client(plan.client_count, 0);
  if (auto* b = std::get_if<BatchesPerClient>(&def.stop)) {
    std::fill(per_client.begin(), per_client.end(), b->batches * plan.batch_size);
  } else {
    per_client = SplitRecordQuota(std::get<TotalRecords>(def.stop).records, plan.client_count);
  }
  for (std::uint32_t i = 0; i < plan.client_count; ++i) {
    const SensorSlice slice = SliceForClient(def.sensor_number, plan.client_count, i);
    const std::uint64_t records = per_client[i] + def.warmup_batches * plan.batch_size;
    const std::uint64_t needed = (records + slice.size() - 1) / slice.size();
    if (needed > slots) {
      throw ConfigurationError("run " + std::to_string(plan.ordinal) + ": client " +
                               std::to_string(i) + " needs " + std::to_string(needed) +
                               " timestamps but DaySpan holds only " + std::to_string(slots));
    }
  }
}

IngestionResult RunIngestion(const RunPlan& plan, const AdapterFactory& factory) {
  const WorkloadDefinition& def = plan.definition;
  if (plan.batch_size == 0) throw ConfigurationError("batch size must be positive");
  const std::uint32_t clients = plan.client_count;

  std::vector<Worker> workers;
  workers.reserve(clients);
  std::vector<std::uint64_t> quotas(clients, 0);
  if (auto* t = std::get_if<TotalRecords>(&def.stop)) quotas = SplitRecordQuota(t->records, clients);
  for (std::uint32_t i = 0; i < clients; ++i) {
    workers.push_back(Worker{i, DataGenerator(def, clients, i), quotas[i]});
  }

  SampleChannel channel;
  AbortFlag abort;
  std::atomic<std::uint64_t> warmup_records{0};
  std::latch ready(clients);
  std::promise<Clock::time_point> go_promise;
  std::shared_future<Clock::time_point> go = go_promise.get_future().share();

  std::vector<LatencySample> samples;
  std::thread collector([&] {
    while (channel.Drain(samples)) {
    }
  });

  auto work = [&](Worker& w) {
    std::unique_ptr<DbAdapter> adapter;
    std::vector<SensorRecord> batch;
    std::uint32_t consecutive = 0;

    // Inserts `batch`, retrying on failure. Returns the receipt, or nullopt
    // once the run is aborted. Each attempt is reported through `report`.
    auto insert = [&](auto&& report) -> bool {
      while (!abort.raised()) {
        const auto before = Clock::now();
        try {
          if (!adapter) adapter = factory();
          InsertReceipt receipt = adapter->InsertBatch(batch);
          consecutive = 0;
          report(before, receipt.elapsed, receipt.records_written, false);
          return true;
        } catch (const std::exception& e) {
          report(before, Clock::now() - before, 0, true);
          if (++consecutive >= FailureLimit(def)) {
            abort.Raise("client " + std::to_string(w.ordinal) + " failed " +
                        std::to_string(consecutive) + " batches in a row: " + e.what());
          }
        }
      }
      return false;
    };

    try {
      for (std::uint64_t i = 0; i < def.warmup_batches && !abort.raised(); ++i) {
        w.generator.FillBatch(plan.batch_size, batch);
        insert([&](Clock::time_point, nanoseconds, std::uint64_t records, bool) {
          warmup_records += records;
        });
      }
    } catch (const std::exception& e) {
      abort.Raise(std::string("warm-up: ") + e.what());
    }
    ready.count_down();
    const Clock::time_point t0 = go.get();

    std::uint64_t seq = 0;
    std::uint64_t batches_done = 0;
    std::uint64_t records_left = w.record_quota;
    try {
      while (!abort.raised()) {
        std::uint64_t n = plan.batch_size;
        if (auto* b = std::get_if<BatchesPerClient>(&def.stop)) {
          if (batches_done >= b->batches) break;
        } else if (std::holds_alternative<TotalRecords>(def.stop)) {
          if (records_left == 0) break;
          n = std::min(n, records_left);
        } else if (Clock::now() - t0 >= std::get<StopAfter>(def.stop).duration) {
          break;
        }
        try {
          w.generator.FillBatch(n, batch);
        } catch (const SpanExhaustedError&) {
          if (std::holds_alternative<StopAfter>(def.stop)) break;
          throw;
        }
        const Timestamp wall = WallNow();
        bool ok = insert([&](Clock::time_point before, nanoseconds elapsed, std::uint64_t records,
                             bool failed) {
          LatencySample s;
          s.run_ordinal = plan.ordinal;
          s.client_ordinal = w.ordinal;
          s.seq = seq++;
          s.kind = SampleKind::kInsert;
          s.batch_size = n;
          s.start_offset = before - t0;
          s.elapsed = elapsed;
          s.records = records;
          s.failed = failed;
          s.wall_start = wall;
          channel.Push(std::move(s));
        });
        if (!ok) break;
        ++batches_done;
        records_left -= std::min(records_left, n);
      }
    } catch (const std::exception& e) {
      abort.Raise("client " + std::to_string(w.ordinal) + ": " + e.what());
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(clients);
  for (auto& w : workers) threads.emplace_back(work, std::ref(w));
  ready.wait();
  const Clock::time_point t0 = Clock::now();
  go_promise.set_value(t0);
  for (auto& t : threads) t.join();
  const nanoseconds wall_time = Clock::now() - t0;
  channel.Close();
  collector.join();

  SortSamples(samples);
  IngestionResult result;
  IngestionSummary& sum = result.summary;
  for (const auto& s : samples) {
    if (s.failed) {
      ++sum.failed_batches;
    } else {
      sum.total_records += s.records;
    }
  }
  sum.wall_time = wall_time;
  sum.overall_rate = wall_time.count() > 0 ? IngestionRate(sum.total_records, wall_time) : 0.0;
  sum.rolling_rates = RollingRate(samples, wall_time);
  sum.warmup_records = warmup_records.load();
  sum.aborted = abort.raised();
  sum.abort_reason = abort.reason();
  result.samples = std::move(samples);
  return result;
}

std::int64_t UniformInt(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("UniformInt: empty range");
  const std::uint64_t n = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  if (n == 0) return static_cast<std::int64_t>(rng());  // full 64-bit range
  // 2^64 mod n; draws below it would bias the low residues.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) {
      return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + r % n);
    }
  }
}

std::mt19937_64 QueryWindowRng(const WorkloadDefinition& def) {
  std::seed_seq seq{static_cast<std::uint32_t>(def.seed), static_cast<std::uint32_t>(def.seed >> 32),
                    0x51554552u};
  return std::mt19937_64(seq);
}

Timestamp DrawWindowStart(std::mt19937_64& rng, const WorkloadDefinition& def) {
  const std::int64_t lo = EpochMillis(def.start_time);
  const std::int64_t hi =
      EpochMillis(def.end_time()) - static_cast<std::int64_t>(def.duration_minutes) * 60000;
  if (hi < lo) throw ConfigurationError("DurationMinutes exceeds DaySpan");
  return FromEpochMillis(UniformInt(rng, lo, hi));
}

QueryRunResult RunQueryWorkload(const RunPlan& plan, const AdapterFactory& factory) {
  const WorkloadDefinition& def = plan.definition;
  if (!def.query_type) throw ConfigurationError("query workload without QueryType");
  QueryRunResult out;
  std::unique_ptr<DbAdapter> adapter;
  std::mt19937_64 rng = QueryWindowRng(def);
  std::uint32_t consecutive = 0;
  const Clock::time_point t0 = Clock::now();
  for (std::uint32_t i = 0; i < def.test_retries; ++i) {
    const QuerySpec spec = MakeQuerySpec(def, DrawWindowStart(rng, def));
    LatencySample s;
    s.run_ordinal = plan.ordinal;
    s.seq = i;
    s.kind = SampleKind::kQuery;
    s.query_type = spec.type;
    s.wall_start = WallNow();
    const auto before = Clock::now();
    s.start_offset = before - t0;
    try {
      if (!adapter) adapter = factory();
      s.elapsed = adapter->ExecuteQuery(spec).elapsed;
      consecutive = 0;
    } catch (const std::exception& e) {
      s.elapsed = Clock::now() - before;
      s.failed = true;
      if (++consecutive >= FailureLimit(def)) {
        out.aborted = true;
        out.abort_reason = std::to_string(consecutive) + " queries failed in a row: " + e.what();
      }
    }
    out.samples.push_back(s);
    if (out.aborted) break;
  }
  return out;
}

std::uint64_t Populate(const WorkloadDefinition& def, const AdapterFactory& factory,
                       std::uint64_t batch_size) {
  if (batch_size == 0) throw ConfigurationError("populate batch size must be positive");
  DataGenerator gen(def, 1, 0);
  std::uint64_t remaining = TimestampSlots(def) * gen.slice().size();
  auto adapter = factory();
  adapter->InitSchema(def.sensor_number);
  std::vector<SensorRecord> batch;
  std::uint64_t written = 0;
  while (remaining > 0) {
    const std::uint64_t n = std::min(batch_size, remaining);
    gen.FillBatch(n, batch);
    written += adapter->InsertBatch(batch).records_written;
    remaining -= n;
  }
  return written;
}

std::string BetweenRunsReset(const WorkloadDefinition& def, const AdapterFactory& factory,
                             std::chrono::milliseconds health_timeout) {
  if (def.reset_hook.empty()) return {};
  // Grouped so the redirect covers every command of a compound hook.
  const std::string command = "{\n" + def.reset_hook + "\n} 2>&1";
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) throw ResetHookError("cannot start reset hook: " + def.reset_hook, "");
  std::string output;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    throw ResetHookError("reset hook exited with status " + std::to_string(code), output);
  }

  const auto deadline = Clock::now() + health_timeout;
  std::string last_error;
  for (;;) {
    try {
      factory()->Ping();
      return output;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    if (Clock::now() >= deadline) {
      throw BackendError("backend not healthy " +
                             std::to_string(health_timeout.count()) +
                             " ms after reset: " + last_error,
                         true);
    }
    std::this_thread::sleep_for(std::min<Clock::duration>(std::chrono::milliseconds(250),
                                                          deadline - Clock::now()));
  }
}

}  // namespace scits
