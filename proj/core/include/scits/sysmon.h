#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "scits/types.h"

namespace scits {

// Resource usage of the database host at one instant. Any field the agent did
// not report stays empty rather than zero.
struct ResourceSnapshot {
  Timestamp wall_timestamp{};
  std::optional<double> cpu_user_pct;
  std::optional<double> cpu_system_pct;
  std::optional<double> cpu_iowait_pct;
  std::optional<double> ctx_switches_per_s;
  std::optional<double> mem_used_pct;
  std::optional<double> mem_cached_bytes;
  std::optional<double> swap_used_bytes;
  std::optional<double> disk_read_bytes_per_s;
  std::optional<double> disk_write_bytes_per_s;
  std::optional<double> disk_io_ops_per_s;
  std::optional<double> net_sent_bytes_per_s;
  std::optional<double> net_recv_bytes_per_s;

  friend bool operator==(const ResourceSnapshot&, const ResourceSnapshot&) = default;
};

// Reads a Glances /api/3/all or /api/4/all document. Counter fields are
// turned into per-second rates with `<field>_rate_per_sec` when the agent
// provides it, otherwise with the section's time_since_update. Disk figures
// are summed over all disks; network over all interfaces except loopback.
// Throws ParseError when the body is not JSON or a section has the wrong shape.
ResourceSnapshot ParseSnapshot(std::string_view body, Timestamp wall_timestamp);

struct MonitorEndpoint {
  std::string scheme_host_port;  // "http://db:61208"
  std::string path;              // "/api/4/all"
};

// "http://db:61208" -> path /api/3/all; "db:61208/api/4/all" also accepted.
// Throws std::invalid_argument.
MonitorEndpoint ParseMonitorUrl(std::string_view url);

// Polls the endpoint on a fixed schedule from a background thread: one
// request at start, then one every `period` measured from the start. Slots
// missed by a slow request are skipped, not made up.
class ResourceMonitor {
 public:
  ResourceMonitor(std::string url, std::chrono::milliseconds period);
  ~ResourceMonitor();
  ResourceMonitor(const ResourceMonitor&) = delete;
  ResourceMonitor& operator=(const ResourceMonitor&) = delete;

  // Probes the endpoint once, then starts sampling. Throws std::runtime_error
  // when the probe fails.
  void Start();
  // Idempotent; safe from any thread. No snapshot is taken after it returns.
  void Stop();

  std::vector<ResourceSnapshot> snapshots() const;
  // Polls that failed or returned an unparsable body.
  std::uint64_t gaps() const { return gaps_.load(); }

 private:
  std::optional<ResourceSnapshot> Poll(std::string* error);
  void Loop(std::chrono::steady_clock::time_point t0);

  MonitorEndpoint endpoint_;
  std::chrono::milliseconds period_;
  std::thread thread_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::vector<ResourceSnapshot> snapshots_;
  std::atomic<std::uint64_t> gaps_{0};
};

}  // namespace scits
