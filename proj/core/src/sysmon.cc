#include "scits/sysmon.h"

#include <httplib.h>
#include <json.hpp>

#include "scits/errors.h"

namespace scits {
namespace {

using nlohmann::json;

std::optional<double> Number(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

// Per-second value of a counter that Glances reports as a delta since the
// previous refresh.
std::optional<double> Rate(const json& obj, const std::string& key) {
  if (auto r = Number(obj, (key + "_rate_per_sec").c_str())) return r;
  auto delta = Number(obj, key.c_str());
  auto dt = Number(obj, "time_since_update");
  if (!delta || !dt || *dt <= 0) return std::nullopt;
  return *delta / *dt;
}

const json* Section(const json& doc, const char* name, json::value_t expected) {
  auto it = doc.find(name);
  if (it == doc.end() || it->is_null()) return nullptr;
  if (it->type() != expected) {
    throw ParseError(std::string("monitor section '") + name + "' has the wrong shape");
  }
  return &*it;
}

void Accumulate(std::optional<double>& total, std::optional<double> v) {
  if (!v) return;
  total = total.value_or(0.0) + *v;
}

}  // namespace

ResourceSnapshot ParseSnapshot(std::string_view body, Timestamp wall_timestamp) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("monitor body is not JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("monitor body is not a JSON object");

  ResourceSnapshot s;
  s.wall_timestamp = wall_timestamp;

  if (const json* cpu = Section(doc, "cpu", json::value_t::object)) {
    s.cpu_user_pct = Number(*cpu, "user");
    s.cpu_system_pct = Number(*cpu, "system");
    s.cpu_iowait_pct = Number(*cpu, "iowait");
    s.ctx_switches_per_s = Rate(*cpu, "ctx_switches");
  }
  if (const json* mem = Section(doc, "mem", json::value_t::object)) {
    s.mem_used_pct = Number(*mem, "percent");
    s.mem_cached_bytes = Number(*mem, "cached");
  }
  if (const json* swap = Section(doc, "memswap", json::value_t::object)) {
    s.swap_used_bytes = Number(*swap, "used");
  }
  if (const json* disks = Section(doc, "diskio", json::value_t::array)) {
    for (const auto& d : *disks) {
      if (!d.is_object()) throw ParseError("monitor diskio entry is not an object");
      Accumulate(s.disk_read_bytes_per_s, Rate(d, "read_bytes"));
      Accumulate(s.disk_write_bytes_per_s, Rate(d, "write_bytes"));
      Accumulate(s.disk_io_ops_per_s, Rate(d, "read_count"));
      Accumulate(s.disk_io_ops_per_s, Rate(d, "write_count"));
    }
  }
  if (const json* nets = Section(doc, "network", json::value_t::array)) {
    for (const auto& n : *nets) {
      if (!n.is_object()) throw ParseError("monitor network entry is not an object");
      if (n.value("interface_name", "") == "lo") continue;
      // Glances 3 names the counters tx/rx, Glances 4 bytes_sent/bytes_recv.
      auto sent = Rate(n, "bytes_sent");
      Accumulate(s.net_sent_bytes_per_s, sent ? sent : Rate(n, "tx"));
      auto recv = Rate(n, "bytes_recv");
      Accumulate(s.net_recv_bytes_per_s, recv ? recv : Rate(n, "rx"));
    }
  }
  return s;
}

MonitorEndpoint ParseMonitorUrl(std::string_view url) {
  std::string rest(url);
  std::string scheme = "http://";
  if (auto p = rest.find("://"); p != std::string::npos) {
    scheme = rest.substr(0, p + 3);
    rest = rest.substr(p + 3);
  }
  if (scheme != "http://") throw std::invalid_argument("monitor URL must use http: " + std::string(url));
  std::string path = "/api/3/all";
  if (auto slash = rest.find('/'); slash != std::string::npos) {
    if (slash + 1 < rest.size()) path = rest.substr(slash);
    rest = rest.substr(0, slash);
  }
  if (rest.empty()) throw std::invalid_argument("monitor URL has no host: " + std::string(url));
  return MonitorEndpoint{scheme + rest, path};
}

ResourceMonitor::ResourceMonitor(std::string url, std::chrono::milliseconds period)
    : endpoint_(ParseMonitorUrl(url)), period_(period) {
  if (period_.count() <= 0) throw std::invalid_argument("monitor period must be positive");
}

ResourceMonitor::~ResourceMonitor() { Stop(); }

std::optional<ResourceSnapshot> ResourceMonitor::Poll(std::string* error) {
  httplib::Client client(endpoint_.scheme_host_port);
  const auto timeout = std::max<std::chrono::milliseconds>(period_, std::chrono::seconds(2));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  const Timestamp wall = std::chrono::floor<Millis>(std::chrono::system_clock::now());
  auto res = client.Get(endpoint_.path);
  if (!res) {
    if (error) *error = httplib::to_string(res.error());
    return std::nullopt;
  }
  if (res->status != 200) {
    if (error) *error = "HTTP " + std::to_string(res->status);
    return std::nullopt;
  }
  try {
    return ParseSnapshot(res->body, wall);
  } catch (const ParseError& e) {
    if (error) *error = e.what();
    return std::nullopt;
  }
}

void ResourceMonitor::Start() {
  if (thread_.joinable()) return;
  const auto t0 = std::chrono::steady_clock::now();
  std::string error;
  auto first = Poll(&error);
  if (!first) {
    throw std::runtime_error("monitor endpoint " + endpoint_.scheme_host_port + endpoint_.path +
                             " unusable: " + error);
  }
  {
    std::lock_guard lock(mu_);
    stop_ = false;
    snapshots_.push_back(*first);
  }
  thread_ = std::thread([this, t0] { Loop(t0); });
}

void ResourceMonitor::Loop(std::chrono::steady_clock::time_point t0) {
  std::uint64_t k = 1;
  for (;;) {
    auto next = t0 + k * period_;
    {
      std::unique_lock lock(mu_);
      if (cv_.wait_until(lock, next, [this] { return stop_; })) return;
    }
    auto snap = Poll(nullptr);
    {
      std::lock_guard lock(mu_);
      if (stop_) return;
      if (snap) {
        snapshots_.push_back(*snap);
      } else {
        ++gaps_;
      }
    }
    const auto now = std::chrono::steady_clock::now();
    k = std::max<std::uint64_t>(k + 1, (now - t0) / period_ + 1);
  }
}

void ResourceMonitor::Stop() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::vector<ResourceSnapshot> ResourceMonitor::snapshots() const {
  std::lock_guard lock(mu_);
  return snapshots_;
}

}  // namespace scits
