#include "scits/workload_config.h"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "scits/errors.h"
#include "scits/time_util.h"

namespace scits {
namespace {

namespace pt = boost::property_tree;

constexpr std::string_view kRootElement = "Workload";
constexpr std::string_view kSchemaVersion = "1";

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool IsMetaKey(const std::string& key) { return key == "<xmlattr>" || key == "<xmlcomment>"; }

template <typename Int>
Int ParseUnsigned(const std::string& element, std::string_view text) {
  text = Trim(text);
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("<" + element + ">: expected a non-negative integer, got '" +
                     std::string(text) + "'");
  }
  return value;
}

double ParseFloat(const std::string& element, std::string_view text) {
  text = Trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    throw ParseError("<" + element + ">: expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

bool ParseBool(const std::string& element, std::string_view text) {
  text = Trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ParseError("<" + element + ">: expected true or false, got '" + std::string(text) + "'");
}

Millis ParseDurationElement(const std::string& element, std::string_view text) {
  try {
    return ParseDuration(text);
  } catch (const std::invalid_argument& e) {
    throw ParseError("<" + element + ">: " + e.what());
  }
}

// Bare numbers are hours (fractions allowed); anything else is a duration string.
Millis ParseAggregationInterval(const std::string& element, std::string_view text) {
  text = Trim(text);
  bool bare = !text.empty() && std::all_of(text.begin(), text.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  });
  if (bare) return ParseDurationElement(element, std::string(text) + "h");
  return ParseDurationElement(element, text);
}

template <typename Enum>
Enum ParseEnum(const std::string& element, std::string_view text,
               std::optional<Enum> (*parser)(std::string_view)) {
  auto value = parser(Trim(text));
  if (!value) {
    throw ParseError("<" + element + ">: unknown value '" + std::string(Trim(text)) + "'");
  }
  return *value;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename Int>
std::string JoinList(const std::vector<Int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

using Handler = std::function<void(const std::string& element, const pt::ptree& node)>;

// Dispatches each child of `parent` to its handler. Unknown and repeated
// elements are rejected.
void DispatchChildren(const std::string& parent_name, const pt::ptree& parent,
                      const std::map<std::string, Handler>& handlers) {
  std::set<std::string> seen;
  for (const auto& [key, child] : parent) {
    if (IsMetaKey(key)) continue;
    auto it = handlers.find(key);
    if (it == handlers.end()) {
      throw ParseError("unknown element <" + key + "> inside <" + parent_name + ">");
    }
    if (!seen.insert(key).second) {
      throw ParseError("duplicate element <" + key + "> inside <" + parent_name + ">");
    }
    it->second(key, child);
  }
}

Connection ParseConnection(const pt::ptree& node) {
  Connection c;
  auto text = [](const pt::ptree& n) { return std::string(Trim(n.data())); };
  std::map<std::string, Handler> handlers{
      {"Host", [&](const std::string&, const pt::ptree& n) { c.host = text(n); }},
      {"Port",
       [&](const std::string& e, const pt::ptree& n) {
         c.port = static_cast<int>(ParseUnsigned<std::uint16_t>(e, n.data()));
       }},
      {"User", [&](const std::string&, const pt::ptree& n) { c.user = text(n); }},
      {"Password", [&](const std::string&, const pt::ptree& n) { c.password = n.data(); }},
      {"Database", [&](const std::string&, const pt::ptree& n) { c.database = text(n); }},
      {"Organization", [&](const std::string&, const pt::ptree& n) { c.organization = text(n); }},
      {"Token", [&](const std::string&, const pt::ptree& n) { c.token = text(n); }},
  };
  DispatchChildren("Connection", node, handlers);
  return c;
}

}  // namespace

StopCondition ParseStopCondition(std::string_view text) {
  text = Trim(text);
  auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("<StopCondition>: expected kind:value, got '" + std::string(text) + "'");
  }
  std::string_view kind = Trim(text.substr(0, colon));
  std::string_view value = Trim(text.substr(colon + 1));
  const std::string element = "StopCondition";
  if (kind == "batches") return BatchesPerClient{ParseUnsigned<std::uint64_t>(element, value)};
  if (kind == "records") return TotalRecords{ParseUnsigned<std::uint64_t>(element, value)};
  if (kind == "duration") return StopAfter{ParseDurationElement(element, value)};
  throw ParseError("<StopCondition>: unknown kind '" + std::string(kind) + "'");
}

std::string FormatStopCondition(const StopCondition& stop) {
  struct Visitor {
    std::string operator()(const BatchesPerClient& s) const {
      return "batches:" + std::to_string(s.batches);
    }
    std::string operator()(const TotalRecords& s) const {
      return "records:" + std::to_string(s.records);
    }
    std::string operator()(const StopAfter& s) const {
      return "duration:" + FormatDuration(s.duration);
    }
  };
  return std::visit(Visitor{}, stop);
}

std::vector<std::uint64_t> ParseIntegerList(std::string_view text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = Trim(text.substr(pos, comma - pos));
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw std::invalid_argument("bad list item '" + std::string(item) + "'");
    }
    out.push_back(value);
    pos = comma + 1;
  }
  return out;
}

WorkloadDefinition ParseWorkload(std::string_view document) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(document)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed workload document: " + e.message() + " (line " +
                     std::to_string(e.line()) + ")");
  }

  const pt::ptree* root = nullptr;
  for (const auto& [key, child] : tree) {
    if (IsMetaKey(key)) continue;
    if (key != kRootElement || root != nullptr) {
      throw ParseError("expected a single <Workload> root element, found <" + key + ">");
    }
    root = &child;
  }
  if (root == nullptr) throw ParseError("missing <Workload> root element");

  auto version = root->get_optional<std::string>("<xmlattr>.version");
  if (!version) throw ParseError("<Workload>: missing version attribute");
  if (*version != kSchemaVersion) {
    throw ParseError("<Workload>: unsupported schema version '" + *version + "'");
  }

  WorkloadDefinition def;
  std::set<std::string> present;
  auto list = [](const std::string& e, const pt::ptree& n) {
    try {
      return ParseIntegerList(n.data());
    } catch (const std::invalid_argument& ex) {
      throw ParseError("<" + e + ">: " + ex.what());
    }
  };

  std::map<std::string, Handler> handlers{
      {"TargetDatabase",
       [&](const std::string& e, const pt::ptree& n) {
         def.target_database = ParseEnum<TargetDatabase>(e, n.data(), &ParseTargetDatabase);
       }},
      {"Connection",
       [&](const std::string&, const pt::ptree& n) { def.connection = ParseConnection(n); }},
      {"WorkloadKind",
       [&](const std::string& e, const pt::ptree& n) {
         def.workload_kind = ParseEnum<WorkloadKind>(e, n.data(), &ParseWorkloadKind);
       }},
      {"DaySpan",
       [&](const std::string& e, const pt::ptree& n) {
         def.day_span = ParseUnsigned<std::int64_t>(e, n.data());
       }},
      {"StartTime",
       [&](const std::string& e, const pt::ptree& n) {
         try {
           def.start_time = ParseUtc(n.data());
         } catch (const std::invalid_argument& ex) {
           throw ParseError("<" + e + ">: " + ex.what());
         }
       }},
      {"SensorNumber",
       [&](const std::string& e, const pt::ptree& n) {
         def.sensor_number = ParseUnsigned<std::uint64_t>(e, n.data());
       }},
      {"TimestampGranularity",
       [&](const std::string& e, const pt::ptree& n) {
         def.timestamp_granularity = ParseDurationElement(e, n.data());
       }},
      {"Seed",
       [&](const std::string& e, const pt::ptree& n) {
         def.seed = ParseUnsigned<std::uint64_t>(e, n.data());
       }},
      {"BatchSizeOptions",
       [&](const std::string& e, const pt::ptree& n) { def.batch_size_options = list(e, n); }},
      {"ClientNumberOptions",
       [&](const std::string& e, const pt::ptree& n) {
         def.client_number_options.clear();
         for (auto v : list(e, n)) {
           if (v > UINT32_MAX) throw ParseError("<" + e + ">: value out of range");
           def.client_number_options.push_back(static_cast<std::uint32_t>(v));
         }
       }},
      {"StopCondition",
       [&](const std::string&, const pt::ptree& n) { def.stop = ParseStopCondition(n.data()); }},
      {"WarmupBatches",
       [&](const std::string& e, const pt::ptree& n) {
         def.warmup_batches = ParseUnsigned<std::uint64_t>(e, n.data());
       }},
      {"MaxConsecutiveFailures",
       [&](const std::string& e, const pt::ptree& n) {
         def.max_consecutive_failures = ParseUnsigned<std::uint32_t>(e, n.data());
       }},
      {"ResetBetweenRuns",
       [&](const std::string& e, const pt::ptree& n) {
         def.reset_between_runs = ParseBool(e, n.data());
       }},
      {"QueryType",
       [&](const std::string& e, const pt::ptree& n) {
         def.query_type = ParseEnum<QueryType>(e, n.data(), &ParseQueryType);
       }},
      {"TestRetries",
       [&](const std::string& e, const pt::ptree& n) {
         def.test_retries = ParseUnsigned<std::uint32_t>(e, n.data());
       }},
      {"DurationMinutes",
       [&](const std::string& e, const pt::ptree& n) {
         def.duration_minutes = ParseUnsigned<std::uint32_t>(e, n.data());
       }},
      {"AggregationIntervalHour",
       [&](const std::string& e, const pt::ptree& n) {
         def.aggregation_interval = ParseAggregationInterval(e, n.data());
       }},
      {"AggregationFunction",
       [&](const std::string& e, const pt::ptree& n) {
         def.agg_func = ParseEnum<AggFunc>(e, n.data(), &ParseAggFunc);
       }},
      {"SensorsFilter",
       [&](const std::string& e, const pt::ptree& n) {
         def.sensors_filter =
             Trim(n.data()).empty() ? std::vector<SensorId>{} : list(e, n);
       }},
      {"MinValue",
       [&](const std::string& e, const pt::ptree& n) { def.min_value = ParseFloat(e, n.data()); }},
      {"MaxValue",
       [&](const std::string& e, const pt::ptree& n) { def.max_value = ParseFloat(e, n.data()); }},
      {"QueryTimeout",
       [&](const std::string& e, const pt::ptree& n) {
         def.query_timeout = ParseDurationElement(e, n.data());
       }},
      {"ResetHook", [&](const std::string&, const pt::ptree& n) { def.reset_hook = n.data(); }},
      {"Monitor",
       [&](const std::string&, const pt::ptree& n) {
         std::map<std::string, Handler> monitor{
             {"Endpoint",
              [&](const std::string&, const pt::ptree& m) {
                def.monitor_endpoint = std::string(Trim(m.data()));
              }},
             {"Period",
              [&](const std::string& e, const pt::ptree& m) {
                def.monitor_period = ParseDurationElement(e, m.data());
              }},
         };
         DispatchChildren("Monitor", n, monitor);
       }},
  };
  for (auto& [name, handler] : handlers) {
    handler = [&present, inner = std::move(handler)](const std::string& e, const pt::ptree& n) {
      present.insert(e);
      inner(e, n);
    };
  }
  DispatchChildren(std::string(kRootElement), *root, handlers);

  auto require = [&](const char* element) {
    if (!present.count(element)) {
      throw ParseError("missing required element <" + std::string(element) + ">");
    }
  };
  for (const char* e : {"TargetDatabase", "WorkloadKind", "DaySpan", "StartTime", "SensorNumber"}) {
    require(e);
  }
  if (def.workload_kind == WorkloadKind::kIngestion) {
    require("BatchSizeOptions");
    require("ClientNumberOptions");
  } else {
    for (const char* e : {"QueryType", "TestRetries", "DurationMinutes", "SensorsFilter"}) {
      require(e);
    }
    if (def.query_type == QueryType::kQ2) {
      require("MinValue");
      require("MaxValue");
    }
  }

  ValidateWorkload(def);
  return def;
}

WorkloadDefinition ParseWorkloadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open workload definition '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseWorkload(buf.str());
}

void ValidateWorkload(const WorkloadDefinition& def) {
  if (def.day_span < 1) throw ValidationError("DaySpan", "must be >= 1 day");
  if (def.sensor_number < 1) throw ValidationError("SensorNumber", "must be >= 1");
  if (def.timestamp_granularity <= Millis{0}) {
    throw ValidationError("TimestampGranularity", "must be positive");
  }
  if (def.monitor_period <= Millis{0}) throw ValidationError("Monitor.Period", "must be positive");
  if (def.target_database != TargetDatabase::kReference && def.connection.host.empty()) {
    throw ValidationError("Connection.Host", "required for " +
                                                 std::string(ToString(def.target_database)));
  }

  if (def.workload_kind == WorkloadKind::kIngestion) {
    if (def.batch_size_options.empty()) {
      throw ValidationError("BatchSizeOptions", "at least one batch size is required");
    }
    for (auto b : def.batch_size_options) {
      if (b < 1) throw ValidationError("BatchSizeOptions", "every batch size must be >= 1");
    }
    if (def.client_number_options.empty()) {
      throw ValidationError("ClientNumberOptions", "at least one client count is required");
    }
    for (auto c : def.client_number_options) {
      if (c < 1) throw ValidationError("ClientNumberOptions", "every client count must be >= 1");
    }
    bool stop_ok = std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, BatchesPerClient>) return s.batches > 0;
          if constexpr (std::is_same_v<T, TotalRecords>) return s.records > 0;
          if constexpr (std::is_same_v<T, StopAfter>) return s.duration > Millis{0};
        },
        def.stop);
    if (!stop_ok) throw ValidationError("StopCondition", "must be positive");
    return;
  }

  if (!def.query_type) throw ValidationError("QueryType", "required for query workloads");
  if (def.test_retries < 1) throw ValidationError("TestRetries", "must be >= 1");
  if (def.duration_minutes < 1) throw ValidationError("DurationMinutes", "must be >= 1");
  if (static_cast<std::int64_t>(def.duration_minutes) > def.day_span * 24 * 60) {
    throw ValidationError("DurationMinutes", "queried interval must fit inside DaySpan");
  }
  if (def.aggregation_interval <= Millis{0}) {
    throw ValidationError("AggregationIntervalHour", "must be positive");
  }
  if (def.query_timeout <= Millis{0}) throw ValidationError("QueryTimeout", "must be positive");
  if (def.sensors_filter.empty()) {
    throw ValidationError("SensorsFilter", std::string(ToString(*def.query_type)) +
                                               " requires at least one sensor");
  }
  for (auto id : def.sensors_filter) {
    if (id >= def.sensor_number) {
      throw ValidationError("SensorsFilter", "sensor id " + std::to_string(id) +
                                                 " is outside [0, SensorNumber)");
    }
  }
  if (*def.query_type == QueryType::kQ2) {
    if (def.sensors_filter.size() != 1) {
      throw ValidationError("SensorsFilter", "Q2 queries exactly one sensor");
    }
    if (!def.min_value || !def.max_value) {
      throw ValidationError("MinValue", "Q2 requires MinValue and MaxValue");
    }
    if (!(*def.min_value < *def.max_value)) {
      throw ValidationError("MinValue", "must be strictly less than MaxValue");
    }
  }
  if (*def.query_type == QueryType::kQ5 && def.sensors_filter.size() != 2) {
    throw ValidationError("SensorsFilter", "Q5 compares exactly two sensors");
  }
}

std::string SerializeWorkload(const WorkloadDefinition& def) {
  pt::ptree root;
  root.put("<xmlattr>.version", std::string(kSchemaVersion));
  auto add = [&](const std::string& key, const std::string& value) { root.add(key, value); };

  add("TargetDatabase", std::string(ToString(def.target_database)));
  const Connection& c = def.connection;
  if (c != Connection{}) {
    pt::ptree conn;
    if (!c.host.empty()) conn.add("Host", c.host);
    if (c.port != 0) conn.add("Port", std::to_string(c.port));
    if (!c.user.empty()) conn.add("User", c.user);
    if (!c.password.empty()) conn.add("Password", c.password);
    if (!c.database.empty()) conn.add("Database", c.database);
    if (!c.organization.empty()) conn.add("Organization", c.organization);
    if (!c.token.empty()) conn.add("Token", c.token);
    root.add_child("Connection", conn);
  }
  add("WorkloadKind", std::string(ToString(def.workload_kind)));
  add("DaySpan", std::to_string(def.day_span));
  add("StartTime", FormatUtc(def.start_time));
  add("SensorNumber", std::to_string(def.sensor_number));
  add("TimestampGranularity", FormatDuration(def.timestamp_granularity));
  add("Seed", std::to_string(def.seed));

  if (!def.batch_size_options.empty()) add("BatchSizeOptions", JoinList(def.batch_size_options));
  if (!def.client_number_options.empty()) {
    add("ClientNumberOptions", JoinList(def.client_number_options));
  }
  add("StopCondition", FormatStopCondition(def.stop));
  add("WarmupBatches", std::to_string(def.warmup_batches));
  add("MaxConsecutiveFailures", std::to_string(def.max_consecutive_failures));
  add("ResetBetweenRuns", def.reset_between_runs ? "true" : "false");

  if (def.query_type) add("QueryType", std::string(ToString(*def.query_type)));
  add("TestRetries", std::to_string(def.test_retries));
  add("DurationMinutes", std::to_string(def.duration_minutes));
  add("AggregationIntervalHour", FormatDuration(def.aggregation_interval));
  add("AggregationFunction", std::string(ToString(def.agg_func)));
  if (!def.sensors_filter.empty()) add("SensorsFilter", JoinList(def.sensors_filter));
  if (def.min_value) add("MinValue", FormatDouble(*def.min_value));
  if (def.max_value) add("MaxValue", FormatDouble(*def.max_value));
  add("QueryTimeout", FormatDuration(def.query_timeout));

  if (!def.reset_hook.empty()) add("ResetHook", def.reset_hook);
  pt::ptree monitor;
  if (!def.monitor_endpoint.empty()) monitor.add("Endpoint", def.monitor_endpoint);
  monitor.add("Period", FormatDuration(def.monitor_period));
  root.add_child("Monitor", monitor);

  pt::ptree doc;
  doc.add_child(std::string(kRootElement), root);
  std::ostringstream out;
  pt::write_xml(out, doc, pt::xml_writer_make_settings<std::string>(' ', 2));
  return out.str();
}

std::vector<RunPlan> ExpandRuns(const WorkloadDefinition& def) {
  std::vector<RunPlan> plans;
  if (def.workload_kind == WorkloadKind::kQuery) {
    plans.push_back(RunPlan{0, WorkloadKind::kQuery, 0, 1, def});
    return plans;
  }
  std::uint32_t ordinal = 0;
  for (auto batch : def.batch_size_options) {
    for (auto clients : def.client_number_options) {
      plans.push_back(RunPlan{ordinal++, WorkloadKind::kIngestion, batch, clients, def});
    }
  }
  return plans;
}

std::string DescribeRunPlan(const RunPlan& plan) {
  const WorkloadDefinition& d = plan.definition;
  std::ostringstream out;
  out << "run " << plan.ordinal << ": " << ToString(d.target_database) << ' '
      << ToString(plan.workload_kind);
  if (plan.workload_kind == WorkloadKind::kIngestion) {
    out << " batch_size=" << plan.batch_size << " clients=" << plan.client_count
        << " sensors=" << d.sensor_number << " stop=" << FormatStopCondition(d.stop);
  } else {
    out << ' ' << ToString(*d.query_type) << " retries=" << d.test_retries
        << " duration=" << d.duration_minutes << "min sensors=" << JoinList(d.sensors_filter);
    if (*d.query_type != QueryType::kQ1) {
      out << " interval=" << FormatDuration(d.aggregation_interval);
    }
    if (*d.query_type == QueryType::kQ3 || *d.query_type == QueryType::kQ4 ||
        *d.query_type == QueryType::kQ5) {
      out << " agg=" << ToString(d.agg_func);
    }
    if (*d.query_type == QueryType::kQ2) {
      out << " range=[" << FormatDouble(*d.min_value) << ", " << FormatDouble(*d.max_value) << ']';
    }
  }
  out << " seed=" << d.seed;
  return out.str();
}

}  // namespace scits
