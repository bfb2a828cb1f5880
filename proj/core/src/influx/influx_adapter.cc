#include "scits/influx/influx_adapter.h"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "scits/errors.h"
#include "scits/time_util.h"

namespace scits::influx {
namespace {

using nlohmann::json;

std::string FluxString(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string AggCall(AggFunc f) {
  switch (f) {
    case AggFunc::kAverage: return "mean()";
    case AggFunc::kStdDev: return "stddev(mode: \"sample\")";
    case AggFunc::kMin: return "min()";
    case AggFunc::kMax: return "max()";
  }
  throw std::logic_error("unknown aggregate");
}

std::string FloatLiteral(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific);
  return std::string(buf, ptr);
}

std::string SensorPredicate(const std::vector<SensorId>& ids) {
  std::string out = "(";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += " or ";
    out += "r.sensor_id == \"" + std::to_string(ids[i]) + "\"";
  }
  return out + ")";
}

std::string Source(const QuerySpec& spec, std::string_view bucket,
                   const std::vector<SensorId>& sensors) {
  return "from(bucket: " + FluxString(bucket) + ")\n  |> range(start: " + FormatUtc(spec.t_start) +
         ", stop: " + FormatUtc(spec.t_end) + ")\n  |> filter(fn: (r) => r._measurement == \"" +
         kMeasurement + "\" and r._field == \"value\" and " + SensorPredicate(sensors) + ")\n";
}

std::string BucketMap(const QuerySpec& spec) {
  const std::string w = std::to_string(spec.bucket_width.count() * 1000000LL);
  return "  |> map(fn: (r) => ({r with bucket: (int(v: r._time) / " + w + ") * " + w +
         " / 1000000}))\n";
}

std::uint64_t ToUInt(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw BackendError("bad integer '" + s + "' in Flux result", false);
  }
  return v;
}

std::int64_t ToInt(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw BackendError("bad integer '" + s + "' in Flux result", false);
  }
  return v;
}

std::optional<double> ToDouble(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw BackendError("bad float '" + s + "' in Flux result", false);
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

const std::string& Cell(const std::map<std::string, std::string>& row, const std::string& name) {
  auto it = row.find(name);
  if (it == row.end()) throw BackendError("Flux result lacks column " + name, false);
  return it->second;
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

void CheckStatus(const httplib::Result& res, const char* what) {
  if (!res) {
    throw BackendError(std::string(what) + ": " + httplib::to_string(res.error()), true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(std::string(what) + ": HTTP " + std::to_string(res->status) + " " +
                           res->body,
                       res->status >= 500);
  }
}

}  // namespace

std::string EncodeLineProtocol(std::span<const SensorRecord> records) {
  std::string out;
  out.reserve(records.size() * 48);
  char buf[64];
  for (const auto& r : records) {
    out += kMeasurement;
    out += ",sensor_id=";
    out += std::to_string(r.sensor_id);
    out += " value=";
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), r.value);
    out.append(buf, ptr);
    out += ' ';
    out += std::to_string(EpochMillis(r.timestamp));
    out += '\n';
  }
  return out;
}

std::string BuildFlux(const QuerySpec& spec, std::string_view bucket) {
  ValidateQuerySpec(spec);
  switch (spec.type) {
    case QueryType::kQ1:
      return Source(spec, bucket, spec.sensors) +
             "  |> group()\n  |> keep(columns: [\"_time\", \"sensor_id\", \"_value\"])\n";
    case QueryType::kQ2:
      return Source(spec, bucket, spec.sensors) + BucketMap(spec) +
             "  |> group(columns: [\"bucket\"])\n"
             "  |> reduce(identity: {mx: -1.0e308, mn: 1.0e308},\n"
             "      fn: (r, accumulator) => ({\n"
             "        mx: if r._value > accumulator.mx then r._value else accumulator.mx,\n"
             "        mn: if r._value < accumulator.mn then r._value else accumulator.mn}))\n"
             "  |> filter(fn: (r) => r.mn < " + FloatLiteral(spec.min_value) +
             " or r.mx > " + FloatLiteral(spec.max_value) +
             ")\n  |> group()\n  |> keep(columns: [\"bucket\", \"mx\", \"mn\"])\n";
    case QueryType::kQ3:
      return Source(spec, bucket, spec.sensors) + "  |> group()\n  |> " + AggCall(spec.agg) +
             "\n  |> keep(columns: [\"_value\"])\n";
    case QueryType::kQ4:
      return Source(spec, bucket, spec.sensors) + BucketMap(spec) +
             "  |> group(columns: [\"bucket\", \"sensor_id\"])\n  |> " + AggCall(spec.agg) +
             "\n  |> group()\n  |> keep(columns: [\"bucket\", \"sensor_id\", \"_value\"])\n";
    case QueryType::kQ5: {
      auto side = [&](const char* name, SensorId id) {
        return std::string(name) + " = " + Source(spec, bucket, {id}) + BucketMap(spec) +
               "  |> group(columns: [\"bucket\"])\n  |> " + AggCall(spec.agg) +
               "\n  |> group()\n  |> keep(columns: [\"bucket\", \"_value\"])\n";
      };
      return side("s1", spec.sensors[0]) + side("s2", spec.sensors[1]) +
             "join(tables: {a: s1, b: s2}, on: [\"bucket\"])\n"
             "  |> map(fn: (r) => ({bucket: r.bucket, diff: r._value_a - r._value_b}))\n";
    }
  }
  throw std::logic_error("unknown query type");
}

std::vector<std::map<std::string, std::string>> ParseFluxCsv(std::string_view body) {
  std::vector<std::map<std::string, std::string>> rows;
  std::vector<std::string> header;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    std::string_view line = body.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      header.clear();
      continue;
    }
    auto cells = SplitCsvLine(line);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) {
      if (!header[i].empty()) row[header[i]] = cells[i];
    }
    if (auto it = row.find("error"); it != row.end()) {
      throw BackendError("Flux error: " + it->second, false);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ResultSet DecodeFlux(QueryType type, std::string_view body) {
  ResultSet out;
  out.type = type;
  for (const auto& row : ParseFluxCsv(body)) {
    ResultRow r;
    switch (type) {
      case QueryType::kQ1:
        try {
          r.time = ParseUtc(Cell(row, "_time"));
        } catch (const std::invalid_argument& e) {
          throw BackendError(std::string("bad _time in Flux result: ") + e.what(), false);
        }
        r.sensor_id = ToUInt(Cell(row, "sensor_id"));
        r.value = ToDouble(Cell(row, "_value"));
        break;
      case QueryType::kQ2:
        r.time = FromEpochMillis(ToInt(Cell(row, "bucket")));
        r.value = ToDouble(Cell(row, "mx"));
        r.value2 = ToDouble(Cell(row, "mn"));
        break;
      case QueryType::kQ3:
        r.value = ToDouble(Cell(row, "_value"));
        break;
      case QueryType::kQ4:
        r.time = FromEpochMillis(ToInt(Cell(row, "bucket")));
        r.sensor_id = ToUInt(Cell(row, "sensor_id"));
        r.value = ToDouble(Cell(row, "_value"));
        break;
      case QueryType::kQ5:
        r.time = FromEpochMillis(ToInt(Cell(row, "bucket")));
        r.value = ToDouble(Cell(row, "diff"));
        break;
    }
    out.rows.push_back(r);
  }
  if (type == QueryType::kQ3 && out.rows.empty()) out.rows.push_back(ResultRow{});
  SortCanonical(out);
  return out;
}

InfluxAdapter::InfluxAdapter(InfluxParams params)
    : params_(std::move(params)),
      client_(std::make_unique<httplib::Client>(params_.host, params_.port)) {
  client_->set_connection_timeout(params_.timeout);
  client_->set_read_timeout(params_.timeout);
  client_->set_write_timeout(params_.timeout);
  client_->set_keep_alive(true);
  client_->set_default_headers({{"Authorization", "Token " + params_.token}});
}

InfluxAdapter::~InfluxAdapter() = default;

void InfluxAdapter::InitSchema(std::uint64_t) {
  auto orgs = client_->Get("/api/v2/orgs?org=" + httplib::detail::encode_query_param(
                                                      params_.organization));
  CheckStatus(orgs, "list organizations");
  std::string org_id;
  try {
    auto doc = json::parse(orgs->body);
    org_id = doc.at("orgs").at(0).at("id").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError("organization " + params_.organization + " not found: " + e.what(), false);
  }

  auto buckets = client_->Get("/api/v2/buckets?orgID=" + org_id +
                              "&name=" + httplib::detail::encode_query_param(params_.bucket));
  CheckStatus(buckets, "list buckets");
  try {
    const json listing = json::parse(buckets->body);
    for (const auto& b : listing.at("buckets")) {
      auto del = client_->Delete("/api/v2/buckets/" + b.at("id").get<std::string>());
      CheckStatus(del, "delete bucket");
    }
  } catch (const json::exception& e) {
    throw BackendError(std::string("unexpected bucket listing: ") + e.what(), false);
  }

  json create = {{"orgID", org_id}, {"name", params_.bucket}, {"retentionRules", json::array()}};
  auto res = client_->Post("/api/v2/buckets", create.dump(), "application/json");
  CheckStatus(res, "create bucket");
}

InsertReceipt InfluxAdapter::InsertBatch(std::span<const SensorRecord> batch) {
  if (batch.empty()) throw std::invalid_argument("insert_batch: empty batch");
  const std::string body = EncodeLineProtocol(batch);
  const std::string path = "/api/v2/write?org=" +
                           httplib::detail::encode_query_param(params_.organization) +
                           "&bucket=" + httplib::detail::encode_query_param(params_.bucket) +
                           "&precision=ms";
  auto start = std::chrono::steady_clock::now();
  auto res = client_->Post(path, body, "text/plain; charset=utf-8");
  CheckStatus(res, "write");
  auto elapsed = std::chrono::steady_clock::now() - start;
  return InsertReceipt{batch.size(), elapsed};
}

std::string InfluxAdapter::RunFlux(const std::string& flux) {
  json req = {{"query", flux},
              {"type", "flux"},
              {"dialect", {{"header", true}, {"annotations", json::array()}}}};
  const std::string path =
      "/api/v2/query?org=" + httplib::detail::encode_query_param(params_.organization);
  httplib::Headers headers = {{"Accept", "application/csv"}};
  auto res = client_->Post(path, headers, req.dump(), "application/json");
  CheckStatus(res, "query");
  return res->body;
}

QueryResult InfluxAdapter::ExecuteQuery(const QuerySpec& spec) {
  const std::string flux = BuildFlux(spec, params_.bucket);
  auto start = std::chrono::steady_clock::now();
  ResultSet rows = DecodeFlux(spec.type, RunFlux(flux));
  auto elapsed = std::chrono::steady_clock::now() - start;
  return QueryResult{std::move(rows), elapsed};
}

void InfluxAdapter::Ping() { CheckStatus(client_->Get("/ping"), "ping"); }

std::string InfluxAdapter::ServerVersion() {
  auto res = client_->Get("/health");
  CheckStatus(res, "health");
  try {
    return "InfluxDB " + json::parse(res->body).at("version").get<std::string>();
  } catch (const json::exception&) {
    return "InfluxDB (unknown version)";
  }
}

std::uint64_t InfluxAdapter::RowCount() {
  const std::string flux = "from(bucket: " + FluxString(params_.bucket) +
                           ")\n  |> range(start: 1970-01-01T00:00:00Z, stop: "
                           "2262-01-01T00:00:00Z)\n  |> filter(fn: (r) => r._measurement == \"" +
                           kMeasurement + "\")\n  |> group()\n  |> count()\n";
  auto rows = ParseFluxCsv(RunFlux(flux));
  if (rows.empty()) return 0;
  return ToUInt(Cell(rows.front(), "_value"));
}

}  // namespace scits::influx
