#include "scits/types.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace scits {
namespace {

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename E, std::size_t N>
std::optional<E> Lookup(const std::array<std::pair<std::string_view, E>, N>& table,
                        std::string_view s) {
  for (const auto& [name, value] : table) {
    if (EqualsIgnoreCase(name, s)) return value;
  }
  return std::nullopt;
}

constexpr std::array<std::pair<std::string_view, TargetDatabase>, 5> kDatabases{{
    {"ClickHouse", TargetDatabase::kClickHouse},
    {"InfluxDB", TargetDatabase::kInfluxDB},
    {"TimescaleDB", TargetDatabase::kTimescaleDB},
    {"PostgreSQL", TargetDatabase::kPostgreSQL},
    {"Reference", TargetDatabase::kReference},
}};

constexpr std::array<std::pair<std::string_view, WorkloadKind>, 2> kKinds{{
    {"Ingestion", WorkloadKind::kIngestion},
    {"Query", WorkloadKind::kQuery},
}};

constexpr std::array<std::pair<std::string_view, QueryType>, 5> kQueries{{
    {"Q1", QueryType::kQ1},
    {"Q2", QueryType::kQ2},
    {"Q3", QueryType::kQ3},
    {"Q4", QueryType::kQ4},
    {"Q5", QueryType::kQ5},
}};

constexpr std::array<std::pair<std::string_view, AggFunc>, 4> kAggs{{
    {"Average", AggFunc::kAverage},
    {"StdDev", AggFunc::kStdDev},
    {"Min", AggFunc::kMin},
    {"Max", AggFunc::kMax},
}};

constexpr std::array<std::pair<std::string_view, CompFunc>, 1> kComps{{
    {"Subtract", CompFunc::kSubtract},
}};

template <typename E, std::size_t N>
std::string_view NameOf(const std::array<std::pair<std::string_view, E>, N>& table, E v) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

}  // namespace

std::string_view ToString(TargetDatabase db) { return NameOf(kDatabases, db); }
std::string_view ToString(WorkloadKind kind) { return NameOf(kKinds, kind); }
std::string_view ToString(QueryType q) { return NameOf(kQueries, q); }
std::string_view ToString(AggFunc f) { return NameOf(kAggs, f); }
std::string_view ToString(CompFunc f) { return NameOf(kComps, f); }

std::optional<TargetDatabase> ParseTargetDatabase(std::string_view s) {
  return Lookup(kDatabases, s);
}
std::optional<WorkloadKind> ParseWorkloadKind(std::string_view s) { return Lookup(kKinds, s); }
std::optional<QueryType> ParseQueryType(std::string_view s) { return Lookup(kQueries, s); }
std::optional<AggFunc> ParseAggFunc(std::string_view s) { return Lookup(kAggs, s); }
std::optional<CompFunc> ParseCompFunc(std::string_view s) { return Lookup(kComps, s); }

}  // namespace scits
