#include <cstdlib>

#include "scits/clickhouse/clickhouse_adapter.h"
#include "scits/db_adapter.h"
#include "scits/influx/influx_adapter.h"
#include "scits/memory_adapter.h"
#include "scits/pg/postgres_adapter.h"

namespace scits {
namespace {

void Override(std::string& field, const char* env) {
  if (const char* v = std::getenv(env); v != nullptr && *v != '\0') field = v;
}

}  // namespace

Connection ResolveConnection(TargetDatabase db, Connection c) {
  switch (db) {
    case TargetDatabase::kPostgreSQL:
    case TargetDatabase::kTimescaleDB:
      if (c.port == 0) c.port = 5432;
      if (c.user.empty()) c.user = "postgres";
      if (c.database.empty()) c.database = "postgres";
      Override(c.user, "SCITS_PG_USER");
      Override(c.password, "SCITS_PG_PASSWORD");
      break;
    case TargetDatabase::kClickHouse:
      if (c.port == 0) c.port = 9000;
      if (c.user.empty()) c.user = "default";
      if (c.database.empty()) c.database = "default";
      Override(c.user, "SCITS_CH_USER");
      Override(c.password, "SCITS_CH_PASSWORD");
      break;
    case TargetDatabase::kInfluxDB:
      if (c.port == 0) c.port = 8086;
      if (c.database.empty()) c.database = "scits";
      Override(c.organization, "SCITS_INFLUX_ORG");
      Override(c.token, "SCITS_INFLUX_TOKEN");
      break;
    case TargetDatabase::kReference:
      break;
  }
  return c;
}

AdapterFactory MakeAdapterFactory(const WorkloadDefinition& def) {
  const Connection c = ResolveConnection(def.target_database, def.connection);
  switch (def.target_database) {
    case TargetDatabase::kPostgreSQL:
    case TargetDatabase::kTimescaleDB: {
      pg::PgParams p{c.host, c.port, c.user, c.password, c.database, def.query_timeout};
      auto flavor = def.target_database == TargetDatabase::kTimescaleDB ? pg::PgFlavor::kTimescaleDB
                                                                        : pg::PgFlavor::kPostgreSQL;
      return [p, flavor] { return std::make_unique<pg::PostgresAdapter>(p, flavor); };
    }
    case TargetDatabase::kClickHouse: {
      ch::ChParams p{c.host, c.port, c.user, c.password, c.database, def.query_timeout};
      return [p] { return std::make_unique<ch::ClickHouseAdapter>(p); };
    }
    case TargetDatabase::kInfluxDB: {
      influx::InfluxParams p{c.host, c.port, c.organization, c.token, c.database,
                             def.query_timeout};
      return [p] { return std::make_unique<influx::InfluxAdapter>(p); };
    }
    case TargetDatabase::kReference: {
      auto store = std::make_shared<MemoryStore>();
      return [store] { return std::make_unique<MemoryAdapter>(store); };
    }
  }
  throw std::logic_error("unknown target database");
}

}  // namespace scits
