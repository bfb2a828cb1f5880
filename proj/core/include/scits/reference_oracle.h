#pragma once

#include <span>

#include "scits/query.h"
#include "scits/types.h"

namespace scits {

// Brute-force evaluation of Q1-Q5 over an in-memory record set.
//
// Every record is visited once per query; matching values are grouped by
// (bucket, sensor) in ordered maps and aggregated with the textbook formulas.
// This is the correctness baseline the adapters are checked against, so it
// deliberately shares no code with any adapter's query path.
ResultSet ReferenceEvaluate(std::span<const SensorRecord> data, const QuerySpec& spec);

}  // namespace scits
