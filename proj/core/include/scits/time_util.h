#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "scits/types.h"

namespace scits {

// Parses durations like "500ms", "1s", "30m", "1h", "1d" and compounds such as
// "1h30m". Fractional amounts ("1.5h") are accepted if they resolve to whole
// milliseconds. Throws std::invalid_argument.
Millis ParseDuration(std::string_view text);

// Inverse of ParseDuration: largest units first, e.g. 5400000 ms -> "1h30m".
// Zero formats as "0ms".
std::string FormatDuration(Millis d);

// ISO-8601 UTC instant: "2022-01-01T00:00:00Z", optional fractional seconds
// (truncated to ms), "Z" or "+00:00" suffix, or no suffix. Throws
// std::invalid_argument.
Timestamp ParseUtc(std::string_view text);

// "YYYY-MM-DDTHH:MM:SS.mmmZ"; the fraction is omitted when zero.
std::string FormatUtc(Timestamp t);

// Start of the epoch-aligned bucket of width `width` containing `t`.
// Floors toward negative infinity so pre-epoch instants align as well.
Timestamp FloorToBucket(Timestamp t, Millis width);

}  // namespace scits
