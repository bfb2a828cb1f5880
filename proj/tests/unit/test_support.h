#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scits/time_util.h"
#include "scits/types.h"

namespace scits::testing {

inline std::string FixturePath(const std::string& rel) { return std::string(SCITS_FIXTURE_DIR) + "/" + rel; }

inline std::string ReadFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("missing file " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Lines of "iso-time,id,value"; '#' lines are comments.
inline std::vector<SensorRecord> LoadRecords(const std::string& rel) {
  std::istringstream in(ReadFile(FixturePath(rel)));
  std::vector<SensorRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    out.push_back(SensorRecord{ParseUtc(line.substr(0, c1)),
                               std::stoull(line.substr(c1 + 1, c2 - c1 - 1)),
                               std::stod(line.substr(c2 + 1))});
  }
  return out;
}

}  // namespace scits::testing
