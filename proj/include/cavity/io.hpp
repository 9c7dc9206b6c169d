#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <string>
#include <vector>

#include "cavity/config.hpp"
#include "cavity/version.hpp"

namespace cavity {

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// '#'-prefixed provenance block at the top of every CSV output: tool
// version, optional timestamp, and the full resolved configuration.
inline void write_csv_header(std::ostream& os, const RunConfig& cfg,
                             const std::string& subcommand,
                             const std::vector<std::string>& extra = {}) {
  os << "# cavity " << version << " " << subcommand << "\n";
  if (!cfg.no_timestamp) os << "# timestamp = " << iso_timestamp() << "\n";
  for (const auto& [key, value] : cfg.provenance())
    os << "# " << key << " = " << value << "\n";
  for (const auto& line : extra) os << "# " << line << "\n";
}

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace cavity
