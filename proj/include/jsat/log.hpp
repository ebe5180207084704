#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace jsat {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// Level comes from JSAT_LOG_LEVEL (quiet|info|debug), default info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("JSAT_LOG_LEVEL");
    if (env == nullptr) return LogLevel::Info;
    const std::string v(env);
    if (v == "quiet") return LogLevel::Quiet;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "info: " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "debug: " << msg << "\n";
}

}  // namespace jsat
