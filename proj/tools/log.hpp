#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace kocl::cli {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity from KOCL_LOG (error, warn, info, debug). Default: warn.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("KOCL_LOG");
    const std::string_view v = env ? env : "";
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log(LogLevel level, const std::string& msg) {
  static std::mutex mu;
  if (level > log_level()) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[kocl " << kNames[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace kocl::cli
