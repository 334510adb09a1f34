#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace twodsys::cli {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Level from TWODSYS_LOG (error|warn|info|debug); warn when unset.
inline LogLevel log_level_from_env() {
  const char* raw = std::getenv("TWODSYS_LOG");
  const std::string_view v = raw ? raw : "";
  if (v == "error") return LogLevel::error;
  if (v == "info") return LogLevel::info;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::warn;
}

class Logger {
 public:
  explicit Logger(std::ostream& sink, LogLevel level = log_level_from_env())
      : sink_(sink), level_(level) {}

  void log(LogLevel level, const std::string& msg) const {
    static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
    if (level <= level_) sink_ << "twodsys [" << kNames[static_cast<int>(level)] << "] " << msg << '\n';
  }
  void error(const std::string& msg) const { log(LogLevel::error, msg); }
  void warn(const std::string& msg) const { log(LogLevel::warn, msg); }
  void info(const std::string& msg) const { log(LogLevel::info, msg); }
  void debug(const std::string& msg) const { log(LogLevel::debug, msg); }

 private:
  std::ostream& sink_;
  LogLevel level_;
};

}  // namespace twodsys::cli
