#pragma once

#include <iostream>
#include <sstream>
#include <string_view>

// Minimal leveled logging to stderr. The level comes from HAKG_LOG
// (error, warn, info, debug); the default is warn.
namespace hakg::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level level();
void set_level(Level l);
Level parse_level(std::string_view name);  // unknown names map to kWarn

template <typename... Args>
void write(Level l, std::string_view tag, const Args&... args) {
  if (static_cast<int>(l) > static_cast<int>(level())) return;
  std::ostringstream os;
  os << "[hakg " << tag << "] ";
  (os << ... << args);
  os << '\n';
  std::cerr << os.str();
}

template <typename... Args>
void error(const Args&... args) { write(Level::kError, "error", args...); }
template <typename... Args>
void warn(const Args&... args) { write(Level::kWarn, "warn", args...); }
template <typename... Args>
void info(const Args&... args) { write(Level::kInfo, "info", args...); }
template <typename... Args>
void debug(const Args&... args) { write(Level::kDebug, "debug", args...); }

}  // namespace hakg::log
