#include "hakg/log.hpp"

#include <atomic>
#include <cstdlib>

namespace hakg::log {

namespace {

Level from_env() {
  const char* env = std::getenv("HAKG_LOG");
  return env ? parse_level(env) : Level::kWarn;
}

std::atomic<int>& current() {
  static std::atomic<int> value{static_cast<int>(from_env())};
  return value;
}

}  // namespace

Level parse_level(std::string_view name) {
  if (name == "error") return Level::kError;
  if (name == "info") return Level::kInfo;
  if (name == "debug") return Level::kDebug;
  return Level::kWarn;
}

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level l) { current().store(static_cast<int>(l)); }

}  // namespace hakg::log
