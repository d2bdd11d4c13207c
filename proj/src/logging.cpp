#include "scb/logging.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>

namespace scb {

void configure_logging() {
  const char* env = std::getenv("SCB_LOG");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (env && *env) {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to off
    if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::warn;
  }
  spdlog::set_level(level);
  spdlog::set_pattern("[%l] %v");
}

}  // namespace scb
