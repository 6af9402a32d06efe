#include "sgphmc/log.hpp"

#include <atomic>
#include <iostream>

namespace sgphmc {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::kWarning)};
}

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(const std::string& message) {
  if (g_level >= static_cast<int>(LogLevel::kWarning)) std::cerr << "warning: " << message << '\n';
}

void log_info(const std::string& message) {
  if (g_level >= static_cast<int>(LogLevel::kInfo)) std::cerr << message << '\n';
}

}  // namespace sgphmc
