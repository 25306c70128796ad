#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace cnnabs::log {

// Shared logger writing to stderr. The level comes from the CNNABS_LOG
// environment variable (trace, debug, info, warn, error, off); default warn.
std::shared_ptr<spdlog::logger> logger();

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  logger()->debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  logger()->info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
  logger()->warn(fmt, std::forward<Args>(args)...);
}

}  // namespace cnnabs::log
