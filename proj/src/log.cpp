#include "cnnabs/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace cnnabs::log {

std::shared_ptr<spdlog::logger> logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("cnnabs");
    l->set_pattern("[%l] %v");
    const char* level = std::getenv("CNNABS_LOG");
    l->set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
    return l;
  }();
  return instance;
}

}  // namespace cnnabs::log
