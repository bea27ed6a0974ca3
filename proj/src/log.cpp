#include "texseek/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace texseek {

spdlog::logger& logger() {
  static const auto logger = [] {
    auto l = spdlog::stderr_logger_mt("texseek");
    l->set_pattern("texseek: %l: %v");
    const char* env = std::getenv("TEXSEEK_LOG");
    const std::string_view level = env ? env : "info";
    if (level == "error") {
      l->set_level(spdlog::level::err);
    } else if (level == "debug") {
      l->set_level(spdlog::level::debug);
    } else {
      l->set_level(spdlog::level::info);
    }
    return l;
  }();
  return *logger;
}

}  // namespace texseek
