#pragma once

#include <memory>

namespace spdlog {
class logger;
}

namespace texseek {

/// stderr logger; level from TEXSEEK_LOG (error, info, debug), default info.
spdlog::logger& logger();

}  // namespace texseek
