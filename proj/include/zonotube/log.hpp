#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace zonotube {

/// Shared stderr logger. Level comes from ZONOTUBE_LOG
/// (trace|debug|info|warn|error|off); default warn.
spdlog::logger& log();

}  // namespace zonotube
