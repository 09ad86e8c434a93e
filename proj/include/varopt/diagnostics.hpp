#pragma once

#include <functional>
#include <string>

namespace varopt {

using WarningHandler = std::function<void(const std::string&)>;

/// Replaces the process-wide warning sink (stderr by default) and returns
/// the previous one. Not thread-safe; install handlers at startup.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace varopt
