#pragma once

#include <iostream>
#include <string>

namespace neuroembed {

enum class LogLevel { quiet = 0, warn = 1, info = 2 };

inline LogLevel& log_level() {
    static LogLevel level = LogLevel::warn;
    return level;
}

inline void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::warn) std::cerr << "warning: " << msg << '\n';
}

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << msg << '\n';
}

} // namespace neuroembed
