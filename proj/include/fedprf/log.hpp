#pragma once

#include <cstdio>
#include <string>

namespace fedprf::log {

enum class Level { debug = 0, info = 1, warn = 2, quiet = 3 };

Level& threshold();

void emit(Level level, const std::string& message);

inline void warn(const std::string& message) { emit(Level::warn, message); }
inline void info(const std::string& message) { emit(Level::info, message); }
inline void debug(const std::string& message) { emit(Level::debug, message); }

}  // namespace fedprf::log
