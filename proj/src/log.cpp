#include "fedprf/log.hpp"

namespace fedprf::log {

Level& threshold() {
    static Level level = Level::warn;
    return level;
}

void emit(Level level, const std::string& message) {
    if (level < threshold()) return;
    const char* tag = level == Level::warn ? "warn" : level == Level::info ? "info" : "debug";
    std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

}  // namespace fedprf::log
