#pragma once

#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace domkit::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline Level parse_level(std::string_view s) {
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    if (s == "warn" || s == "warning") return Level::warn;
    if (s == "error") return Level::error;
    if (s == "off" || s == "none") return Level::off;
    return Level::warn;
}

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {
struct State {
    std::mutex mutex;
    Level threshold;
    Sink sink;
    State() {
        const char* env = std::getenv("DOMKIT_LOG");
        threshold = env ? parse_level(env) : Level::warn;
    }
};
inline State& state() {
    static State s;
    return s;
}
}  // namespace detail

inline void set_level(Level level) {
    auto& s = detail::state();
    std::lock_guard lock(s.mutex);
    s.threshold = level;
}

/// Replace the stderr writer; pass an empty function to restore it.
inline void set_sink(Sink sink) {
    auto& s = detail::state();
    std::lock_guard lock(s.mutex);
    s.sink = std::move(sink);
}

inline void write(Level level, std::string_view msg) {
    auto& s = detail::state();
    std::lock_guard lock(s.mutex);
    if (level < s.threshold) return;
    if (s.sink) {
        s.sink(level, msg);
        return;
    }
    static constexpr const char* names[] = {"debug", "info", "warn", "error", "off"};
    std::cerr << "[domkit " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void debug(std::string_view msg) { write(Level::debug, msg); }

}  // namespace domkit::log
