#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace nvpm::log {

enum class Level { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

inline std::atomic<Level>& threshold() {
  static std::atomic<Level> level{Level::Warn};
  return level;
}

inline void set_level(Level level) { threshold().store(level); }

inline void write(Level level, std::string_view tag, std::string_view msg) {
  if (static_cast<int>(level) > static_cast<int>(threshold().load())) return;
  static std::mutex mu;
  const std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[nvpm] " << tag << ": " << msg << '\n';
}

inline void warn(std::string_view msg) { write(Level::Warn, "warning", msg); }
inline void info(std::string_view msg) { write(Level::Info, "info", msg); }
inline void debug(std::string_view msg) { write(Level::Debug, "debug", msg); }

}  // namespace nvpm::log
