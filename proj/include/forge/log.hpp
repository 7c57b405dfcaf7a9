#pragma once

#include <fmt/core.h>

#include <atomic>
#include <cstdio>
#include <string_view>

// Minimal stderr logger. Data goes to files/stdout, diagnostics only here.
namespace forge::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

inline std::atomic<Level>& threshold() {
  static std::atomic<Level> level{Level::Warn};
  return level;
}
inline void set_level(Level level) { threshold().store(level); }

template <typename... Args>
void emit(Level level, std::string_view tag, fmt::format_string<Args...> f, Args&&... args) {
  if (level < threshold().load(std::memory_order_relaxed)) return;
  std::string line = fmt::format("[forge {}] ", tag);
  line += fmt::format(f, std::forward<Args>(args)...);
  line += '\n';
  std::fwrite(line.data(), 1, line.size(), stderr);
}

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  emit(Level::Debug, "debug", f, std::forward<Args>(args)...);
}
template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  emit(Level::Info, "info", f, std::forward<Args>(args)...);
}
template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  emit(Level::Warn, "warn", f, std::forward<Args>(args)...);
}
template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  emit(Level::Error, "error", f, std::forward<Args>(args)...);
}

}  // namespace forge::log
