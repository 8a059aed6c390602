#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace helly {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level is read once from HELLY_LOG ("info" or "debug"; anything else means
// errors only) so hot loops can gate on an integer compare.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("HELLY_LOG");
    if (env == nullptr) return LogLevel::error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

__attribute__((format(printf, 2, 3)))
inline void logf(LogLevel at, const char* fmt, ...) {
  if (static_cast<int>(at) > static_cast<int>(log_level())) return;
  std::va_list args;
  va_start(args, fmt);
  std::fputs(at == LogLevel::debug ? "[debug] " : "[info] ", stderr);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
  va_end(args);
}

}  // namespace helly
