#pragma once

// Minimal stderr logger; level via MCF_LOG = error | warn | info | debug.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace mcf::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level threshold() {
  static const Level lvl = [] {
    const char* env = std::getenv("MCF_LOG");
    if (!env) return Level::info;
    if (!std::strcmp(env, "error")) return Level::error;
    if (!std::strcmp(env, "warn")) return Level::warn;
    if (!std::strcmp(env, "debug")) return Level::debug;
    return Level::info;
  }();
  return lvl;
}

inline void emit(Level lvl, const std::string& msg) {
  if (static_cast<int>(lvl) > static_cast<int>(threshold())) return;
  const char* tag = lvl == Level::error ? "error" : lvl == Level::warn ? "warn"
                    : lvl == Level::info ? "info" : "debug";
  std::fprintf(stderr, "[mcf][%s] %s\n", tag, msg.c_str());
}

inline void error(const std::string& m) { emit(Level::error, m); }
inline void warn(const std::string& m) { emit(Level::warn, m); }
inline void info(const std::string& m) { emit(Level::info, m); }
inline void debug(const std::string& m) { emit(Level::debug, m); }

}  // namespace mcf::log
