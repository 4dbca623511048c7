#pragma once

#include <atomic>
#include <cstdio>
#include <string>

namespace refgame {

inline std::atomic<bool>& warnings_enabled() {
  static std::atomic<bool> enabled{true};
  return enabled;
}

inline void warn(const std::string& msg) {
  if (warnings_enabled().load())
    std::fprintf(stderr, "[refgame] warning: %s\n", msg.c_str());
}

}  // namespace refgame
