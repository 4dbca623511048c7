#pragma once

#include <vector>

namespace refgame {

// Discrete message over a vocabulary of size V. Symbol 0 is the reserved
// EOS; anything after the first EOS is ignored everywhere, so `symbols`
// never stores past it.
struct Message {
  static constexpr int kEos = 0;

  std::vector<int> symbols;

  // Count of symbols before the first EOS.
  int effective_length() const {
    int n = 0;
    for (int s : symbols) {
      if (s == kEos) break;
      ++n;
    }
    return n;
  }

  // The prefix before the first EOS; the comparable content of the message.
  std::vector<int> effective_symbols() const {
    std::vector<int> out;
    for (int s : symbols) {
      if (s == kEos) break;
      out.push_back(s);
    }
    return out;
  }
};

}  // namespace refgame
