#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace refgame {

// splitmix64 of (seed, stream): stable derivation of independent stream
// seeds from a master seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// All randomness in the simulator flows through explicitly passed Rng
// instances. A run is reproducible from its master seed alone; independent
// streams (init, data, sampling, ...) are derived with split().
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_mix_(seed) {}

  // Derives an independent stream. splitmix64 over (seed, stream id) so that
  // nearby seeds do not share state.
  Rng split(uint64_t stream) const {
    uint64_t x = seed_mix_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return Rng(x, /*tag=*/x);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Uniform integer in [0, n). n must be positive.
  int below(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
  }

  // Index sampled proportionally to probs (assumed to sum to ~1; the tail
  // absorbs rounding).
  int categorical(const double* probs, int n) {
    double u = uniform(0.0, 1.0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(
          std::uniform_int_distribution<uint64_t>(0, i - 1)(engine_));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  Rng(uint64_t seed, uint64_t tag) : engine_(seed), seed_mix_(tag) {}

  std::mt19937_64 engine_;
  uint64_t seed_mix_ = 0;
};

}  // namespace refgame
