#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace das {

// Deterministic PRNG used everywhere randomness is needed. One 64-bit master
// seed expands into named per-purpose streams ("init", "shifts", "noise"),
// and each stream forks per-index substreams so draws are order-independent
// across views and steps. The exact sequence below is part of the on-disk
// reproducibility contract; do not change constants or draw order.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1]; never 0 so log() below is safe.
  double next_unit() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi], inclusive.
  int64_t next_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(next() % span);
  }

  // Standard normal via Box-Muller; draws come in (cos, sin) pairs and the
  // second of each pair is cached.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  bool has_spare_ = false;
  double spare_ = 0.0;
};

constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// One splitmix round of a keyed combination; used for stream/substream
// derivation.
inline uint64_t mix64(uint64_t a, uint64_t b) {
  SplitMix64 g(a + 0x9E3779B97F4A7C15ull * (b + 1));
  return g.next();
}

inline uint64_t derive_stream(uint64_t seed, std::string_view purpose) {
  return mix64(seed, fnv1a64(purpose));
}

inline uint64_t derive_index(uint64_t stream, uint64_t index) {
  return mix64(stream, index);
}

}  // namespace das
