#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace predepth {

// All randomness in the project flows through SplitMix64: a single 64-bit
// state advanced by a Weyl increment and scrambled by the murmur-style
// finalizer below. Chosen for its trivially portable specification, so a
// manifest seed reproduces byte-identical streams in any implementation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Per-purpose seed derivation: mix the base seed with a purpose tag and an
// index. The exact formula below is part of the manifest contract.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose,
                                 std::uint64_t index) {
  std::uint64_t h = mix64(base ^ fnv1a64(purpose));
  return mix64(h ^ (index + 0x9e3779b97f4a7c15ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform in [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0,n). Multiply-shift reduction; the slight modulo
  // bias of this scheme is < 2^-64 * n and irrelevant at our scales.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller. Two uniforms per draw; no cached second
  // value, so the stream position is a pure function of the call count.
  double next_gaussian() {
    double u1 = 1.0 - next_double();  // (0,1]
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Fisher-Yates shuffle.
  template <typename Seq>
  void shuffle(Seq& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      auto tmp = v[i - 1];
      v[i - 1] = v[j];
      v[j] = tmp;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace predepth
