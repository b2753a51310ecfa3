#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace finflow {

// splitmix64 finalizer. Used for seed derivation so that parallel workers and
// named substreams never share state.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed plus key words
// (stream tag, trial index, ...). Order-sensitive.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> words) {
  std::uint64_t s = mix64(base);
  for (std::uint64_t w : words) s = mix64(s ^ mix64(w));
  return s;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Stream tags for the substreams consumed inside one episode. Market-side
// streams depend only on the market seed so every policy sees the same path.
enum Stream : std::uint64_t {
  kStreamFbm = 1,
  kStreamJump = 2,
  kStreamHawkes = 3,
  kStreamFill = 4,
  kStreamPolicy = 5,
  kStreamMarket = 6,
};

// Deterministic RNG with portable distributions (no libstdc++ distribution
// state), so a seed fully pins the sampled sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // (0, 1]
  double uniform_pos() { return 1.0 - uniform(); }

  // Standard normal via Box-Muller (cosine branch only; stateless).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace finflow
