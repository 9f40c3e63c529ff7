#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace lstmf {

// splitmix64 finalizer; used to derive independent stage seeds from the
// master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix_seed(master ^ mix_seed(h ^ mix_seed(index)));
}

// Seeded generator with platform-independent draws. std::mt19937_64 output
// is fixed by the standard; the distributions in <random> are not, so the
// helpers below derive values from raw words only.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n). Modulo bias is below 2^-40 for any n we use.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; one value per call keeps the draw sequence simple.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lstmf
