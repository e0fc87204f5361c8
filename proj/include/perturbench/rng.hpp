#ifndef PERTURBENCH_RNG_HPP
#define PERTURBENCH_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace perturbench {

// 64-bit FNV-1a. Used for config fingerprints and seed derivation.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic random source. Every draw is derived from the mt19937_64
// output stream with explicit arithmetic, so sequences are reproducible
// across standard libraries and platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t raw() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1]
  double uniform_positive() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  // unit-rate exponential
  double exponential() { return -std::log(uniform_positive()); }

  // standard normal, Box-Muller (no spare caching)
  double normal() {
    double u1 = uniform_positive();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // uniform integer in [0, n), rejection-sampled to avoid modulo bias
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Independent stream derived from this generator's construction seed and a
  // tag. Children are stable regardless of how many draws the parent made.
  Rng child(std::string_view tag) const {
    std::uint64_t h = fnv1a64(tag, seed_ ^ 0x9e3779b97f4a7c15ull);
    return Rng(h);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace perturbench

#endif  // PERTURBENCH_RNG_HPP
