// Deterministic random streams. The engine is mt19937_64 (output pinned by
// the standard); conversion to doubles is done by hand because the standard
// distributions are implementation-defined and would break the reproducibility
// contracts (bitwise-identical reruns, identical CSV bytes).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace so3tengen {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed), base_(seed) {}

  std::uint64_t u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller; second value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo bias is irrelevant at our n (tiny vs 2^64),
    // but keep it exact anyway.
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t x = u64();
    while (x >= limit) x = u64();
    return x % n;
  }

  // Independent child stream; distinct ids give decorrelated streams and the
  // derivation is order-free so parallel consumers stay deterministic.
  Rng spawn(std::uint64_t id) const {
    return Rng(splitmix64(base_ ^ splitmix64(id)));
  }

  explicit Rng(std::uint64_t seed, std::uint64_t base)
      : eng_(seed), base_(base) {}

  static Rng from_path(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(root);
    h = splitmix64(h ^ splitmix64(a));
    h = splitmix64(h ^ splitmix64(b));
    h = splitmix64(h ^ splitmix64(c));
    return Rng(h, h);
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t base_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace so3tengen
