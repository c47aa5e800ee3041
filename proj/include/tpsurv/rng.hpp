#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace tpsurv {

// Deterministic, schedule-independent random streams. Every consumer derives
// its own stream from (root seed, labels...) so parallel execution order can
// never change the numbers drawn.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  // Child stream keyed by an integer (replication index, imputation index, ...).
  Rng fork(std::uint64_t key) const {
    return Rng(mix(state_, key ^ 0x9e3779b97f4a7c15ull));
  }

  // Child stream keyed by a label ("train", "analysis", method tag, ...).
  Rng fork(std::string_view label) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return fork(h);
  }

  std::uint64_t next_u64() {
    // splitmix64: tiny, portable, passes BigCrush for this use
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1) — safe for log().
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Marsaglia polar
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  bool bernoulli(double p) { return uniform() < p; }

  // size_t in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // rejection to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Marsaglia–Tsang; requires shape >= 1 (all callers draw chi-square with df >= 2).
  double gamma(double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double df) { return 2.0 * gamma(df / 2.0); }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace tpsurv
