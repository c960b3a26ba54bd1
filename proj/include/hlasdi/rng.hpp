#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hlasdi {

/// Deterministic, platform-independent RNG (splitmix64 core). The standard
/// library distributions are implementation-defined, so every draw used for
/// checkpoints or tests goes through this class instead.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  /// Derive an independent stream from a seed and up to two tags.
  static Rng stream(uint64_t seed, uint64_t tag0, uint64_t tag1 = 0) {
    Rng r(seed);
    r.state_ ^= splitmix(tag0 + 0x9e3779b97f4a7c15ull);
    r.state_ ^= splitmix(tag1 + 0xbf58476d1ce4e5b9ull);
    r.next();
    return r;
  }

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return splitmix(state_);
  }

  /// Uniform in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Rejection-free modulo with 64-bit state is biased by < 2^-53 for the
    // sizes used here (grid indices); acceptable and fully deterministic.
    return next() % n;
  }

  /// First k entries of a random permutation of 0..n-1 (partial Fisher-Yates).
  std::vector<int> choose(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + int(below(uint64_t(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  static uint64_t splitmix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hlasdi
