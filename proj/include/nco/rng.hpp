#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace nco {

// Deterministic PRNG. Wraps splitmix64 for stream derivation and xoshiro-style
// output through std::mt19937_64-free arithmetic so same-seed runs are
// bit-identical on every platform (std::uniform_real_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up so small seeds decorrelate quickly
    next();
    next();
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("Rng::uniform: lo must be < hi");
    return lo + (hi - lo) * uniform();
  }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // index drawn proportionally to probs (need not be normalized)
  int categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    double r = uniform() * total;
    double acc = 0.0;
    int last = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last = i;
      if (r < acc) return i;
    }
    if (last < 0) throw std::runtime_error("Rng::categorical: no positive mass");
    return last;  // r landed on the rounding tail
  }

  // independent stream for (this seed, salt) pairs
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace nco
