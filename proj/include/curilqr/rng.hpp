#pragma once

#include <cmath>
#include <cstdint>

namespace curilqr {

// Deterministic random stream. The generator is splitmix64 and the
// distributions are implemented explicitly (instead of through <random>
// distribution objects) so that a given seed produces the same sequence on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double std) { return mean + std * gaussian(); }

  // Independent stream derived from this generator's seed and a stream id.
  // Forking neither consumes nor depends on draws already made.
  Rng fork(std::uint64_t stream) const {
    Rng mixer(mix64(seed_) ^ (0xd1342543de82ef95ULL * (stream + 1)));
    mixer.next_u64();
    return Rng(mixer.next_u64());
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
  }

  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace curilqr
