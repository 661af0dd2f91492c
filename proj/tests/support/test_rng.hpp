#pragma once

// Deterministic RNG for test fixtures. Hand-rolled transforms so the same
// seed reproduces the same instance on any platform/compiler (std::
// distributions are implementation-defined).

#include <cmath>
#include <cstdint>

namespace testsupport {

class TestRng {
 public:
  explicit TestRng(uint64_t seed) : state_(seed) {}

  uint64_t next() {  // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {  // Box-Muller, fresh pair each call
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  long poisson(double lambda) {  // Knuth; fine for the small means in tests
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

 private:
  uint64_t state_;
};

}  // namespace testsupport
