#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace camen {

// Deterministic splittable generator (splitmix64 core). Every stochastic
// piece of the simulator draws from an explicit stream so results are
// reproducible bit-for-bit across platforms and thread counts; standard
// <random> distributions are implementation-defined and avoided here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix(seed + 0x9e3779b97f4a7c15ULL)) {}

  // Independent child stream, e.g. one per Monte-Carlo run.
  Rng derive(uint64_t stream) const {
    Rng child(mix(state_ ^ (0x94d049bb133111ebULL * (stream + 1))));
    child.next_u64();
    return child;
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double next_double() { return std::ldexp(static_cast<double>(next_u64() >> 11), -53); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [lo, hi], inclusive. Rejection sampling keeps it exact.
  long long uniform_int(long long lo, long long hi) {
    if (hi <= lo) return lo;
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<long long>(x % span);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Knuth's product method; fine for the small means used here.
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    long long k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= next_double();
    } while (prod > limit);
    return k - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(0, static_cast<long long>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  uint64_t state_;
};

}  // namespace camen
