#pragma once

#include <cstdint>

namespace cdn {

// xoshiro256++ seeded through splitmix64. The standard library engines are
// portable but their real-valued distributions are not bit-reproducible
// across implementations; everything downstream (sampling, experiment trial
// streams) depends on byte-identical runs given a seed, so the generator and
// the uniform-double mapping are pinned here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53-bit resolution.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (lo, hi); redraws the measure-zero endpoint.
  double next_open(double lo, double hi) {
    double u = next_double();
    while (u == 0.0) u = next_double();
    return lo + u * (hi - lo);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Derives an independent stream; used to hand each trial/sample its own
  // generator so concurrency and ordering cannot change results.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed;
    const std::uint64_t a = splitmix64(x);
    x = index + 0x9e3779b97f4a7c15ULL;
    return Rng(a ^ splitmix64(x));
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

}  // namespace cdn
