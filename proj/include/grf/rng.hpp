#pragma once

#include <cmath>
#include <cstdint>

namespace grf {

// splitmix64 is the project-wide seedable generator. Every stochastic
// component (weight init, dropout, shuffling, synthetic data) owns its own
// stream derived from (master seed, stream id), so a run is reproducible
// end to end from one seed. Stream equality across implementations of the
// same policy matters; equality across languages does not.
struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  uint64_t next_below(uint64_t n) { return n ? next() % n : 0; }

  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
};

enum class Stream : uint64_t {
  WeightInit = 0x5157u,
  Dropout = 0xd209u,
  Shuffle = 0x5f1eu,
  Synthetic = 0x5d47u,
  Probe = 0x9e0bu,
};

inline SplitMix64 make_stream(uint64_t seed, Stream id) {
  SplitMix64 g(seed ^ (static_cast<uint64_t>(id) * 0x9e3779b97f4a7c15ull));
  g.next();
  return g;
}

}  // namespace grf
