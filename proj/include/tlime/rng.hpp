#ifndef TLIME_RNG_HPP
#define TLIME_RNG_HPP

#include <array>
#include <cstdint>

namespace tlime {

/// splitmix64 (Steele, Lea, Vigna). Used to expand seeds and to derive
/// independent substreams; output sequence is fixed by the algorithm, so
/// results are identical across platforms and standard-library versions.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

/// xoshiro256** 1.0 (Blackman, Vigna), seeded from splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& s : state_) s = sm.next();
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Rejection-free modulo bias is not a
  /// concern at these bounds, but use Lemire's method anyway: it is exact.
  std::uint64_t next_below(std::uint64_t bound) {
    // Debiased multiply-shift (Lemire 2019).
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = -bound % bound;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<unsigned __int128>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

/// Derives the seed of an order-independent substream, e.g. one per
/// perturbation sample or per forest tree. mix() decorrelates adjacent
/// indices before xoshiro expansion.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 sm(seed ^ (0x9e3779b97f4a7c15ULL + index * 0xd1342543de82ef95ULL));
  return sm.next();
}

inline Rng substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(substream_seed(seed, index));
}

}  // namespace tlime

#endif  // TLIME_RNG_HPP
