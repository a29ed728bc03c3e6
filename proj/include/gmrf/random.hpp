#ifndef GMRF_RANDOM_HPP
#define GMRF_RANDOM_HPP

#include <cstdint>
#include <limits>

namespace gmrf {

/// SplitMix64 finalizer. Used to derive independent stream states from
/// (seed, index) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** engine whose state is a pure function of (seed, stream).
///
/// Stream contract: the sample with index i of a batch seeded with s draws
/// all of its randomness from `Stream(s, i)`. Any partition of the index
/// range across workers therefore reproduces the serial batch bit for bit.
/// Satisfies UniformRandomBitGenerator so std distributions can consume it.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t sm = seed;
    const std::uint64_t mixed_seed = splitmix64(sm);
    std::uint64_t st = mixed_seed ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    for (auto& s : s_) s = splitmix64(st);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4]{};
};

}  // namespace gmrf

#endif  // GMRF_RANDOM_HPP
