#pragma once

#include <array>
#include <bit>
#include <cstdint>

namespace pnerw {

// splitmix64 finalizer; also used as the documented seed-mixing function.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

struct SplitMix64 {
  std::uint64_t state;

  constexpr std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state);
  }
};

/// xoshiro256++ with splittable per-replica streams.
///
/// Stream derivation is fixed and documented: replica r of master seed s
/// expands SplitMix64 seeded with  splitmix64_mix(s) ^ ((r + 1) * 0x9e3779b97f4a7c15)
/// into the four words of state. The tweak is injective in r, so distinct
/// replicas always start from distinct SplitMix64 states.
class Xoshiro256pp {
public:
  explicit Xoshiro256pp(std::uint64_t seed) { init(splitmix64_mix(seed)); }

  static Xoshiro256pp for_stream(std::uint64_t seed, std::uint64_t replica) {
    Xoshiro256pp r;
    r.init(stream_root(seed, replica));
    return r;
  }

  static constexpr std::uint64_t stream_root(std::uint64_t seed, std::uint64_t replica) {
    return splitmix64_mix(seed) ^ ((replica + 1) * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t next() {
    const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53 random bits, exactly one next() consumed.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  const std::array<std::uint64_t, 4>& state() const { return s_; }

private:
  Xoshiro256pp() = default;

  void init(std::uint64_t root) {
    SplitMix64 sm{root};
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace pnerw
