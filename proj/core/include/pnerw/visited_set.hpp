#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "pnerw/error.hpp"

namespace pnerw {

/// Sites packed as 32-bit biased coordinates, two per 64-bit word.
/// Valid while every |coordinate| < 2^31 - 1; the walk configuration
/// enforces horizon * max|jump coordinate| below that bound up front, so
/// the hot path carries no per-step checks. The all-zero word pattern can
/// then never occur and serves as the empty-slot sentinel.
template <std::size_t Words>
using PackedSite = std::array<std::uint64_t, Words>;

inline constexpr std::uint64_t kCoordBias = 0x80000000ULL;

constexpr std::size_t words_for_dimension(int d) { return static_cast<std::size_t>((d + 1) / 2); }

template <std::size_t Words>
inline PackedSite<Words> pack_site(std::span<const std::int64_t> coords) {
  PackedSite<Words> key{};
  const int d = static_cast<int>(coords.size());
  for (int j = 0; j < d; ++j) {
    const std::uint64_t biased =
        (static_cast<std::uint64_t>(coords[j]) + kCoordBias) & 0xffffffffULL;
    key[j >> 1] |= biased << ((j & 1) * 32);
  }
  return key;
}

template <std::size_t Words>
inline void unpack_site(const PackedSite<Words>& key, std::span<std::int64_t> out) {
  const int d = static_cast<int>(out.size());
  for (int j = 0; j < d; ++j) {
    const std::uint64_t biased = (key[j >> 1] >> ((j & 1) * 32)) & 0xffffffffULL;
    out[j] = static_cast<std::int64_t>(biased) - static_cast<std::int64_t>(kCoordBias);
  }
}

/// Per-atom packed increment: lane-wise two's-complement addition updates
/// both 32-bit coordinates of a word at once.
template <std::size_t Words>
inline PackedSite<Words> pack_delta(std::span<const std::int64_t> delta) {
  PackedSite<Words> key{};
  const int d = static_cast<int>(delta.size());
  for (int j = 0; j < d; ++j) {
    const std::uint64_t lane = static_cast<std::uint64_t>(delta[j]) & 0xffffffffULL;
    key[j >> 1] |= lane << ((j & 1) * 32);
  }
  return key;
}

template <std::size_t Words>
inline void packed_add(PackedSite<Words>& pos, const PackedSite<Words>& delta) {
  for (std::size_t w = 0; w < Words; ++w) {
    const std::uint64_t lo = (pos[w] + delta[w]) & 0xffffffffULL;
    const std::uint64_t hi = (pos[w] & ~0xffffffffULL) + (delta[w] & ~0xffffffffULL);
    pos[w] = hi + lo;
  }
}

template <std::size_t Words>
inline std::uint64_t hash_packed(const PackedSite<Words>& key) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::size_t w = 0; w < Words; ++w) {
    h ^= key[w];
    h *= 0x2545f4914f6cdd1dULL;
    h ^= h >> 29;
  }
  h *= 0xbf58476d1ce4e5b9ULL;
  return h ^ (h >> 32);
}

/// Open-addressing set of packed sites, linear probing, power-of-two table.
/// Exact membership only; the walk law cannot tolerate false positives.
template <std::size_t Words>
class VisitedSet {
public:
  explicit VisitedSet(std::size_t expected_sites = 64) { rehash_for(expected_sites); }

  /// Returns true when the key was newly inserted.
  bool insert(const PackedSite<Words>& key) {
    std::size_t i = hash_packed<Words>(key) & mask_;
    while (true) {
      PackedSite<Words>& slot = slots_[i];
      if (is_empty(slot)) {
        slot = key;
        ++size_;
        if (size_ * 10 >= capacity_ * 7) grow();
        return true;
      }
      if (slot == key) return false;
      i = (i + 1) & mask_;
    }
  }

  bool contains(const PackedSite<Words>& key) const {
    std::size_t i = hash_packed<Words>(key) & mask_;
    while (true) {
      const PackedSite<Words>& slot = slots_[i];
      if (is_empty(slot)) return false;
      if (slot == key) return true;
      i = (i + 1) & mask_;
    }
  }

  std::size_t size() const { return size_; }

  void clear() {
    std::memset(slots_.data(), 0, slots_.size() * sizeof(PackedSite<Words>));
    size_ = 0;
  }

private:
  static bool is_empty(const PackedSite<Words>& slot) {
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < Words; ++w) acc |= slot[w];
    return acc == 0;
  }

  void rehash_for(std::size_t expected) {
    std::size_t cap = 64;
    while (cap * 7 < expected * 10) cap <<= 1;
    capacity_ = cap;
    mask_ = cap - 1;
    slots_.assign(cap, PackedSite<Words>{});
    size_ = 0;
  }

  void grow() {
    std::vector<PackedSite<Words>> old;
    old.swap(slots_);
    capacity_ <<= 1;
    mask_ = capacity_ - 1;
    slots_.assign(capacity_, PackedSite<Words>{});
    for (const auto& slot : old) {
      if (is_empty(slot)) continue;
      std::size_t i = hash_packed<Words>(slot) & mask_;
      while (!is_empty(slots_[i])) i = (i + 1) & mask_;
      slots_[i] = slot;
    }
  }

  std::vector<PackedSite<Words>> slots_;
  std::size_t capacity_ = 0;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

}  // namespace pnerw
