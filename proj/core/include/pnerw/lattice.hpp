#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnerw/error.hpp"

namespace pnerw {

/// Dimensions handled by the packed visited-set representation (32 bits per
/// coordinate, at most four 64-bit words per site).
inline constexpr int kMinDimension = 2;
inline constexpr int kMaxDimension = 8;

inline void check_dimension(int d) {
  if (d < kMinDimension || d > kMaxDimension)
    throw ConfigError("dimension d must lie in [" + std::to_string(kMinDimension) + ", " +
                      std::to_string(kMaxDimension) + "], got " + std::to_string(d));
}

/// A point of Z^d. Coordinates are 64-bit signed integers so that site
/// identity stays exact over any desk-scale walk.
class LatticeSite {
public:
  explicit LatticeSite(int d) : d_(d) { check_dimension(d); }

  static LatticeSite origin(int d) { return LatticeSite(d); }

  explicit LatticeSite(std::span<const std::int64_t> coords) : d_(static_cast<int>(coords.size())) {
    check_dimension(d_);
    for (int j = 0; j < d_; ++j) c_[j] = coords[j];
  }

  int dimension() const { return d_; }
  std::int64_t operator[](int j) const { return c_[j]; }
  std::int64_t& operator[](int j) { return c_[j]; }
  std::span<const std::int64_t> coords() const { return {c_.data(), static_cast<std::size_t>(d_)}; }

  bool is_origin() const {
    for (int j = 0; j < d_; ++j)
      if (c_[j] != 0) return false;
    return true;
  }

  void translate(std::span<const std::int64_t> delta) {
    for (int j = 0; j < d_; ++j) c_[j] += delta[j];
  }

  friend bool operator==(const LatticeSite& a, const LatticeSite& b) {
    if (a.d_ != b.d_) return false;
    for (int j = 0; j < a.d_; ++j)
      if (a.c_[j] != b.c_[j]) return false;
    return true;
  }

private:
  std::array<std::int64_t, kMaxDimension> c_{};
  int d_;
};

/// A unit vector of R^d. Normalized at construction; near-zero inputs are
/// rejected rather than blown up.
class Direction {
public:
  explicit Direction(std::vector<double> components) : v_(std::move(components)) {
    const int d = static_cast<int>(v_.size());
    check_dimension(d);
    double norm2 = 0.0;
    for (double x : v_) norm2 += x * x;
    const double norm = std::sqrt(norm2);
    if (norm < 1e-9) throw ConfigError("direction vector has near-zero norm");
    for (double& x : v_) x /= norm;
  }

  /// Canonical direction e_axis (1-based axis index).
  static Direction axis(int d, int axis) {
    check_dimension(d);
    if (axis < 1 || axis > d)
      throw ConfigError("axis index " + std::to_string(axis) + " outside 1.." + std::to_string(d));
    std::vector<double> v(d, 0.0);
    v[axis - 1] = 1.0;
    return Direction(std::move(v));
  }

  int dimension() const { return static_cast<int>(v_.size()); }
  double operator[](int j) const { return v_[j]; }
  std::span<const double> components() const { return v_; }

  double dot(std::span<const std::int64_t> delta) const {
    if (delta.size() != v_.size()) throw ConfigError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < v_.size(); ++j) s += v_[j] * static_cast<double>(delta[j]);
    return s;
  }

  double dot(std::span<const double> x) const {
    if (x.size() != v_.size()) throw ConfigError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < v_.size(); ++j) s += v_[j] * x[j];
    return s;
  }

private:
  std::vector<double> v_;
};

/// A set of canonical axes D of {e_1, ..., e_d}, identified by 1-based
/// indices. Used for the drift span and the complementary projection.
class CoordinateSubset {
public:
  CoordinateSubset(std::vector<int> indices, int d) : d_(d) {
    check_dimension(d);
    if (indices.empty()) throw ConfigError("coordinate subset must be nonempty");
    for (int i : indices) {
      if (i < 1 || i > d)
        throw ConfigError("subset index " + std::to_string(i) + " outside 1.." + std::to_string(d));
      const std::uint64_t bit = std::uint64_t{1} << (i - 1);
      if (mask_ & bit) throw ConfigError("subset indices must be distinct");
      mask_ |= bit;
      indices_.push_back(i);
    }
    std::sort(indices_.begin(), indices_.end());
  }

  int dimension() const { return d_; }
  int k() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& indices() const { return indices_; }
  bool contains(int axis) const { return (mask_ >> (axis - 1)) & 1u; }

  /// The d >= 4 cone results need at least a 3-dimensional complement.
  void require_cone_constraints() const {
    if (d_ < 4)
      throw ConfigError("cone experiments need d >= 4 (got d = " + std::to_string(d_) + ")");
    if (k() > d_ - 3)
      throw ConfigError("cone experiments need |subset| <= d - 3 (got " + std::to_string(k()) +
                        " with d = " + std::to_string(d_) + ")");
  }

private:
  std::vector<int> indices_;
  std::uint64_t mask_ = 0;
  int d_;
};

/// Projection onto the complement of the subset: coordinates on D are
/// zeroed, the rest pass through.
inline std::vector<std::int64_t> project_complement(std::span<const std::int64_t> delta,
                                                    const CoordinateSubset& subset) {
  if (static_cast<int>(delta.size()) != subset.dimension())
    throw ConfigError("project_complement: vector length " + std::to_string(delta.size()) +
                      " does not match subset dimension " + std::to_string(subset.dimension()));
  std::vector<std::int64_t> out(delta.begin(), delta.end());
  for (int axis : subset.indices()) out[axis - 1] = 0;
  return out;
}

/// Exact inner product of a direction with an integer displacement.
inline double dot(const Direction& ell, std::span<const std::int64_t> delta) {
  return ell.dot(delta);
}

inline double euclidean_norm(std::span<const std::int64_t> v) {
  double s = 0.0;
  for (std::int64_t x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

inline double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace pnerw
