#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "pnerw/error.hpp"
#include "pnerw/lattice.hpp"

namespace pnerw {

/// Excitation probability schedule p_n = min(C * n^(-beta), 1).
struct ExcitationSchedule {
  double C;
  double beta;

  ExcitationSchedule(double C_, double beta_) : C(C_), beta(beta_) {
    if (!(C > 0.0)) throw ConfigError("schedule constant C must be positive");
    if (!(beta > 0.0)) throw ConfigError("schedule exponent beta must be positive");
  }

  /// p(n) for n >= 1. beta in {1/2, 3/4, 1} goes through IEEE-exact sqrt
  /// compositions so traces replay identically across libm versions.
  double p(std::uint64_t n) const {
    if (n == 0) throw DomainError("schedule_p: step index n must be >= 1");
    const double x = static_cast<double>(n);
    double decayed;
    if (beta == 0.5) {
      decayed = C / std::sqrt(x);
    } else if (beta == 1.0) {
      decayed = C / x;
    } else if (beta == 0.75) {
      decayed = C / std::sqrt(x * std::sqrt(x));
    } else {
      decayed = C * std::pow(x, -beta);
    }
    return decayed < 1.0 ? decayed : 1.0;
  }

  /// Precomputed p(1..horizon), shared across replicas of one experiment.
  std::vector<double> table(std::uint64_t horizon) const {
    std::vector<double> t(horizon + 1, 0.0);
    for (std::uint64_t n = 1; n <= horizon; ++n) t[n] = p(n);
    return t;
  }
};

/// A finite-support law on Z^d increments. Masses are validated to sum to
/// one; sampling is inverse-CDF over the support in declaration order, so a
/// trace is a reproducible function of the uniform stream alone.
class IncrementDistribution {
public:
  using Atom = std::vector<std::int64_t>;

  IncrementDistribution(int d, std::vector<std::pair<Atom, double>> support) : d_(d) {
    check_dimension(d);
    if (support.empty()) throw ConfigError("increment distribution needs at least one atom");
    double total = 0.0;
    for (auto& [atom, mass] : support) {
      if (static_cast<int>(atom.size()) != d)
        throw ConfigError("increment atom has length " + std::to_string(atom.size()) +
                          ", expected d = " + std::to_string(d));
      if (mass < 0.0) throw ConfigError("increment masses must be nonnegative");
      total += mass;
      atoms_.insert(atoms_.end(), atom.begin(), atom.end());
      mass_.push_back(mass);
      jump_bound_ = std::max(jump_bound_, euclidean_norm(atom));
      for (std::int64_t x : atom) max_abs_coord_ = std::max<std::int64_t>(max_abs_coord_, std::llabs(x));
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ConfigError("increment masses must sum to 1 within 1e-12, got " + std::to_string(total));
    cum_.resize(mass_.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < mass_.size(); ++k) {
      acc += mass_[k];
      cum_[k] = acc;
    }
    cum_.back() = 1.0;
  }

  /// Uniform law on the 2d signed canonical vectors, mass 1/(2d) each.
  static IncrementDistribution example_xi(int d) {
    check_dimension(d);
    std::vector<std::pair<Atom, double>> sup;
    const double m = 1.0 / (2.0 * d);
    for (int j = 0; j < d; ++j) {
      Atom plus(d, 0), minus(d, 0);
      plus[j] = 1;
      minus[j] = -1;
      sup.emplace_back(std::move(plus), m);
      sup.emplace_back(std::move(minus), m);
    }
    return IncrementDistribution(d, std::move(sup));
  }

  /// Drifted nearest-neighbour law: mass delta/d on e_1, (1-delta)/d on
  /// -e_1, 1/(2d) on the other signed axes. Drift along e_1 is (2*delta-1)/d.
  static IncrementDistribution example_gamma(int d, double delta) {
    check_dimension(d);
    if (!(delta > 0.5) || !(delta <= 1.0))
      throw ConfigError("delta must lie in (1/2, 1], got " + std::to_string(delta));
    std::vector<std::pair<Atom, double>> sup;
    Atom plus(d, 0), minus(d, 0);
    plus[0] = 1;
    minus[0] = -1;
    sup.emplace_back(std::move(plus), delta / d);
    sup.emplace_back(std::move(minus), (1.0 - delta) / d);
    const double m = 1.0 / (2.0 * d);
    for (int j = 1; j < d; ++j) {
      Atom p2(d, 0), m2(d, 0);
      p2[j] = 1;
      m2[j] = -1;
      sup.emplace_back(std::move(p2), m);
      sup.emplace_back(std::move(m2), m);
    }
    return IncrementDistribution(d, std::move(sup));
  }

  int dimension() const { return d_; }
  std::size_t atom_count() const { return mass_.size(); }
  std::span<const std::int64_t> atom(std::size_t k) const {
    return {atoms_.data() + k * d_, static_cast<std::size_t>(d_)};
  }
  double mass(std::size_t k) const { return mass_[k]; }
  double jump_bound() const { return jump_bound_; }
  std::int64_t max_abs_coord() const { return max_abs_coord_; }

  std::vector<double> mean() const {
    std::vector<double> m(d_, 0.0);
    for (std::size_t k = 0; k < mass_.size(); ++k)
      for (int j = 0; j < d_; ++j) m[j] += mass_[k] * static_cast<double>(atom(k)[j]);
    return m;
  }

  /// E[X X^T], row-major d x d.
  std::vector<double> second_moment() const {
    std::vector<double> c(static_cast<std::size_t>(d_) * d_, 0.0);
    for (std::size_t k = 0; k < mass_.size(); ++k) {
      auto a = atom(k);
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
          c[static_cast<std::size_t>(i) * d_ + j] +=
              mass_[k] * static_cast<double>(a[i]) * static_cast<double>(a[j]);
    }
    return c;
  }

  double drift_along(const Direction& ell) const {
    if (ell.dimension() != d_) throw ConfigError("drift_along: dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < mass_.size(); ++k) s += mass_[k] * ell.dot(atom(k));
    return s;
  }

  /// Inverse-CDF draw: smallest k with u <= cum[k], computed branchlessly as
  /// the number of cumulative weights strictly below u. Exactly one uniform.
  template <class Rng>
  std::size_t sample_index(Rng& rng) const {
    const double u = rng.uniform();
    std::size_t k = 0;
    for (std::size_t j = 0; j + 1 < cum_.size(); ++j) k += u > cum_[j] ? 1 : 0;
    return k;
  }

  template <class Rng>
  std::span<const std::int64_t> sample(Rng& rng) const {
    return atom(sample_index(rng));
  }

private:
  int d_;
  std::vector<std::int64_t> atoms_;  // flat, atom k at [k*d, (k+1)*d)
  std::vector<double> mass_;
  std::vector<double> cum_;
  double jump_bound_ = 0.0;
  std::int64_t max_abs_coord_ = 0;
};

/// Exact verification of the two standing hypotheses: bounded jumps with a
/// common constant K, centered xi, and positive drift of gamma along ell.
struct ConditionReport {
  std::vector<double> mean_xi;
  double drift_lambda = 0.0;
  double jump_bound = 0.0;
  bool bounded_jumps = false;
  bool xi_centered = false;
  bool gamma_drifts = false;

  bool satisfied() const { return bounded_jumps && xi_centered && gamma_drifts; }
};

inline ConditionReport validate_conditions(const IncrementDistribution& xi,
                                           const IncrementDistribution& gamma,
                                           const Direction& ell) {
  if (xi.dimension() != gamma.dimension() || ell.dimension() != xi.dimension())
    throw ConfigError("validate_conditions: xi, gamma and ell must share one dimension");
  ConditionReport r;
  r.mean_xi = xi.mean();
  r.drift_lambda = gamma.drift_along(ell);
  r.jump_bound = std::max(xi.jump_bound(), gamma.jump_bound());
  r.bounded_jumps = true;  // finite support
  double norm = 0.0;
  for (double m : r.mean_xi) norm += m * m;
  r.xi_centered = std::sqrt(norm) <= 1e-12;
  r.gamma_drifts = r.drift_lambda > 0.0;
  return r;
}

}  // namespace pnerw
