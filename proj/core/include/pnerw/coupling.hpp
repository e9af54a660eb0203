#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pnerw/error.hpp"
#include "pnerw/excitation.hpp"
#include "pnerw/lattice.hpp"
#include "pnerw/observables.hpp"
#include "pnerw/visited_set.hpp"
#include "pnerw/walk.hpp"

namespace pnerw {

/// Law of the lazy walk obtained by projecting increments onto the complement
/// of the drift span: atoms are projected and coinciding images merged, in
/// first-occurrence order. The zero atom carries the laziness.
inline IncrementDistribution projected_law(const IncrementDistribution& law,
                                           const CoordinateSubset& subset) {
  if (law.dimension() != subset.dimension())
    throw ConfigError("projected_law: dimension mismatch");
  std::vector<std::pair<IncrementDistribution::Atom, double>> merged;
  for (std::size_t k = 0; k < law.atom_count(); ++k) {
    auto image = project_complement(law.atom(k), subset);
    bool found = false;
    for (auto& [atom, mass] : merged) {
      if (atom == image) {
        mass += law.mass(k);
        found = true;
        break;
      }
    }
    if (!found) merged.emplace_back(std::move(image), law.mass(k));
  }
  return IncrementDistribution(law.dimension(), std::move(merged));
}

/// Joint record of the excited walk X and the projected lazy walk Y built
/// from the same draws. Per step, Y moves by the projection of the increment
/// X actually took, so Y and X agree exactly on every complement axis.
class CoupledTrace {
public:
  CoupledTrace(WalkTrace x, std::vector<std::int64_t> y_flat, std::vector<std::uint8_t> y_new,
               CoordinateSubset subset)
      : x_(std::move(x)),
        y_flat_(std::move(y_flat)),
        y_first_visit_(std::move(y_new)),
        subset_(std::move(subset)) {}

  const WalkTrace& x() const { return x_; }
  const CoordinateSubset& subset() const { return subset_; }
  std::uint64_t horizon() const { return x_.horizon(); }
  int dimension() const { return x_.dimension(); }

  std::span<const std::int64_t> y_position(std::uint64_t i) const {
    return {y_flat_.data() + i * x_.dimension(), static_cast<std::size_t>(x_.dimension())};
  }
  bool y_first_visit(std::uint64_t i) const { return y_first_visit_[i] != 0; }

private:
  WalkTrace x_;
  std::vector<std::int64_t> y_flat_;
  std::vector<std::uint8_t> y_first_visit_;
  CoordinateSubset subset_;
};

namespace detail {

/// Observer that grows Y next to X. Y's occupation set lives on the
/// complement coordinates only.
template <class Inner>
class CoupledObserver {
public:
  CoupledObserver(int d, const CoordinateSubset& subset, Inner* inner)
      : d_(d), inner_(inner), y_coords_{}, comp_axes_() {
    for (int axis = 1; axis <= d; ++axis)
      if (!subset.contains(axis)) comp_axes_.push_back(axis - 1);
    comp_dim_ = static_cast<int>(comp_axes_.size());
    std::vector<std::int64_t> zeros(comp_dim_, 0);
    y_set_.insert(pack_site<4>({zeros.data(), zeros.size()}));
    y_range_ = 1;
  }

  void on_step(const StepView& v) {
    for (int idx : comp_axes_) y_coords_[idx] += v.increment[idx];
    std::array<std::int64_t, kMaxDimension> comp{};
    for (int c = 0; c < comp_dim_; ++c) comp[c] = y_coords_[comp_axes_[c]];
    const bool y_new =
        y_set_.insert(pack_site<4>({comp.data(), static_cast<std::size_t>(comp_dim_)}));
    if (y_new) ++y_range_;
    inner_->on_coupled_step(v, {y_coords_.data(), static_cast<std::size_t>(d_)}, y_new, y_range_);
  }

private:
  int d_;
  Inner* inner_;
  std::array<std::int64_t, kMaxDimension> y_coords_;
  std::vector<int> comp_axes_;
  int comp_dim_ = 0;
  VisitedSet<4> y_set_{1 << 12};
  std::uint64_t y_range_ = 0;
};

}  // namespace detail

/// The drift direction must be spanned by the subset axes (zero components
/// off the subset, nonnegative on it).
inline void check_drift_span(const Direction& ell, const CoordinateSubset& subset) {
  for (int axis = 1; axis <= ell.dimension(); ++axis) {
    const double c = ell[axis - 1];
    if (!subset.contains(axis) && std::abs(c) > 1e-12)
      throw ConfigError("coupling: drift direction has a component off the subset span");
    if (subset.contains(axis) && c < -1e-12)
      throw ConfigError("coupling: drift coefficients on the subset must be nonnegative");
  }
}

/// Runs X on stream(seed, stream_index) exactly as run_walk would (the draw
/// pattern is untouched, so X is bit-identical to the uncoupled run) and
/// builds Y from the projected increments. Inner receives
/// on_coupled_step(StepView, y_position, y_first_visit, y_range).
template <class Inner>
void run_coupled_observed(const WalkConfig& cfg, const CoordinateSubset& subset,
                          std::span<const double> p_table, Xoshiro256pp rng, Inner& inner,
                          bool enforce_cone_constraints = true) {
  if (subset.dimension() != cfg.d) throw ConfigError("coupling: subset dimension mismatch");
  check_drift_span(cfg.ell, subset);
  if (enforce_cone_constraints) subset.require_cone_constraints();
  detail::CoupledObserver<Inner> obs(cfg.d, subset, &inner);
  run_walk_observed(cfg, p_table, rng, obs);
}

/// Full-trace variant used by tests and the CLI `couple` command.
inline CoupledTrace run_coupled(const WalkConfig& cfg, const CoordinateSubset& subset,
                                bool enforce_cone_constraints = true,
                                std::uint64_t stream_index = 0) {
  validate_walk_config(cfg);
  struct Recorder {
    WalkTrace trace;
    std::vector<std::int64_t> y_flat;
    std::vector<std::uint8_t> y_new;
    int d;

    void on_coupled_step(const StepView& v, std::span<const std::int64_t> y, bool y_first,
                         std::uint64_t) {
      trace.record(v);
      auto* dst = y_flat.data() + v.step * d;
      for (int j = 0; j < d; ++j) dst[j] = y[j];
      y_new[v.step] = y_first ? 1 : 0;
    }
  };
  Recorder rec{WalkTrace(cfg.d, cfg.horizon),
               std::vector<std::int64_t>((cfg.horizon + 1) * static_cast<std::size_t>(cfg.d), 0),
               std::vector<std::uint8_t>(cfg.horizon + 1, 0),
               cfg.d};
  rec.y_new[0] = 1;
  const std::vector<double> p = cfg.schedule.table(cfg.horizon);
  run_coupled_observed(cfg, subset, p, Xoshiro256pp::for_stream(cfg.seed, stream_index), rec,
                       enforce_cone_constraints);
  return CoupledTrace(std::move(rec.trace), std::move(rec.y_flat), std::move(rec.y_new), subset);
}

/// Distinct-site counts of the Y path, recomputed from the stored positions
/// rather than the engine's flags.
inline std::vector<std::uint64_t> range_series_y(const CoupledTrace& coupled) {
  VisitedSet<4> seen(1 << 12);
  std::vector<std::uint64_t> series(coupled.horizon() + 1);
  std::uint64_t range = 0;
  for (std::uint64_t i = 0; i <= coupled.horizon(); ++i) {
    auto y = coupled.y_position(i);
    if (seen.insert(pack_site<4>(y))) ++range;
    series[i] = range;
  }
  return series;
}

}  // namespace pnerw
