#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <limits>
#include <new>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "pnerw/error.hpp"
#include "pnerw/excitation.hpp"
#include "pnerw/lattice.hpp"
#include "pnerw/rng.hpp"
#include "pnerw/visited_set.hpp"

namespace pnerw {

/// Everything a single walk needs. A config plus the stream index fully
/// determines the realized trace, bit for bit.
struct WalkConfig {
  int d;
  ExcitationSchedule schedule;
  IncrementDistribution xi;
  IncrementDistribution gamma;
  Direction ell;
  std::uint64_t horizon;
  std::uint64_t seed;
};

inline void check_packed_range(int d, std::uint64_t horizon, std::int64_t max_abs_coord) {
  check_dimension(d);
  if (max_abs_coord > 0 &&
      horizon > static_cast<std::uint64_t>((std::int64_t{1} << 31) - 2) /
                    static_cast<std::uint64_t>(max_abs_coord))
    throw ConfigError("horizon * jump bound exceeds the packed coordinate range (2^31 - 2)");
}

inline ConditionReport validate_walk_config(const WalkConfig& cfg) {
  check_dimension(cfg.d);
  if (cfg.xi.dimension() != cfg.d || cfg.gamma.dimension() != cfg.d || cfg.ell.dimension() != cfg.d)
    throw ConfigError("walk config: xi, gamma and ell must all have dimension d");
  const ConditionReport report = validate_conditions(cfg.xi, cfg.gamma, cfg.ell);
  if (!report.xi_centered)
    throw ConfigError("walk config: xi is not centered (violates the zero-mean hypothesis)");
  if (!report.gamma_drifts)
    throw ConfigError("walk config: gamma has no positive drift along ell");
  check_packed_range(cfg.d, cfg.horizon, std::max(cfg.xi.max_abs_coord(), cfg.gamma.max_abs_coord()));
  return report;
}

/// What the engine exposes to an observer after each step i >= 1.
struct StepView {
  std::uint64_t step;
  std::span<const std::int64_t> position;   // X_i
  std::span<const std::int64_t> increment;  // X_i - X_{i-1}
  bool first_visit;                         // X_i is a new site
  bool excited;                             // step used the gamma branch
  std::span<const std::int64_t> gamma_increment;  // set iff excited
  std::span<const std::int64_t> xi_shadow;        // set iff excited
  std::size_t gamma_atom = 0;                     // valid iff excited
  std::uint64_t range_size;                       // |R_i|
};

struct NullObserver {
  void on_step(const StepView&) {}
};

/// Contract for increment generators: a fixed finite support of bounded
/// jumps, with a per-step selection that may be stateful (adapted to the
/// walk's history through its own state). IncrementDistribution is the
/// shipped i.i.d. model; custom adapted families plug in through the same
/// surface.
template <class L>
concept IncrementLaw = requires(const L& law, L& mut, Xoshiro256pp& rng) {
  { law.atom_count() } -> std::convertible_to<std::size_t>;
  { law.atom(std::size_t{0}) } -> std::convertible_to<std::span<const std::int64_t>>;
  { mut.sample_index(rng) } -> std::convertible_to<std::size_t>;
};

namespace detail {

template <std::size_t Words>
struct PackedLaw {
  std::vector<PackedSite<Words>> deltas;

  template <class Law>
  explicit PackedLaw(const Law& law) {
    deltas.reserve(law.atom_count());
    for (std::size_t k = 0; k < law.atom_count(); ++k)
      deltas.push_back(pack_delta<Words>(law.atom(k)));
  }
};

// The recursion: at step i, a site revisit forces a centered draw; a first
// visit takes the drifted law when U_i <= p_i. One uniform and one increment
// draw per step, U first, on every branch; excited steps additionally consume
// one shadow draw from the centered law so that the excitation correction
// gamma_i - xi_i is observable. The shadow draw is independent of everything
// else and leaves the law of the walk unchanged.
template <std::size_t Words, bool Excite, class XiLaw, class GammaLaw, class Rng, class Observer>
void run_core(int d, std::uint64_t horizon, XiLaw& xi, GammaLaw& gamma,
              std::span<const double> p_table, Rng& rng, Observer& obs) {
  const PackedLaw<Words> xi_packed(xi);
  const PackedLaw<Words> gamma_packed(gamma);

  std::array<std::int64_t, kMaxDimension> coords{};
  const std::span<const std::int64_t> pos_span{coords.data(), static_cast<std::size_t>(d)};

  VisitedSet<Words> visited(
      static_cast<std::size_t>(horizon < (1u << 22) ? horizon + 1 : horizon / 2));
  PackedSite<Words> pos = pack_site<Words>(pos_span);
  visited.insert(pos);

  bool prev_new = true;  // the origin at time 0 counts as a first visit
  for (std::uint64_t i = 1; i <= horizon; ++i) {
    const double u = rng.uniform();
    StepView view;
    view.step = i;
    view.excited = false;
    if constexpr (Excite) {
      if (prev_new && u <= p_table[i]) {
        const std::size_t ga = gamma.sample_index(rng);
        const std::size_t sa = xi.sample_index(rng);
        view.excited = true;
        view.gamma_atom = ga;
        view.gamma_increment = gamma.atom(ga);
        view.xi_shadow = xi.atom(sa);
        view.increment = view.gamma_increment;
        packed_add(pos, gamma_packed.deltas[ga]);
      } else {
        const std::size_t a = xi.sample_index(rng);
        view.increment = xi.atom(a);
        packed_add(pos, xi_packed.deltas[a]);
      }
    } else {
      const std::size_t a = xi.sample_index(rng);
      view.increment = xi.atom(a);
      packed_add(pos, xi_packed.deltas[a]);
    }
    for (int j = 0; j < d; ++j) coords[j] += view.increment[j];
    const bool is_new = visited.insert(pos);
    view.position = pos_span;
    view.first_visit = is_new;
    view.range_size = visited.size();
    obs.on_step(view);
    prev_new = is_new;
  }
}

template <class F>
decltype(auto) dispatch_words(int d, F&& f) {
  switch (words_for_dimension(d)) {
    case 1:
      return f(std::integral_constant<std::size_t, 1>{});
    case 2:
      return f(std::integral_constant<std::size_t, 2>{});
    case 3:
      return f(std::integral_constant<std::size_t, 3>{});
    case 4:
      return f(std::integral_constant<std::size_t, 4>{});
    default:
      throw ConfigError("unsupported dimension");
  }
}

}  // namespace detail

/// Runs the excited walk with a caller-supplied stream, feeding an observer.
/// p_table must hold p(i) at index i for 1 <= i <= horizon.
template <class Rng, class Observer>
void run_walk_observed(const WalkConfig& cfg, std::span<const double> p_table, Rng rng,
                       Observer& obs) {
  if (p_table.size() < cfg.horizon + 1 && cfg.horizon > 0)
    throw DomainError("run_walk_observed: schedule table shorter than horizon");
  detail::dispatch_words(cfg.d, [&](auto words) {
    detail::run_core<decltype(words)::value, true>(cfg.d, cfg.horizon, cfg.xi, cfg.gamma, p_table,
                                                   rng, obs);
  });
}

/// Plain zero-drift walk (no excitation branch), same bookkeeping.
template <class Rng, class Observer>
void run_plain_walk_observed(int d, const IncrementDistribution& law, std::uint64_t horizon,
                             Rng rng, Observer& obs) {
  check_packed_range(d, horizon, law.max_abs_coord());
  detail::dispatch_words(d, [&](auto words) {
    detail::run_core<decltype(words)::value, false>(d, horizon, law, law, {}, rng, obs);
  });
}

/// Same recursion with pluggable increment generators: each law keeps a fixed
/// finite support but may select adaptively through its own state. The draw
/// pattern (one uniform, one increment, shadow on excited steps) is shared
/// with the shipped i.i.d. model.
template <IncrementLaw XiLaw, IncrementLaw GammaLaw, class Rng, class Observer>
void run_custom_walk_observed(int d, std::uint64_t horizon, XiLaw& xi, GammaLaw& gamma,
                              std::span<const double> p_table, Rng rng, Observer& obs) {
  std::int64_t amax = 0;
  for (std::size_t k = 0; k < xi.atom_count(); ++k)
    for (std::int64_t x : xi.atom(k)) amax = std::max(amax, std::int64_t{x < 0 ? -x : x});
  for (std::size_t k = 0; k < gamma.atom_count(); ++k)
    for (std::int64_t x : gamma.atom(k)) amax = std::max(amax, std::int64_t{x < 0 ? -x : x});
  check_packed_range(d, horizon, amax);
  if (p_table.size() < horizon + 1 && horizon > 0)
    throw DomainError("run_custom_walk_observed: schedule table shorter than horizon");
  detail::dispatch_words(d, [&](auto words) {
    detail::run_core<decltype(words)::value, true>(d, horizon, xi, gamma, p_table, rng, obs);
  });
}

/// Full record of one walk: positions, first-visit flags, excitation flags,
/// and both increment draws of every excited step.
class WalkTrace {
public:
  struct ExcitedDraw {
    std::uint64_t step;
    std::size_t gamma_atom;
    std::vector<std::int64_t> gamma_increment;
    std::vector<std::int64_t> xi_shadow;
  };

  WalkTrace(int d, std::uint64_t horizon) : d_(d) {
    try {
      pos_.assign((horizon + 1) * static_cast<std::size_t>(d), 0);
      first_visit_.assign(horizon + 1, 0);
      excited_.assign(horizon + 1, 0);
    } catch (const std::bad_alloc&) {
      throw ResourceError("walk trace allocation failed at horizon " + std::to_string(horizon));
    }
    first_visit_[0] = 1;
  }

  int dimension() const { return d_; }
  std::uint64_t horizon() const { return first_visit_.size() - 1; }

  std::span<const std::int64_t> position(std::uint64_t i) const {
    return {pos_.data() + i * d_, static_cast<std::size_t>(d_)};
  }
  bool first_visit(std::uint64_t i) const { return first_visit_[i] != 0; }
  bool excited(std::uint64_t i) const { return excited_[i] != 0; }
  const std::vector<ExcitedDraw>& excited_draws() const { return excited_draws_; }

  void record(const StepView& v) {
    auto* dst = pos_.data() + v.step * d_;
    for (int j = 0; j < d_; ++j) dst[j] = v.position[j];
    first_visit_[v.step] = v.first_visit ? 1 : 0;
    excited_[v.step] = v.excited ? 1 : 0;
    if (v.excited)
      excited_draws_.push_back({v.step,
                                v.gamma_atom,
                                {v.gamma_increment.begin(), v.gamma_increment.end()},
                                {v.xi_shadow.begin(), v.xi_shadow.end()}});
  }

private:
  int d_;
  std::vector<std::int64_t> pos_;
  std::vector<std::uint8_t> first_visit_;
  std::vector<std::uint8_t> excited_;
  std::vector<ExcitedDraw> excited_draws_;
};

struct TraceObserver {
  WalkTrace* trace;
  void on_step(const StepView& v) { trace->record(v); }
};

/// Runs the walk defined by cfg on stream(seed, stream_index) and returns the
/// full trace. Identical inputs give a byte-identical trace.
inline WalkTrace run_walk(const WalkConfig& cfg, std::uint64_t stream_index = 0) {
  validate_walk_config(cfg);
  WalkTrace trace(cfg.d, cfg.horizon);
  TraceObserver obs{&trace};
  const std::vector<double> p = cfg.schedule.table(cfg.horizon);
  run_walk_observed(cfg, p, Xoshiro256pp::for_stream(cfg.seed, stream_index), obs);
  return trace;
}

/// First time n >= 1 with X_n = 0 for the plain walk, or horizon + 1 when the
/// walk stays away through the whole window. No range bookkeeping; this is
/// the hot path of escape-probability estimation.
template <class Rng>
std::uint64_t first_return_time(int d, const IncrementDistribution& law, std::uint64_t horizon,
                                Rng rng) {
  check_packed_range(d, horizon, law.max_abs_coord());
  return detail::dispatch_words(d, [&](auto words) -> std::uint64_t {
    constexpr std::size_t W = decltype(words)::value;
    const detail::PackedLaw<W> packed(law);
    std::array<std::int64_t, kMaxDimension> zero{};
    const PackedSite<W> origin = pack_site<W>({zero.data(), static_cast<std::size_t>(d)});
    PackedSite<W> pos = origin;
    for (std::uint64_t i = 1; i <= horizon; ++i) {
      packed_add(pos, packed.deltas[law.sample_index(rng)]);
      if (pos == origin) return i;
    }
    return horizon + 1;
  });
}

}  // namespace pnerw
