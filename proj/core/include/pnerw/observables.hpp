#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "pnerw/error.hpp"
#include "pnerw/lattice.hpp"
#include "pnerw/walk.hpp"

namespace pnerw {

/// |R_n| for n = 0..horizon: one plus the number of first visits after time 0.
inline std::vector<std::uint64_t> range_series(const WalkTrace& trace) {
  std::vector<std::uint64_t> r(trace.horizon() + 1);
  r[0] = 1;
  for (std::uint64_t i = 1; i <= trace.horizon(); ++i)
    r[i] = r[i - 1] + (trace.first_visit(i) ? 1 : 0);
  return r;
}

/// |K_n| for n = 0..horizon: excited steps among 1..n.
inline std::vector<std::uint64_t> k_series(const WalkTrace& trace) {
  std::vector<std::uint64_t> k(trace.horizon() + 1);
  k[0] = 0;
  for (std::uint64_t i = 1; i <= trace.horizon(); ++i)
    k[i] = k[i - 1] + (trace.excited(i) ? 1 : 0);
  return k;
}

/// |K_n| recomputed through the stopping-time form: enumerate the first-visit
/// times psi_j and count excitations at phi_j = psi_j + 1. Independent of the
/// running count above; the two must agree exactly.
inline std::uint64_t k_count_via_stopping_times(const WalkTrace& trace, std::uint64_t n) {
  if (n > trace.horizon()) throw DomainError("k_count_via_stopping_times: n beyond horizon");
  std::uint64_t count = 0;
  for (std::uint64_t psi = 0; psi + 1 <= n; ++psi) {
    if (!trace.first_visit(psi)) continue;
    if (trace.excited(psi + 1)) ++count;
  }
  return count;
}

inline std::uint64_t j_window(double delta, std::uint64_t n) {
  if (!(delta > 0.0) || delta > 1.0) throw DomainError("J window: delta must lie in (0, 1]");
  const auto w = static_cast<std::uint64_t>(delta * static_cast<double>(n));
  if (w < 1) throw DomainError("J window: delta * n must be at least 1");
  return w;
}

/// J_n(delta): small-uniform events over the leading window i <= delta*n.
/// The boundary is inclusive, U_i <= i^{-1/2}.
inline std::uint64_t compute_J(double delta, std::uint64_t n, std::span<const double> uniforms) {
  const std::uint64_t w = j_window(delta, n);
  if (uniforms.size() < w) throw DomainError("compute_J: fewer uniforms than the window");
  std::uint64_t count = 0;
  for (std::uint64_t i = 1; i <= w; ++i)
    if (uniforms[i - 1] <= 1.0 / std::sqrt(static_cast<double>(i))) ++count;
  return count;
}

inline double exact_mean_J(double delta, std::uint64_t n) {
  const std::uint64_t w = j_window(delta, n);
  double s = 0.0;
  for (std::uint64_t i = 1; i <= w; ++i)
    s += std::min(1.0 / std::sqrt(static_cast<double>(i)), 1.0);
  return s;
}

inline std::uint64_t v_window_start(double delta_prime, std::uint64_t n) {
  if (!(delta_prime > 0.0) || !(delta_prime < 1.0))
    throw DomainError("V window: delta' must lie in (0, 1)");
  const auto w = static_cast<std::uint64_t>(delta_prime * static_cast<double>(n));
  if (w < 1) throw DomainError("V window: delta' * n must be at least 1");
  return n - w + 1;
}

/// V_n(delta'): small-uniform events over the trailing window
/// i in [n - delta'*n + 1, n]. uniforms[i-1] is U_i, so the full stream of n
/// draws is expected.
inline std::uint64_t compute_V(double delta_prime, std::uint64_t n,
                               std::span<const double> uniforms) {
  const std::uint64_t start = v_window_start(delta_prime, n);
  if (uniforms.size() < n) throw DomainError("compute_V: fewer uniforms than n");
  std::uint64_t count = 0;
  for (std::uint64_t i = start; i <= n; ++i)
    if (uniforms[i - 1] <= 1.0 / std::sqrt(static_cast<double>(i))) ++count;
  return count;
}

inline double exact_mean_V(double delta_prime, std::uint64_t n) {
  const std::uint64_t start = v_window_start(delta_prime, n);
  double s = 0.0;
  for (std::uint64_t i = start; i <= n; ++i)
    s += std::min(1.0 / std::sqrt(static_cast<double>(i)), 1.0);
  return s;
}

/// One pass over a dedicated uniform stream yielding both counts; consumes
/// exactly n draws.
template <class Rng>
std::pair<std::uint64_t, std::uint64_t> jv_counts(double delta, double delta_prime,
                                                  std::uint64_t n, Rng& rng) {
  const std::uint64_t jw = j_window(delta, n);
  const std::uint64_t vstart = v_window_start(delta_prime, n);
  std::uint64_t j = 0, v = 0;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const double u = rng.uniform();
    if (u <= 1.0 / std::sqrt(static_cast<double>(i))) {
      if (i <= jw) ++j;
      if (i >= vstart) ++v;
    }
  }
  return {j, v};
}

/// sup over the grid t in {0, 1/n, ..., T} (plus the interpolated endpoint)
/// of the norm of the rescaled excitation correction
/// (1/sqrt(n)) * sum over excited i <= nt of (gamma_i - xi_i).
/// The correction is constant between excited steps and the interpolant's
/// norm is convex on each segment, so grid evaluation is exact.
inline double d_process_sup(const WalkTrace& trace, std::uint64_t n, double T) {
  if (!(T > 0.0)) throw DomainError("d_process_sup: T must be positive");
  const double nT = static_cast<double>(n) * T;
  const auto cutoff = static_cast<std::uint64_t>(nT);
  const double frac = nT - static_cast<double>(cutoff);
  const std::uint64_t need = cutoff + (frac > 0.0 ? 1 : 0);
  if (trace.horizon() < need)
    throw DomainError("d_process_sup: horizon shorter than ceil(n*T)");

  const int d = trace.dimension();
  std::vector<double> sum(d, 0.0);
  double max2 = 0.0;
  auto norm2 = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };
  for (const auto& draw : trace.excited_draws()) {
    if (draw.step > cutoff) {
      if (draw.step == cutoff + 1 && frac > 0.0) {
        std::vector<double> endpoint = sum;
        for (int j = 0; j < d; ++j)
          endpoint[j] += frac * static_cast<double>(draw.gamma_increment[j] - draw.xi_shadow[j]);
        max2 = std::max(max2, norm2(endpoint));
      }
      break;
    }
    for (int j = 0; j < d; ++j)
      sum[j] += static_cast<double>(draw.gamma_increment[j] - draw.xi_shadow[j]);
    max2 = std::max(max2, norm2(sum));
  }
  return std::sqrt(max2) / std::sqrt(static_cast<double>(n));
}

/// The diffusively rescaled, linearly interpolated path sampled on a grid.
struct RescaledPath {
  std::uint64_t n;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // one d-vector per grid time
};

inline RescaledPath rescale_path(const WalkTrace& trace, std::uint64_t n,
                                 std::span<const double> grid) {
  const int d = trace.dimension();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  RescaledPath out;
  out.n = n;
  for (double t : grid) {
    if (t < 0.0) throw DomainError("rescale_path: negative grid time");
    const double nt = static_cast<double>(n) * t;
    const auto k = static_cast<std::uint64_t>(nt);
    const double frac = nt - static_cast<double>(k);
    if (k > trace.horizon() || (frac > 0.0 && k + 1 > trace.horizon()))
      throw DomainError("rescale_path: grid beyond horizon");
    std::vector<double> v(d, 0.0);
    const auto xk = trace.position(k);
    if (frac > 0.0) {
      const auto xk1 = trace.position(k + 1);
      for (int j = 0; j < d; ++j)
        v[j] = (static_cast<double>(xk[j]) +
                frac * static_cast<double>(xk1[j] - xk[j])) /
               sqrt_n;
    } else {
      for (int j = 0; j < d; ++j) v[j] = static_cast<double>(xk[j]) / sqrt_n;
    }
    out.times.push_back(t);
    out.values.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Online accumulators for horizons where keeping a trace is not an option.
// Each is a walk observer owned by a single replica.
// ---------------------------------------------------------------------------

/// Tracks whether |R_m| <= delta * m held for every m in [m_lo, m_hi].
struct RangeBoundWatch {
  double delta;
  std::uint64_t m_lo;
  std::uint64_t m_hi;
  bool violated = false;

  void on_step(const StepView& v) {
    if (v.step < m_lo || v.step > m_hi) return;
    if (static_cast<double>(v.range_size) > delta * static_cast<double>(v.step)) violated = true;
  }
};

/// Running sup of the excitation-correction norm, raw (unscaled) sums.
struct DProcessSupAccumulator {
  std::uint64_t max_step;
  std::array<std::int64_t, kMaxDimension> sum{};
  double max2 = 0.0;

  explicit DProcessSupAccumulator(std::uint64_t max_step_) : max_step(max_step_) {}

  void on_step(const StepView& v) {
    if (!v.excited || v.step > max_step) return;
    double n2 = 0.0;
    for (std::size_t j = 0; j < v.gamma_increment.size(); ++j) {
      sum[j] += v.gamma_increment[j] - v.xi_shadow[j];
      n2 += static_cast<double>(sum[j]) * static_cast<double>(sum[j]);
    }
    max2 = std::max(max2, n2);
  }

  double sup_scaled(std::uint64_t n) const { return std::sqrt(max2 / static_cast<double>(n)); }
};

/// Snapshots |R|, |K| and the position at a sorted list of step indices.
struct CheckpointSampler {
  std::vector<std::uint64_t> steps;  // sorted, >= 1
  int d = 0;
  std::vector<std::uint64_t> range_at;
  std::vector<std::uint64_t> k_at;
  std::vector<std::int64_t> position_at;  // flat, d per checkpoint
  std::uint64_t k_running = 0;
  std::size_t next = 0;

  CheckpointSampler(std::vector<std::uint64_t> steps_, int d_)
      : steps(std::move(steps_)), d(d_) {
    range_at.assign(steps.size(), 0);
    k_at.assign(steps.size(), 0);
    position_at.assign(steps.size() * static_cast<std::size_t>(d), 0);
  }

  void on_step(const StepView& v) {
    k_running += v.excited ? 1 : 0;
    while (next < steps.size() && steps[next] == v.step) {
      range_at[next] = v.range_size;
      k_at[next] = k_running;
      auto* dst = position_at.data() + next * static_cast<std::size_t>(d);
      for (int j = 0; j < d; ++j) dst[j] = v.position[j];
      ++next;
    }
  }
};

/// Records the gamma atom index of every excited step, in order.
struct ExcitedAtomLog {
  std::vector<std::uint32_t> atoms;

  void on_step(const StepView& v) {
    if (v.excited) atoms.push_back(static_cast<std::uint32_t>(v.gamma_atom));
  }
};

/// Fans one step event out to several accumulators.
template <class... Obs>
struct FanoutObserver {
  std::tuple<Obs*...> parts;

  explicit FanoutObserver(Obs*... ptrs) : parts(ptrs...) {}

  void on_step(const StepView& v) {
    std::apply([&](auto*... p) { (p->on_step(v), ...); }, parts);
  }
};

}  // namespace pnerw
