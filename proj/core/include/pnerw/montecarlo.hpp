#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pnerw/error.hpp"
#include "pnerw/excitation.hpp"
#include "pnerw/observables.hpp"
#include "pnerw/rng.hpp"
#include "pnerw/walk.hpp"

namespace pnerw::mc {

inline int resolve_parallelism(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Rejects stream collisions across the replica range. The derivation is
/// injective by construction, so this only guards against a future change
/// to the mixing function.
inline void validate_streams(std::uint64_t seed, std::uint64_t replicas) {
  std::unordered_set<std::uint64_t> roots;
  roots.reserve(replicas);
  for (std::uint64_t r = 0; r < replicas; ++r)
    if (!roots.insert(Xoshiro256pp::stream_root(seed, r)).second)
      throw ConfigError("replica stream collision at index " + std::to_string(r));
}

/// Deterministic parallel map over replica indices. fn(replica) -> T runs on
/// worker threads; results land in a vector indexed by replica, so the output
/// is identical for any worker count or scheduling order. A throwing replica
/// aborts the experiment; nothing partial is returned.
template <class T, class Fn>
std::vector<T> map_replicas(std::uint64_t replicas, int parallelism, Fn&& fn) {
  const int workers = static_cast<int>(
      std::min<std::uint64_t>(replicas, static_cast<std::uint64_t>(resolve_parallelism(parallelism))));
  std::vector<T> results(replicas);
  if (workers <= 1) {
    for (std::uint64_t r = 0; r < replicas; ++r) results[r] = fn(r);
    return results;
  }
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    constexpr std::uint64_t kBlock = 8;
    while (!failed.load(std::memory_order_relaxed)) {
      const std::uint64_t begin = next.fetch_add(kBlock);
      if (begin >= replicas) return;
      const std::uint64_t end = std::min(begin + kBlock, replicas);
      try {
        for (std::uint64_t r = begin; r < end; ++r) results[r] = fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed.load()) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      throw ResourceError(std::string("experiment aborted, partial results discarded: ") +
                          e.what());
    }
  }
  return results;
}

/// Per-replica terminal statistics plus the stream that reproduces them.
struct ReplicaSummary {
  std::uint64_t replica = 0;
  std::uint64_t stream_root = 0;
  std::vector<std::int64_t> final_position;
  std::uint64_t range = 0;
  std::uint64_t k_count = 0;
  double d_sup_scaled = 0.0;  // sup over [0, horizon/n], n = horizon
  std::vector<std::uint64_t> checkpoint_steps;
  std::vector<std::uint64_t> checkpoint_range;
  std::vector<std::uint64_t> checkpoint_k;
};

struct ExperimentPlan {
  WalkConfig base;
  std::uint64_t replicas = 1;
  std::vector<double> checkpoint_times;  // fractions t of the horizon, in (0, 1]
  int parallelism = 0;                   // 0 = hardware
};

inline void validate_plan(const ExperimentPlan& plan) {
  validate_walk_config(plan.base);
  if (plan.replicas < 1) throw ConfigError("experiment needs at least one replica");
  for (double t : plan.checkpoint_times)
    if (!(t > 0.0) || t > 1.0) throw ConfigError("checkpoint times must lie in (0, 1]");
  validate_streams(plan.base.seed, plan.replicas);
}

/// Executes the plan; replica r is a pure function of (base config, r).
inline std::vector<ReplicaSummary> run_experiment(const ExperimentPlan& plan) {
  validate_plan(plan);
  const WalkConfig& cfg = plan.base;
  const std::vector<double> p_table = cfg.schedule.table(cfg.horizon);
  std::vector<std::uint64_t> checkpoint_steps;
  for (double t : plan.checkpoint_times)
    checkpoint_steps.push_back(
        static_cast<std::uint64_t>(t * static_cast<double>(cfg.horizon)));
  std::sort(checkpoint_steps.begin(), checkpoint_steps.end());

  return map_replicas<ReplicaSummary>(plan.replicas, plan.parallelism, [&](std::uint64_t r) {
    CheckpointSampler checkpoints(checkpoint_steps, cfg.d);
    DProcessSupAccumulator dsup(cfg.horizon);
    struct Terminal {
      int d;
      std::vector<std::int64_t> final_position;
      std::uint64_t range = 1;
      std::uint64_t k = 0;
      void on_step(const StepView& v) {
        range = v.range_size;
        k += v.excited ? 1 : 0;
        for (int j = 0; j < d; ++j) final_position[j] = v.position[j];
      }
    } terminal{cfg.d, std::vector<std::int64_t>(cfg.d, 0)};
    FanoutObserver<CheckpointSampler, DProcessSupAccumulator, Terminal> fan(&checkpoints, &dsup,
                                                                            &terminal);
    run_walk_observed(cfg, p_table, Xoshiro256pp::for_stream(cfg.seed, r), fan);

    ReplicaSummary s;
    s.replica = r;
    s.stream_root = Xoshiro256pp::stream_root(cfg.seed, r);
    s.final_position = std::move(terminal.final_position);
    s.range = terminal.range;
    s.k_count = terminal.k;
    s.d_sup_scaled = cfg.horizon > 0 ? dsup.sup_scaled(cfg.horizon) : 0.0;
    s.checkpoint_steps = checkpoint_steps;
    s.checkpoint_range = std::move(checkpoints.range_at);
    s.checkpoint_k = std::move(checkpoints.k_at);
    return s;
  });
}

/// Escape-probability ladder: the fraction of replicas that have not touched
/// the origin again by each horizon. Finite horizons only ever overestimate
/// the true escape probability, so the whole ladder is reported and the
/// largest horizon is read as the estimate.
struct PiEstimate {
  std::vector<std::uint64_t> horizons;
  std::vector<double> survival_fraction;
  std::vector<double> ci_halfwidth;  // 95% binomial
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;

  double plateau() const { return survival_fraction.back(); }
  double plateau_ci() const { return ci_halfwidth.back(); }
};

inline PiEstimate estimate_pi(int d, const IncrementDistribution& law,
                              std::vector<std::uint64_t> horizons, std::uint64_t replicas,
                              std::uint64_t seed, int parallelism) {
  if (horizons.empty()) throw ConfigError("estimate_pi: need at least one horizon");
  for (std::size_t i = 0; i + 1 < horizons.size(); ++i)
    if (horizons[i] >= horizons[i + 1]) throw ConfigError("estimate_pi: horizons must increase");
  if (replicas < 1000) throw ConfigError("estimate_pi: needs at least 1000 replicas");
  validate_streams(seed, replicas);

  const std::uint64_t max_h = horizons.back();
  const std::vector<std::uint64_t> times =
      map_replicas<std::uint64_t>(replicas, parallelism, [&](std::uint64_t r) {
        return first_return_time(d, law, max_h, Xoshiro256pp::for_stream(seed, r));
      });

  PiEstimate est;
  est.horizons = std::move(horizons);
  est.replicas = replicas;
  est.seed = seed;
  for (std::uint64_t h : est.horizons) {
    std::uint64_t survived = 0;
    for (std::uint64_t t : times) survived += (t > h) ? 1 : 0;
    const double frac = static_cast<double>(survived) / static_cast<double>(replicas);
    est.survival_fraction.push_back(frac);
    est.ci_halfwidth.push_back(1.96 * std::sqrt(frac * (1.0 - frac) / static_cast<double>(replicas)));
  }
  return est;
}

}  // namespace pnerw::mc
