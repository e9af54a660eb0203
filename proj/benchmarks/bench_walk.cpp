#include <benchmark/benchmark.h>

#include "pnerw/coupling.hpp"
#include "pnerw/montecarlo.hpp"
#include "pnerw/observables.hpp"
#include "pnerw/walk.hpp"

using namespace pnerw;

namespace {

WalkConfig example_config(int d, double gamma_delta, std::uint64_t horizon) {
  return WalkConfig{d,
                    ExcitationSchedule(1.0, 0.5),
                    IncrementDistribution::example_xi(d),
                    IncrementDistribution::example_gamma(d, gamma_delta),
                    Direction::axis(d, 1),
                    horizon,
                    12345};
}

void BM_ExcitedWalk(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const std::uint64_t horizon = 1 << 18;
  auto cfg = example_config(d, d == 4 ? 1.0 : 0.75, horizon);
  const auto p = cfg.schedule.table(horizon);
  std::uint64_t replica = 0;
  for (auto _ : state) {
    NullObserver obs;
    run_walk_observed(cfg, p, Xoshiro256pp::for_stream(cfg.seed, replica++), obs);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * horizon);
}
BENCHMARK(BM_ExcitedWalk)->Arg(2)->Arg(4);

void BM_SurvivalWalk(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto xi = IncrementDistribution::example_xi(d);
  const std::uint64_t horizon = 1 << 18;
  std::uint64_t replica = 0;
  std::uint64_t steps = 0;
  for (auto _ : state) {
    const auto t = first_return_time(d, xi, horizon, Xoshiro256pp::for_stream(7, replica++));
    steps += std::min(t, horizon);
    benchmark::DoNotOptimize(t);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(steps));
}
BENCHMARK(BM_SurvivalWalk)->Arg(2)->Arg(4);

void BM_VisitedSetInsert(benchmark::State& state) {
  // Same access pattern as a walk: mostly clustered revisits.
  Xoshiro256pp rng(3);
  const auto xi = IncrementDistribution::example_xi(4);
  for (auto _ : state) {
    state.PauseTiming();
    VisitedSet<2> set(1 << 18);
    std::array<std::int64_t, 4> pos{};
    PackedSite<2> packed = pack_site<2>({pos.data(), 4});
    state.ResumeTiming();
    for (int i = 0; i < (1 << 18); ++i) {
      packed_add(packed, pack_delta<2>(xi.atom(xi.sample_index(rng))));
      benchmark::DoNotOptimize(set.insert(packed));
    }
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * (1 << 18));
}
BENCHMARK(BM_VisitedSetInsert);

void BM_UniformDraw(benchmark::State& state) {
  Xoshiro256pp rng(1);
  double acc = 0.0;
  for (auto _ : state) acc += rng.uniform();
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_UniformDraw);

void BM_JvCounts(benchmark::State& state) {
  std::uint64_t replica = 0;
  for (auto _ : state) {
    auto rng = Xoshiro256pp::for_stream(11, replica++);
    benchmark::DoNotOptimize(jv_counts(0.64, 0.36, 1 << 18, rng));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * (1 << 18));
}
BENCHMARK(BM_JvCounts);

void BM_CoupledWalk(benchmark::State& state) {
  const std::uint64_t horizon = 1 << 16;
  auto cfg = example_config(4, 1.0, horizon);
  const auto p = cfg.schedule.table(horizon);
  const CoordinateSubset subset({1}, 4);
  std::uint64_t replica = 0;
  struct Sink {
    void on_coupled_step(const StepView&, std::span<const std::int64_t>, bool, std::uint64_t) {}
  };
  for (auto _ : state) {
    Sink sink;
    run_coupled_observed(cfg, subset, p, Xoshiro256pp::for_stream(cfg.seed, replica++), sink);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * horizon);
}
BENCHMARK(BM_CoupledWalk);

}  // namespace

BENCHMARK_MAIN();
