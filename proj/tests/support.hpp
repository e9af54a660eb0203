#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include "pnerw/walk.hpp"

namespace pnerw::testing {

/// Feeds a scripted sequence of "uniforms" into the engine; the walk consumes
/// one per U draw and one per increment draw, in the documented order.
struct ScriptedRng {
  std::vector<double> values;
  std::size_t next = 0;
  std::size_t* consumed = nullptr;  // survives pass-by-value into the engine

  double uniform() {
    if (next >= values.size()) throw std::runtime_error("scripted rng exhausted");
    if (consumed) ++*consumed;
    return values[next++];
  }
};

/// Builds a trace directly from positions and flags, for observable tests
/// that want hand-picked paths.
struct TraceBuilder {
  WalkTrace trace;

  TraceBuilder(int d, std::uint64_t horizon) : trace(d, horizon) {}

  TraceBuilder& step(std::uint64_t i, std::vector<std::int64_t> position,
                     std::vector<std::int64_t> increment, bool first_visit, bool excited = false,
                     std::vector<std::int64_t> gamma_inc = {},
                     std::vector<std::int64_t> xi_shadow = {}, std::uint64_t range = 0) {
    StepView v;
    v.step = i;
    v.position = position;
    v.increment = increment;
    v.first_visit = first_visit;
    v.excited = excited;
    v.gamma_increment = gamma_inc;
    v.xi_shadow = xi_shadow;
    v.gamma_atom = 0;
    v.range_size = range;
    trace.record(v);
    return *this;
  }
};

}  // namespace pnerw::testing
