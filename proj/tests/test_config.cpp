#include "pnerw/config.hpp"

#include <string>

#include "doctest.h"
#include "pnerw/error.hpp"

using namespace pnerw;

namespace {

const char* kMinimal = R"(# minimal d=2 example
[model]
d = 2
beta = 0.5
c = 1.0
ell = e1
xi = example-xi
gamma = example-gamma
delta = 0.75

[experiment]
horizon = 1000
seed = 42
)";

}  // namespace

TEST_CASE("minimal config parses with defaults filled") {
  const auto result = io::parse_config(kMinimal);
  REQUIRE(result.ok());
  const auto& cfg = *result.config;
  CHECK(cfg.model.d == 2);
  CHECK(cfg.model.beta == doctest::Approx(0.5));
  CHECK(cfg.experiment.replicas == 1);
  CHECK(cfg.experiment.parallelism == 0);
  const auto wc = io::build_walk_config(cfg);
  CHECK(wc.horizon == 1000);
  CHECK(wc.gamma.mass(0) == doctest::Approx(0.375));
}

TEST_CASE("serialize then parse round-trips to an equivalent document") {
  const auto first = io::parse_config_or_throw(kMinimal);
  const std::string echoed = io::serialize_config(first);
  const auto second = io::parse_config_or_throw(echoed);
  CHECK(io::serialize_config(second) == echoed);
  CHECK(second.model.d == first.model.d);
  CHECK(second.model.delta == first.model.delta);
  CHECK(second.experiment.horizon == first.experiment.horizon);
  CHECK(second.experiment.seed == first.experiment.seed);
}

TEST_CASE("delta outside (1/2, 1] is rejected with the rule named") {
  std::string bad{kMinimal};
  const auto pos = bad.find("delta = 0.75");
  bad.replace(pos, 12, "delta = 0.4");
  const auto result = io::parse_config(bad);
  REQUIRE_FALSE(result.ok());
  bool mentioned = false;
  for (const auto& e : result.errors)
    if (e.message.find("delta must lie in (1/2, 1]") != std::string::npos) mentioned = true;
  CHECK(mentioned);
}

TEST_CASE("unknown keys are hard errors with line positions") {
  std::string bad{kMinimal};
  bad += "typo_key = 3\n";
  const auto result = io::parse_config(bad);
  REQUIRE_FALSE(result.ok());
  CHECK(result.errors[0].message.find("unknown key 'typo_key'") != std::string::npos);
  CHECK(result.errors[0].line > 0);
}

TEST_CASE("missing required keys are reported") {
  const char* missing = R"([model]
d = 2
beta = 0.5

[experiment]
horizon = 10
)";
  const auto result = io::parse_config(missing);
  REQUIRE_FALSE(result.ok());
  bool found = false;
  for (const auto& e : result.errors)
    if (e.message.find("missing required key 'seed'") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("duplicate keys and malformed lines carry line numbers") {
  const char* bad = R"([model]
d = 2
d = 3
beta = 0.5
this is not a key value pair
)";
  const auto result = io::parse_config(bad);
  REQUIRE_FALSE(result.ok());
  CHECK(result.errors.size() >= 2);
  CHECK(result.errors[0].line == 3);
}

TEST_CASE("gaussian-marginal regime is enforced at parse time") {
  std::string bad = R"([model]
d = 4
beta = 0.5
c = 1.0
ell = e1
xi = example-xi
gamma = example-gamma
delta = 0.75

[experiment]
horizon = 100
seed = 1

[diagnostics]
test = gaussian-marginal
)";
  const auto result = io::parse_config(bad);
  REQUIRE_FALSE(result.ok());
  bool regime = false;
  for (const auto& e : result.errors)
    if (e.message.find("beta = 1/2 with d = 2") != std::string::npos) regime = true;
  CHECK(regime);
}

TEST_CASE("cone tests demand subset dimensions at parse time") {
  std::string bad = R"([model]
d = 4
beta = 0.5
c = 1.0
ell = e1
xi = example-xi
gamma = example-gamma
delta = 1.0
subset = 1,2

[experiment]
horizon = 100
seed = 1

[diagnostics]
test = kn-band
)";
  const auto result = io::parse_config(bad);
  REQUIRE_FALSE(result.ok());
  bool named = false;
  for (const auto& e : result.errors)
    if (e.message.find("|subset| <= d - 3") != std::string::npos) named = true;
  CHECK(named);
}

TEST_CASE("inline atom lists parse into distributions") {
  const char* inline_cfg = R"([model]
d = 2
beta = 0.75
c = 1.0
ell = e1
xi = inline
xi_atoms = (1,0):0.5; (-1,0):0.5
gamma = inline
gamma_atoms = (1,0):1.0

[experiment]
horizon = 50
seed = 7
)";
  const auto cfg = io::parse_config_or_throw(inline_cfg);
  const auto wc = io::build_walk_config(cfg);
  CHECK(wc.xi.atom_count() == 2);
  CHECK(wc.gamma.atom_count() == 1);
  CHECK(wc.gamma.mass(0) == doctest::Approx(1.0));
}

TEST_CASE("direction specs accept axes and component lists") {
  std::string two_axis{kMinimal};
  const auto pos = two_axis.find("ell = e1");
  two_axis.replace(pos, 8, "ell = 1.0,1.0");
  // gamma drifts along e1 only; the diagonal direction still has positive
  // drift, so the config is accepted.
  const auto cfg = io::parse_config_or_throw(two_axis);
  const auto wc = io::build_walk_config(cfg);
  CHECK(wc.ell[0] == doctest::Approx(std::sqrt(0.5)));
}
