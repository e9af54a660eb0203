#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pnerw/lattice.hpp"
#include "pnerw/walk.hpp"

namespace pnerw::io {

/// Parsed form of the key-value config file. Sections: [model],
/// [experiment], [diagnostics]. Unknown sections or keys are hard errors.
struct ModelSection {
  int d = 0;
  double beta = 0.0;
  double c = 1.0;
  std::string ell = "e1";           // "eK" or a comma list of components
  std::string xi = "example-xi";    // "example-xi" or "inline"
  std::string gamma = "example-gamma";
  std::optional<double> delta;      // example-gamma drift parameter
  std::string xi_atoms;             // "(1,0):0.5; (-1,0):0.5" when inline
  std::string gamma_atoms;
  std::vector<int> subset;          // drift-spanning axes, optional
};

struct ExperimentSection {
  std::uint64_t horizon = 0;
  std::uint64_t replicas = 1;
  std::vector<double> checkpoints;
  std::uint64_t seed = 1;
  int parallelism = 0;  // 0 = hardware
  bool write_trace = false;
};

struct DiagnosticsSection {
  std::string test;
  std::vector<double> t_points;
  std::optional<std::uint64_t> n;
  std::vector<std::uint64_t> n_ladder;
  std::optional<double> delta;
  std::optional<double> delta_prime;
  std::optional<double> T;
  std::optional<double> level;
  std::optional<double> tolerance;
  std::string pi_manifest;
  std::string pi_manifest_lazy;
};

struct ConfigFile {
  ModelSection model;
  ExperimentSection experiment;
  DiagnosticsSection diagnostics;
};

struct ParseError {
  int line = 0;
  std::string message;
};

struct ParseResult {
  std::optional<ConfigFile> config;
  std::vector<ParseError> errors;

  bool ok() const { return config.has_value() && errors.empty(); }
};

/// Parses and fully validates; on any problem, config is empty and errors
/// carry line positions.
ParseResult parse_config(std::string_view text);

/// Throwing wrapper; the message lists every error with its line.
ConfigFile parse_config_or_throw(std::string_view text);

/// Canonical serialization; parsing it back yields an equivalent document.
std::string serialize_config(const ConfigFile& cfg);

/// Materializes the model and experiment sections into a walk config,
/// running the full condition validation.
WalkConfig build_walk_config(const ConfigFile& cfg);

/// The subset of drift axes, when configured.
std::optional<CoordinateSubset> build_subset(const ConfigFile& cfg);

/// Rejects a diagnostics request outside the hypotheses of the result it
/// checks (wrong beta/d combination, missing subset).
void validate_diagnostics_regime(const ConfigFile& cfg);

IncrementDistribution build_xi(const ModelSection& m);
IncrementDistribution build_gamma(const ModelSection& m);
Direction build_direction(const ModelSection& m);

}  // namespace pnerw::io
