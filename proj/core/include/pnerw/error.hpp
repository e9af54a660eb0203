#pragma once

#include <stdexcept>
#include <string>

namespace pnerw {

/// Invalid model or experiment configuration (bad dimension, masses, ranges).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Arguments outside an operation's domain (n = 0, grid beyond horizon, ...).
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A statistical test was asked to run outside the hypotheses of the result
/// it checks; the message names the applicable regime.
class RegimeError : public std::runtime_error {
public:
  explicit RegimeError(const std::string& what) : std::runtime_error(what) {}
};

/// A test cannot produce a meaningful verdict with the given inputs
/// (too few samples, band margin below the estimator noise).
class InconclusiveError : public std::runtime_error {
public:
  explicit InconclusiveError(const std::string& what) : std::runtime_error(what) {}
};

/// Allocation failure or a worker dying mid-experiment.
class ResourceError : public std::runtime_error {
public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pnerw
