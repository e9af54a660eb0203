#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pnerw/coupling.hpp"
#include "pnerw/excitation.hpp"
#include "pnerw/lattice.hpp"
#include "pnerw/montecarlo.hpp"
#include "pnerw/walk.hpp"

namespace pnerw::diag {

/// One named check inside a test. pass is statistic <= threshold when
/// at_most, statistic >= threshold otherwise.
struct Clause {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool at_most = true;
  bool pass = false;
};

struct TestReport {
  std::string name;
  double statistic = 0.0;  // worst clause, normalized margin
  double threshold = 0.0;
  bool pass = false;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
  std::vector<Clause> clauses;
  std::string note;

  void add(std::string clause_name, double statistic_, double threshold_, bool at_most = true);
  void finalize();
  std::string table() const;  // aligned human-readable rows
};

struct ExecContext {
  int parallelism = 0;  // 0 = hardware
};

/// Drift-envelope coefficients of the d >= 4 cone result.
struct ConeConstants {
  double mu_gamma;
  double pi_d_hat;
  double pi_dk_hat;

  ConeConstants(double mu_gamma_, double pi_d_hat_, double pi_dk_hat_);

  double c1() const;  // mu_gamma * (1 - sqrt(1 - pi_dk_hat))
  double c2() const;  // mu_gamma * sqrt(pi_d_hat)
};

struct GaussianThresholds {
  double ks = 0.02;
  double mean_norm = 0.02;
  double cov_entry = 0.02;
};

/// Per-(t, coordinate) marginal samples of the rescaled path.
struct MarginalSamples {
  std::uint64_t n = 0;
  std::vector<double> t_points;
  // samples[ti][coord][replica]
  std::vector<std::vector<std::vector<double>>> samples;
};

MarginalSamples collect_marginals(const WalkConfig& cfg, std::uint64_t n,
                                  std::span<const double> t_points, std::uint64_t replicas,
                                  const ExecContext& ctx);

/// Pure verdict logic, separated so corrupted fixtures can exercise it.
TestReport gaussian_marginal_check(const MarginalSamples& samples,
                                   std::span<const double> cov_target_row_major, int d,
                                   const GaussianThresholds& thresholds);

/// Fixed-t marginals against the centered Gaussian with covariance
/// t * E[xi xi^T]. Valid for beta > 1/2 (any d >= 2) and beta = 1/2, d = 2.
TestReport test_gaussian_marginal(const WalkConfig& cfg, std::uint64_t n,
                                  std::span<const double> t_points, std::uint64_t replicas,
                                  const ExecContext& ctx = {},
                                  const GaussianThresholds& thresholds = {});

/// Fraction of replicas with |R_m| <= delta * m throughout m in [n/10, n];
/// requires beta = 1/2 and delta at least pi_hat + margin.
TestReport test_range_upper(const WalkConfig& cfg, double delta, std::uint64_t n,
                            std::uint64_t replicas, double pi_hat, double margin = 0.05,
                            double required_fraction = 0.99, const ExecContext& ctx = {});

/// Joint per-replica samples of |K_{nt}| and the rescaled position at grid
/// times; one collection feeds both the band and the cone test.
struct ConeSamples {
  std::uint64_t n = 0;
  std::vector<double> t_points;
  std::vector<std::vector<double>> k_scaled;             // [ti][replica], |K_nt| / sqrt(n)
  std::vector<std::vector<std::vector<double>>> b_hat;   // [ti][coord][replica]
};

ConeSamples collect_cone_samples(const WalkConfig& cfg, std::uint64_t n,
                                 std::span<const double> t_points, std::uint64_t replicas,
                                 const ExecContext& ctx);

TestReport kn_band_check(const ConeSamples& samples, double pi_d_hat, double pi_dk_hat,
                         double required_fraction = 0.95);

TestReport cone_drift_check(const ConeSamples& samples, const ConeConstants& constants,
                            const Direction& ell, const CoordinateSubset& subset);

/// Excitation-count confinement band at beta = 1/2, d >= 4: at each grid t,
/// at least the required fraction of replicas must land inside
/// [2 sqrt(t)(1 - sqrt(1 - pi_dk)) - eps, 2 sqrt(t pi_d) + eps],
/// eps = max(0.05, 4 n^{-1/4}).
TestReport test_kn_band(const WalkConfig& cfg, const CoordinateSubset& subset, std::uint64_t n,
                        std::span<const double> t_points, std::uint64_t replicas, double pi_d_hat,
                        double pi_dk_hat, const ExecContext& ctx = {});

/// Mean-drift consequence of the cone domination: the empirical mean of
/// B-hat_t . ell must lie in [2 c1 sqrt(t) - eps, 2 c2 sqrt(t) + eps] with
/// eps = max(0.05, 4 sd / sqrt(replicas)); off-span coordinate means within
/// +-eps of zero. The finite-n band is a heuristic discretization of a
/// limit-point statement and reports label it as such.
TestReport test_cone_drift(const WalkConfig& cfg, const CoordinateSubset& subset, std::uint64_t n,
                           std::span<const double> t_points, std::uint64_t replicas,
                           double pi_d_hat, double pi_dk_hat, const ExecContext& ctx = {});

struct JvLadderRow {
  std::uint64_t n = 0;
  double fraction_out_j = 0.0;
  double fraction_out_v = 0.0;
  double mean_j_scaled = 0.0;
  double mean_v_scaled = 0.0;
};

struct JvResult {
  TestReport report;
  std::vector<JvLadderRow> ladder;
};

/// J_n(delta)/sqrt(n) -> 2 sqrt(delta) and V_n(delta')/sqrt(n) ->
/// 2 - 2 sqrt(1 - delta'): the out-of-tolerance fraction must shrink along
/// the ladder and end below 1%.
JvResult test_jv_asymptotics(double delta, double delta_prime,
                             std::span<const std::uint64_t> n_ladder, std::uint64_t replicas,
                             std::uint64_t seed, double tolerance = 0.05,
                             double top_fraction = 0.01, const ExecContext& ctx = {});

struct DProcessResult {
  TestReport report;
  std::vector<std::uint64_t> ladder;
  std::vector<double> medians;
};

/// Medians of sup_t ||D-hat^n_t|| over an n-ladder must strictly decrease and
/// finish at or below the final threshold. Requires beta > 1/2.
DProcessResult test_d_process_vanishes(const WalkConfig& cfg,
                                       std::span<const std::uint64_t> n_ladder, double T,
                                       std::uint64_t replicas, double final_threshold = 0.05,
                                       const ExecContext& ctx = {});

/// Verdict core for the stopped-increment i.i.d. checks, exposed for the
/// corrupted-sampler fixtures: pooled_counts are per-atom totals of the
/// excitation-time gamma draws, pair_table the lag-1 contingency counts.
TestReport stopped_increments_check(std::span<const std::uint64_t> pooled_counts,
                                    std::span<const double> masses,
                                    std::span<const std::uint64_t> pair_table, int atoms,
                                    double level);

/// Pools the gamma draws taken at excitation times across replicas:
/// chi-square against the gamma law plus a lag-1 independence table on
/// consecutive excited draws within each walk.
TestReport test_stopped_increments_iid(const WalkConfig& cfg, std::uint64_t n,
                                       std::uint64_t replicas, double level = 0.01,
                                       std::uint64_t min_pooled = 1000,
                                       const ExecContext& ctx = {});

/// LLN cross-check for the plain walk: mean |R_n|/n against the escape
/// probability estimated independently by estimate_pi.
TestReport test_range_lln_iid(int d, const IncrementDistribution& law, std::uint64_t n,
                              std::uint64_t replicas, std::uint64_t seed, double pi_hat,
                              double tolerance = 0.02, const ExecContext& ctx = {});

struct ProbeRow {
  std::uint64_t n = 0;
  double mean_range_over_n = 0.0;
  double ci_halfwidth = 0.0;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;
  double pi_hat = 0.0;
  std::string note;
  std::string table() const;
};

/// Exploratory ladder of mean |R_n|/n next to the escape probability;
/// emits numbers only, never a verdict.
ProbeReport probe_conjecture_range(const WalkConfig& cfg,
                                   std::span<const std::uint64_t> n_ladder,
                                   std::uint64_t replicas, double pi_hat,
                                   const ExecContext& ctx = {});

}  // namespace pnerw::diag
