#include "pnerw/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pnerw/stats.hpp"

namespace pnerw::diag {

namespace {

// Margin of a clause: positive slack means pass with room. Used to pick the
// headline statistic of a report.
double clause_margin(const Clause& c) {
  return c.at_most ? c.threshold - c.statistic : c.statistic - c.threshold;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Steps whose positions are needed to evaluate B-hat at t: floor(nt), plus
// its successor when nt is fractional.
std::vector<std::uint64_t> checkpoint_steps_for(std::span<const double> t_points,
                                                std::uint64_t n) {
  std::vector<std::uint64_t> steps;
  for (double t : t_points) {
    if (!(t >= 0.0) || t > 1.0) throw DomainError("grid times must lie in [0, 1]");
    const double nt = static_cast<double>(n) * t;
    const auto k = static_cast<std::uint64_t>(nt);
    if (k >= 1) steps.push_back(k);
    if (nt - static_cast<double>(k) > 0.0) steps.push_back(k + 1);
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

std::size_t index_of_step(const std::vector<std::uint64_t>& steps, std::uint64_t s) {
  return static_cast<std::size_t>(
      std::lower_bound(steps.begin(), steps.end(), s) - steps.begin());
}

}  // namespace

void TestReport::add(std::string clause_name, double statistic_, double threshold_,
                     bool at_most) {
  Clause c;
  c.name = std::move(clause_name);
  c.statistic = statistic_;
  c.threshold = threshold_;
  c.at_most = at_most;
  c.pass = at_most ? statistic_ <= threshold_ : statistic_ >= threshold_;
  clauses.push_back(std::move(c));
}

void TestReport::finalize() {
  pass = true;
  for (const Clause& c : clauses) pass = pass && c.pass;
  // The clause with the least slack becomes the headline statistic.
  const Clause* worst = nullptr;
  for (const Clause& c : clauses)
    if (!worst || clause_margin(c) < clause_margin(*worst)) worst = &c;
  if (worst) {
    statistic = worst->statistic;
    threshold = worst->threshold;
  }
}

std::string TestReport::table() const {
  std::ostringstream out;
  out << (pass ? "[PASS] " : "[FAIL] ") << name << "  (replicas=" << replicas
      << ", seed=" << seed << ")\n";
  for (const Clause& c : clauses) {
    out << "  " << (c.pass ? " ok  " : " FAIL") << "  " << c.name << ": " << fmt(c.statistic)
        << (c.at_most ? " <= " : " >= ") << fmt(c.threshold) << "\n";
  }
  if (!note.empty()) out << "  note: " << note << "\n";
  return out.str();
}

ConeConstants::ConeConstants(double mu_gamma_, double pi_d_hat_, double pi_dk_hat_)
    : mu_gamma(mu_gamma_), pi_d_hat(pi_d_hat_), pi_dk_hat(pi_dk_hat_) {
  if (!(mu_gamma > 0.0)) throw ConfigError("cone constants: mu_gamma must be positive");
  if (!(pi_d_hat > 0.0) || pi_d_hat > 1.0 || !(pi_dk_hat > 0.0) || pi_dk_hat > 1.0)
    throw ConfigError("cone constants: escape probabilities must lie in (0, 1]");
  if (c1() > c2())
    throw ConfigError("cone constants: c1 > c2, the escape estimates are inconsistent");
}

double ConeConstants::c1() const { return mu_gamma * (1.0 - std::sqrt(1.0 - pi_dk_hat)); }
double ConeConstants::c2() const { return mu_gamma * std::sqrt(pi_d_hat); }

// ---------------------------------------------------------------------------
// Gaussian marginals
// ---------------------------------------------------------------------------

MarginalSamples collect_marginals(const WalkConfig& cfg, std::uint64_t n,
                                  std::span<const double> t_points, std::uint64_t replicas,
                                  const ExecContext& ctx) {
  validate_walk_config(cfg);
  if (cfg.horizon < n) throw DomainError("collect_marginals: horizon shorter than n");
  const std::vector<std::uint64_t> steps = checkpoint_steps_for(t_points, n);
  const std::vector<double> p_table = cfg.schedule.table(cfg.horizon);
  const int d = cfg.d;

  struct PerReplica {
    std::vector<std::int64_t> positions;  // flat per checkpoint
  };
  const auto results = mc::map_replicas<PerReplica>(replicas, ctx.parallelism, [&](std::uint64_t r) {
    CheckpointSampler sampler(steps, d);
    run_walk_observed(cfg, p_table, Xoshiro256pp::for_stream(cfg.seed, r), sampler);
    return PerReplica{std::move(sampler.position_at)};
  });

  MarginalSamples out;
  out.n = n;
  out.t_points.assign(t_points.begin(), t_points.end());
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  out.samples.resize(t_points.size());
  for (std::size_t ti = 0; ti < t_points.size(); ++ti) {
    const double nt = static_cast<double>(n) * t_points[ti];
    const auto k = static_cast<std::uint64_t>(nt);
    const double frac = nt - static_cast<double>(k);
    out.samples[ti].assign(d, std::vector<double>(replicas, 0.0));
    for (std::uint64_t r = 0; r < replicas; ++r) {
      for (int j = 0; j < d; ++j) {
        double xk = 0.0, xk1 = 0.0;
        if (k >= 1) {
          const std::size_t si = index_of_step(steps, k);
          xk = static_cast<double>(results[r].positions[si * d + j]);
        }
        double value = xk;
        if (frac > 0.0) {
          const std::size_t si1 = index_of_step(steps, k + 1);
          xk1 = static_cast<double>(results[r].positions[si1 * d + j]);
          value = xk + frac * (xk1 - xk);
        }
        out.samples[ti][j][r] = value / sqrt_n;
      }
    }
  }
  return out;
}

TestReport gaussian_marginal_check(const MarginalSamples& samples,
                                   std::span<const double> cov_target_row_major, int d,
                                   const GaussianThresholds& thresholds) {
  TestReport report;
  report.name = "gaussian-marginal";
  for (std::size_t ti = 0; ti < samples.t_points.size(); ++ti) {
    const double t = samples.t_points[ti];
    const auto& coords = samples.samples[ti];
    const std::string ts = "t=" + fmt(t);

    // KS distance per coordinate against N(0, t * Sigma_jj).
    for (int j = 0; j < d; ++j) {
      const double sigma = std::sqrt(t * cov_target_row_major[static_cast<std::size_t>(j) * d + j]);
      const double ks = stats::ks_distance(
          coords[j], [sigma](double x) { return stats::normal_cdf(x / sigma); });
      report.add(ts + " ks coord " + std::to_string(j + 1), ks, thresholds.ks);
    }

    // Norm of the empirical mean vector.
    double mean_norm2 = 0.0;
    std::vector<double> means(d, 0.0);
    for (int j = 0; j < d; ++j) {
      means[j] = stats::mean(coords[j]);
      mean_norm2 += means[j] * means[j];
    }
    report.add(ts + " mean norm", std::sqrt(mean_norm2), thresholds.mean_norm);

    // Covariance entries against t * Sigma.
    const std::size_t R = coords[0].size();
    double worst = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        std::vector<double> prod(R);
        for (std::size_t r = 0; r < R; ++r)
          prod[r] = (coords[a][r] - means[a]) * (coords[b][r] - means[b]);
        const double cov =
            stats::pairwise_sum(prod) / static_cast<double>(R - 1);
        const double target = t * cov_target_row_major[static_cast<std::size_t>(a) * d + b];
        worst = std::max(worst, std::abs(cov - target));
      }
    }
    report.add(ts + " max |cov - target|", worst, thresholds.cov_entry);
  }
  report.finalize();
  return report;
}

TestReport test_gaussian_marginal(const WalkConfig& cfg, std::uint64_t n,
                                  std::span<const double> t_points, std::uint64_t replicas,
                                  const ExecContext& ctx, const GaussianThresholds& thresholds) {
  const double beta = cfg.schedule.beta;
  if (!(beta > 0.5 || (beta == 0.5 && cfg.d == 2)))
    throw RegimeError(
        "gaussian-marginal applies for beta > 1/2 in any d >= 2, or beta = 1/2 with d = 2; "
        "got beta = " +
        std::to_string(beta) + ", d = " + std::to_string(cfg.d) +
        " where the rescaled walk keeps a sqrt(t)-cone drift (use kn-band / cone-drift)");
  WalkConfig run_cfg = cfg;
  run_cfg.horizon = n;
  MarginalSamples samples = collect_marginals(run_cfg, n, t_points, replicas, ctx);
  const std::vector<double> target = cfg.xi.second_moment();
  TestReport report = gaussian_marginal_check(samples, target, cfg.d, thresholds);
  report.replicas = replicas;
  report.seed = cfg.seed;
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// Range upper bound
// ---------------------------------------------------------------------------

TestReport test_range_upper(const WalkConfig& cfg, double delta, std::uint64_t n,
                            std::uint64_t replicas, double pi_hat, double margin,
                            double required_fraction, const ExecContext& ctx) {
  if (cfg.schedule.beta != 0.5)
    throw RegimeError("range-upper applies to the beta = 1/2 schedule, got beta = " +
                      std::to_string(cfg.schedule.beta));
  if (delta < pi_hat + margin)
    throw InconclusiveError("range-upper: delta = " + std::to_string(delta) +
                            " is below pi_hat + margin = " + std::to_string(pi_hat + margin) +
                            "; the bound is not testable this close to the escape probability");
  validate_walk_config(cfg);
  WalkConfig run_cfg = cfg;
  run_cfg.horizon = n;
  const std::vector<double> p_table = run_cfg.schedule.table(n);
  const std::uint64_t m_lo = (n + 9) / 10;

  const auto violated = mc::map_replicas<std::uint8_t>(replicas, ctx.parallelism, [&](std::uint64_t r) {
    RangeBoundWatch watch{delta, m_lo, n};
    run_walk_observed(run_cfg, p_table, Xoshiro256pp::for_stream(run_cfg.seed, r), watch);
    return static_cast<std::uint8_t>(watch.violated ? 1 : 0);
  });

  std::uint64_t ok = 0;
  for (auto v : violated) ok += v ? 0 : 1;
  TestReport report;
  report.name = "range-upper";
  report.replicas = replicas;
  report.seed = cfg.seed;
  report.add("fraction with |R_m| <= " + fmt(delta) + " m on [n/10, n]",
             static_cast<double>(ok) / static_cast<double>(replicas), required_fraction,
             /*at_most=*/false);
  report.note = "delta = pi_hat + " + fmt(delta - pi_hat) + ", n = " + std::to_string(n);
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// K_n band and cone drift
// ---------------------------------------------------------------------------

ConeSamples collect_cone_samples(const WalkConfig& cfg, std::uint64_t n,
                                 std::span<const double> t_points, std::uint64_t replicas,
                                 const ExecContext& ctx) {
  validate_walk_config(cfg);
  if (cfg.horizon < n) throw DomainError("collect_cone_samples: horizon shorter than n");
  const std::vector<std::uint64_t> steps = checkpoint_steps_for(t_points, n);
  const std::vector<double> p_table = cfg.schedule.table(cfg.horizon);
  const int d = cfg.d;

  struct PerReplica {
    std::vector<std::uint64_t> k_at;
    std::vector<std::int64_t> positions;
  };
  const auto results = mc::map_replicas<PerReplica>(replicas, ctx.parallelism, [&](std::uint64_t r) {
    CheckpointSampler sampler(steps, d);
    run_walk_observed(cfg, p_table, Xoshiro256pp::for_stream(cfg.seed, r), sampler);
    return PerReplica{std::move(sampler.k_at), std::move(sampler.position_at)};
  });

  ConeSamples out;
  out.n = n;
  out.t_points.assign(t_points.begin(), t_points.end());
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  out.k_scaled.assign(t_points.size(), std::vector<double>(replicas, 0.0));
  out.b_hat.resize(t_points.size());
  for (std::size_t ti = 0; ti < t_points.size(); ++ti) {
    const double nt = static_cast<double>(n) * out.t_points[ti];
    const auto k = static_cast<std::uint64_t>(nt);
    const double frac = nt - static_cast<double>(k);
    out.b_hat[ti].assign(d, std::vector<double>(replicas, 0.0));
    for (std::uint64_t r = 0; r < replicas; ++r) {
      double k_count = 0.0;
      if (k >= 1) {
        const std::size_t si = index_of_step(steps, k);
        k_count = static_cast<double>(results[r].k_at[si]);
        for (int j = 0; j < d; ++j) {
          double value = static_cast<double>(results[r].positions[si * d + j]);
          if (frac > 0.0) {
            const std::size_t si1 = index_of_step(steps, k + 1);
            const double x1 = static_cast<double>(results[r].positions[si1 * d + j]);
            value += frac * (x1 - value);
          }
          out.b_hat[ti][j][r] = value / sqrt_n;
        }
      }
      out.k_scaled[ti][r] = k_count / sqrt_n;
    }
  }
  return out;
}

TestReport kn_band_check(const ConeSamples& samples, double pi_d_hat, double pi_dk_hat,
                         double required_fraction) {
  TestReport report;
  report.name = "kn-band";
  const double eps =
      std::max(0.05, 4.0 * std::pow(static_cast<double>(samples.n), -0.25));
  for (std::size_t ti = 0; ti < samples.t_points.size(); ++ti) {
    const double t = samples.t_points[ti];
    const double lo = 2.0 * std::sqrt(t) * (1.0 - std::sqrt(1.0 - pi_dk_hat)) - eps;
    const double hi = 2.0 * std::sqrt(t * pi_d_hat) + eps;
    const auto& values = samples.k_scaled[ti];
    std::uint64_t inside = 0;
    for (double v : values) inside += (v >= lo && v <= hi) ? 1 : 0;
    const double fraction = static_cast<double>(inside) / static_cast<double>(values.size());
    report.add("t=" + fmt(t) + " in-band fraction, band [" + fmt(lo) + ", " + fmt(hi) + "]",
               fraction, required_fraction, /*at_most=*/false);
  }
  report.note = "eps = max(0.05, 4 n^-1/4); band edges from escape-probability estimates";
  report.finalize();
  return report;
}

TestReport cone_drift_check(const ConeSamples& samples, const ConeConstants& constants,
                            const Direction& ell, const CoordinateSubset& subset) {
  TestReport report;
  report.name = "cone-drift";
  const int d = ell.dimension();
  const auto replicas = samples.k_scaled.empty() ? 0 : samples.k_scaled[0].size();
  for (std::size_t ti = 0; ti < samples.t_points.size(); ++ti) {
    const double t = samples.t_points[ti];
    const std::string ts = "t=" + fmt(t);
    // Projection of each replica's rescaled position on the drift direction.
    std::vector<double> along(replicas, 0.0);
    for (std::size_t r = 0; r < replicas; ++r) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += ell[j] * samples.b_hat[ti][j][r];
      along[r] = s;
    }
    const double m = stats::mean(along);
    const double sd = std::sqrt(stats::variance(along));
    const double eps = std::max(0.05, 4.0 * sd / std::sqrt(static_cast<double>(replicas)));
    const double lo = 2.0 * constants.c1() * std::sqrt(t) - eps;
    const double hi = 2.0 * constants.c2() * std::sqrt(t) + eps;
    report.add(ts + " drift mean >= " + fmt(lo), m, lo, /*at_most=*/false);
    report.add(ts + " drift mean <= " + fmt(hi), m, hi, /*at_most=*/true);

    for (int j = 0; j < d; ++j) {
      if (subset.contains(j + 1)) continue;
      const double mj = stats::mean(samples.b_hat[ti][j]);
      const double sdj = std::sqrt(stats::variance(samples.b_hat[ti][j]));
      const double epsj = std::max(0.05, 4.0 * sdj / std::sqrt(static_cast<double>(replicas)));
      report.add(ts + " |mean coord " + std::to_string(j + 1) + "|", std::abs(mj), epsj);
    }
  }
  report.note =
      "finite-n band around a limit-point statement; the slack schedule is a design choice";
  report.finalize();
  return report;
}

namespace {

void check_cone_regime(const WalkConfig& cfg, const CoordinateSubset& subset,
                       const char* test_name) {
  if (cfg.d < 4 || cfg.schedule.beta != 0.5)
    throw RegimeError(std::string(test_name) +
                      " applies at beta = 1/2 in d >= 4 with the drift spanned by at most d-3 "
                      "axes; got beta = " +
                      std::to_string(cfg.schedule.beta) + ", d = " + std::to_string(cfg.d));
  check_drift_span(cfg.ell, subset);
  subset.require_cone_constraints();
}

}  // namespace

TestReport test_kn_band(const WalkConfig& cfg, const CoordinateSubset& subset, std::uint64_t n,
                        std::span<const double> t_points, std::uint64_t replicas, double pi_d_hat,
                        double pi_dk_hat, const ExecContext& ctx) {
  check_cone_regime(cfg, subset, "kn-band");
  WalkConfig run_cfg = cfg;
  run_cfg.horizon = n;
  ConeSamples samples = collect_cone_samples(run_cfg, n, t_points, replicas, ctx);
  TestReport report = kn_band_check(samples, pi_d_hat, pi_dk_hat);
  report.replicas = replicas;
  report.seed = cfg.seed;
  report.finalize();
  return report;
}

TestReport test_cone_drift(const WalkConfig& cfg, const CoordinateSubset& subset, std::uint64_t n,
                           std::span<const double> t_points, std::uint64_t replicas,
                           double pi_d_hat, double pi_dk_hat, const ExecContext& ctx) {
  check_cone_regime(cfg, subset, "cone-drift");
  WalkConfig run_cfg = cfg;
  run_cfg.horizon = n;
  ConeSamples samples = collect_cone_samples(run_cfg, n, t_points, replicas, ctx);
  const ConeConstants constants(cfg.gamma.drift_along(cfg.ell), pi_d_hat, pi_dk_hat);
  TestReport report = cone_drift_check(samples, constants, cfg.ell, subset);
  report.replicas = replicas;
  report.seed = cfg.seed;
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// J / V asymptotics
// ---------------------------------------------------------------------------

JvResult test_jv_asymptotics(double delta, double delta_prime,
                             std::span<const std::uint64_t> n_ladder, std::uint64_t replicas,
                             std::uint64_t seed, double tolerance, double top_fraction,
                             const ExecContext& ctx) {
  if (n_ladder.empty()) throw DomainError("jv-asymptotics: empty ladder");
  JvResult result;
  result.report.name = "jv-asymptotics";
  result.report.replicas = replicas;
  result.report.seed = seed;

  const double j_limit = 2.0 * std::sqrt(delta);
  const double v_limit = 2.0 - 2.0 * std::sqrt(1.0 - delta_prime);

  for (std::size_t li = 0; li < n_ladder.size(); ++li) {
    const std::uint64_t n = n_ladder[li];
    struct Row {
      double j_scaled;
      double v_scaled;
    };
    const auto rows = mc::map_replicas<Row>(replicas, ctx.parallelism, [&](std::uint64_t r) {
      auto rng = Xoshiro256pp::for_stream(seed, li * replicas + r);
      const auto [j, v] = jv_counts(delta, delta_prime, n, rng);
      const double sqrt_n = std::sqrt(static_cast<double>(n));
      return Row{static_cast<double>(j) / sqrt_n, static_cast<double>(v) / sqrt_n};
    });
    JvLadderRow row;
    row.n = n;
    std::uint64_t out_j = 0, out_v = 0;
    std::vector<double> js(replicas), vs(replicas);
    for (std::uint64_t r = 0; r < replicas; ++r) {
      js[r] = rows[r].j_scaled;
      vs[r] = rows[r].v_scaled;
      out_j += std::abs(rows[r].j_scaled - j_limit) > tolerance ? 1 : 0;
      out_v += std::abs(rows[r].v_scaled - v_limit) > tolerance ? 1 : 0;
    }
    row.fraction_out_j = static_cast<double>(out_j) / static_cast<double>(replicas);
    row.fraction_out_v = static_cast<double>(out_v) / static_cast<double>(replicas);
    row.mean_j_scaled = stats::mean(js);
    row.mean_v_scaled = stats::mean(vs);
    result.ladder.push_back(row);
  }

  for (std::size_t i = 0; i + 1 < result.ladder.size(); ++i) {
    result.report.add("J out-fraction decreasing " + std::to_string(result.ladder[i].n) + " -> " +
                          std::to_string(result.ladder[i + 1].n),
                      result.ladder[i].fraction_out_j - result.ladder[i + 1].fraction_out_j, 0.0,
                      /*at_most=*/false);
    result.report.add("V out-fraction decreasing " + std::to_string(result.ladder[i].n) + " -> " +
                          std::to_string(result.ladder[i + 1].n),
                      result.ladder[i].fraction_out_v - result.ladder[i + 1].fraction_out_v, 0.0,
                      /*at_most=*/false);
  }
  result.report.add("J out-fraction at top n", result.ladder.back().fraction_out_j, top_fraction);
  result.report.add("V out-fraction at top n", result.ladder.back().fraction_out_v, top_fraction);

  // Independent check of the exact-mean helper: backward long-double sum.
  const std::uint64_t top = n_ladder.back();
  const auto jw = j_window(delta, top);
  long double back = 0.0L;
  for (std::uint64_t i = jw; i >= 1; --i) {
    back += 1.0L / std::sqrt(static_cast<long double>(i));
    if (i == 1) break;
  }
  result.report.add("exact-mean helper vs independent summation",
                    std::abs(exact_mean_J(delta, top) - static_cast<double>(back)), 1e-9);
  result.report.finalize();
  return result;
}

// ---------------------------------------------------------------------------
// Vanishing excitation correction
// ---------------------------------------------------------------------------

DProcessResult test_d_process_vanishes(const WalkConfig& cfg,
                                       std::span<const std::uint64_t> n_ladder, double T,
                                       std::uint64_t replicas, double final_threshold,
                                       const ExecContext& ctx) {
  if (!(cfg.schedule.beta > 0.5))
    throw RegimeError("d-process vanishing applies for beta > 1/2; got beta = " +
                      std::to_string(cfg.schedule.beta));
  if (n_ladder.empty()) throw DomainError("d-process: empty ladder");
  DProcessResult result;
  result.report.name = "d-process-vanishes";
  result.report.replicas = replicas;
  result.report.seed = cfg.seed;

  for (std::size_t li = 0; li < n_ladder.size(); ++li) {
    const std::uint64_t n = n_ladder[li];
    const auto horizon = static_cast<std::uint64_t>(
        std::ceil(static_cast<double>(n) * T));
    WalkConfig run_cfg = cfg;
    run_cfg.horizon = horizon;
    validate_walk_config(run_cfg);
    const std::vector<double> p_table = run_cfg.schedule.table(horizon);
    const auto max_step = static_cast<std::uint64_t>(static_cast<double>(n) * T);

    const auto sups = mc::map_replicas<double>(replicas, ctx.parallelism, [&](std::uint64_t r) {
      DProcessSupAccumulator acc(max_step);
      run_walk_observed(run_cfg, p_table,
                        Xoshiro256pp::for_stream(run_cfg.seed, li * replicas + r), acc);
      return acc.sup_scaled(n);
    });
    result.ladder.push_back(n);
    result.medians.push_back(stats::median(sups));
  }

  for (std::size_t i = 0; i + 1 < result.medians.size(); ++i)
    result.report.add("median decreasing n=" + std::to_string(result.ladder[i]) + " -> " +
                          std::to_string(result.ladder[i + 1]),
                      result.medians[i] - result.medians[i + 1], 0.0, /*at_most=*/false);
  result.report.add("final median sup", result.medians.back(), final_threshold);
  result.report.finalize();
  return result;
}

// ---------------------------------------------------------------------------
// Stopped-increment i.i.d. checks
// ---------------------------------------------------------------------------

TestReport stopped_increments_check(std::span<const std::uint64_t> pooled_counts,
                                    std::span<const double> masses,
                                    std::span<const std::uint64_t> pair_table, int atoms,
                                    double level) {
  TestReport report;
  report.name = "stopped-increments-iid";
  const auto gof = stats::chi_square_gof(pooled_counts, masses);
  report.add("chi-square gof p-value (dof " + std::to_string(gof.dof) + ")", gof.p_value, level,
             /*at_most=*/false);
  std::uint64_t pairs = 0;
  for (auto c : pair_table) pairs += c;
  if (pairs > 0) {
    const auto indep = stats::chi_square_independence(pair_table, atoms, atoms);
    report.add("lag-1 independence p-value (dof " + std::to_string(indep.dof) + ")",
               indep.p_value, level, /*at_most=*/false);
  }
  report.finalize();
  return report;
}

TestReport test_stopped_increments_iid(const WalkConfig& cfg, std::uint64_t n,
                                       std::uint64_t replicas, double level,
                                       std::uint64_t min_pooled, const ExecContext& ctx) {
  validate_walk_config(cfg);
  WalkConfig run_cfg = cfg;
  run_cfg.horizon = n;
  const std::vector<double> p_table = run_cfg.schedule.table(n);
  const int atoms = static_cast<int>(cfg.gamma.atom_count());

  const auto logs =
      mc::map_replicas<std::vector<std::uint32_t>>(replicas, ctx.parallelism, [&](std::uint64_t r) {
        ExcitedAtomLog log;
        run_walk_observed(run_cfg, p_table, Xoshiro256pp::for_stream(run_cfg.seed, r), log);
        return std::move(log.atoms);
      });

  std::vector<std::uint64_t> counts(atoms, 0);
  std::vector<std::uint64_t> pair_table(static_cast<std::size_t>(atoms) * atoms, 0);
  std::uint64_t pooled = 0;
  for (const auto& seq : logs) {
    pooled += seq.size();
    for (std::size_t i = 0; i < seq.size(); ++i) {
      ++counts[seq[i]];
      if (i + 1 < seq.size()) ++pair_table[static_cast<std::size_t>(seq[i]) * atoms + seq[i + 1]];
    }
  }
  if (pooled < min_pooled)
    throw InconclusiveError("stopped-increments: only " + std::to_string(pooled) +
                            " pooled excitation draws, need " + std::to_string(min_pooled));

  std::vector<double> masses(atoms);
  for (int a = 0; a < atoms; ++a) masses[a] = cfg.gamma.mass(a);
  TestReport report = stopped_increments_check(counts, masses, pair_table, atoms, level);
  report.replicas = replicas;
  report.seed = cfg.seed;
  report.note = std::to_string(pooled) + " pooled excitation-time draws";
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// Range LLN cross-check and the exploratory range probe
// ---------------------------------------------------------------------------

namespace {

struct RangeOnly {
  std::uint64_t range = 1;
  void on_step(const StepView& v) { range = v.range_size; }
};

}  // namespace

TestReport test_range_lln_iid(int d, const IncrementDistribution& law, std::uint64_t n,
                              std::uint64_t replicas, std::uint64_t seed, double pi_hat,
                              double tolerance, const ExecContext& ctx) {
  const auto ratios = mc::map_replicas<double>(replicas, ctx.parallelism, [&](std::uint64_t r) {
    RangeOnly obs;
    run_plain_walk_observed(d, law, n, Xoshiro256pp::for_stream(seed, r), obs);
    return static_cast<double>(obs.range) / static_cast<double>(n);
  });
  const double m = stats::mean(ratios);
  TestReport report;
  report.name = "range-lln";
  report.replicas = replicas;
  report.seed = seed;
  report.add("|mean R_n/n - pi_hat|", std::abs(m - pi_hat), tolerance);
  report.note = "mean R_n/n = " + fmt(m) + ", pi_hat = " + fmt(pi_hat);
  report.finalize();
  return report;
}

std::string ProbeReport::table() const {
  std::ostringstream out;
  out << "range probe (no verdict): pi_hat = " << pi_hat << "\n";
  for (const auto& row : rows)
    out << "  n = " << row.n << "  mean |R_n|/n = " << row.mean_range_over_n << " +- "
        << row.ci_halfwidth << "\n";
  if (!note.empty()) out << "  " << note << "\n";
  return out.str();
}

ProbeReport probe_conjecture_range(const WalkConfig& cfg,
                                   std::span<const std::uint64_t> n_ladder,
                                   std::uint64_t replicas, double pi_hat,
                                   const ExecContext& ctx) {
  if (!(cfg.schedule.beta >= 0.5))
    throw RegimeError("range probe targets schedules with beta >= 1/2");
  ProbeReport probe;
  probe.pi_hat = pi_hat;
  probe.note = "exploratory output only";
  for (std::size_t li = 0; li < n_ladder.size(); ++li) {
    const std::uint64_t n = n_ladder[li];
    WalkConfig run_cfg = cfg;
    run_cfg.horizon = n;
    validate_walk_config(run_cfg);
    const std::vector<double> p_table = run_cfg.schedule.table(n);
    const auto ratios = mc::map_replicas<double>(replicas, ctx.parallelism, [&](std::uint64_t r) {
      RangeOnly obs;
      run_walk_observed(run_cfg, p_table,
                        Xoshiro256pp::for_stream(run_cfg.seed, li * replicas + r), obs);
      return static_cast<double>(obs.range) / static_cast<double>(n);
    });
    ProbeRow row;
    row.n = n;
    row.mean_range_over_n = stats::mean(ratios);
    row.ci_halfwidth = 1.96 * std::sqrt(stats::variance(ratios) / static_cast<double>(replicas));
    probe.rows.push_back(row);
  }
  return probe;
}

}  // namespace pnerw::diag
