// pnerw: simulate time-inhomogeneous excited random walks and verify their
// limit behavior. Subcommands: simulate, estimate-pi, couple, diagnose,
// probe-conjecture, validate-config.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pnerw/config.hpp"
#include "pnerw/coupling.hpp"
#include "pnerw/diagnostics.hpp"
#include "pnerw/format.hpp"
#include "pnerw/montecarlo.hpp"
#include "pnerw/observables.hpp"
#include "pnerw/stats.hpp"
#include "pnerw/walk.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pnerw;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

io::ConfigFile load_config(const std::string& path) {
  auto result = io::parse_config(read_file(path));
  if (!result.ok()) {
    std::string msg = "config errors in " + path + ":";
    for (const auto& e : result.errors)
      msg += "\n  line " + std::to_string(e.line) + ": " + e.message;
    throw ConfigError(msg);
  }
  io::ConfigFile cfg = std::move(*result.config);
  if (const char* env_seed = std::getenv("PNERW_SEED"))
    cfg.experiment.seed = std::stoull(env_seed);
  if (const char* env_par = std::getenv("PNERW_PARALLELISM"))
    cfg.experiment.parallelism = std::stoi(env_par);
  return cfg;
}

/// One run directory per invocation; an existing directory is never reused.
fs::path make_run_dir(const std::string& out) {
  fs::path dir(out);
  if (fs::exists(dir)) throw ConfigError("output directory already exists: " + out);
  fs::create_directories(dir);
  return dir;
}

class Manifest {
public:
  Manifest(std::string command, const io::ConfigFile& cfg)
      : start_(std::chrono::steady_clock::now()) {
    j_["schema"] = "pnerw.manifest.v1";
    j_["tool"] = "pnerw";
    j_["version"] = kVersion;
    j_["command"] = std::move(command);
    j_["config"] = io::serialize_config(cfg);
    j_["seed"] = cfg.experiment.seed;
    j_["parallelism"] = cfg.experiment.parallelism;
  }

  void note_output(const std::string& name) { j_["outputs"].push_back(name); }
  json& extra() { return j_; }

  void write(const fs::path& dir) {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    // wall_time_seconds is the one field outside the determinism contract.
    j_["wall_time_seconds"] = elapsed.count();
    std::ofstream out(dir / "manifest.json");
    out << j_.dump(2) << "\n";
  }

private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

void write_trace_csv(const fs::path& path, const WalkTrace& trace) {
  std::ofstream out(path);
  out << "# schema=pnerw.trace.v1\n";
  out << "time";
  for (int j = 1; j <= trace.dimension(); ++j) out << ",x" << j;
  out << ",first_visit,excited\n";
  for (std::uint64_t i = 0; i <= trace.horizon(); ++i) {
    out << i;
    for (int j = 0; j < trace.dimension(); ++j) out << "," << trace.position(i)[j];
    out << "," << (trace.first_visit(i) ? 1 : 0) << "," << (trace.excited(i) ? 1 : 0) << "\n";
  }
}

void write_observables_csv(const fs::path& path, const WalkTrace& trace,
                           const std::vector<double>& checkpoints) {
  const auto r = range_series(trace);
  const auto k = k_series(trace);
  std::ofstream out(path);
  out << "# schema=pnerw.observables.v1\n";
  out << "time,range,k_count,d_sup\n";
  for (double t : checkpoints) {
    const auto step = static_cast<std::uint64_t>(t * static_cast<double>(trace.horizon()));
    out << step << "," << r[step] << "," << k[step] << ","
        << io::format_double(d_process_sup(trace, trace.horizon(), t)) << "\n";
  }
}

void write_rescaled_csv(const fs::path& path, const WalkTrace& trace,
                        const std::vector<double>& grid) {
  const auto rescaled = rescale_path(trace, trace.horizon(), grid);
  std::ofstream out(path);
  out << "# schema=pnerw.rescaled.v1\n";
  out << "t";
  for (int j = 1; j <= trace.dimension(); ++j) out << ",b" << j;
  out << "\n";
  for (std::size_t i = 0; i < rescaled.times.size(); ++i) {
    out << io::format_double(rescaled.times[i]);
    for (double v : rescaled.values[i]) out << "," << io::format_double(v);
    out << "\n";
  }
}

void write_summaries_csv(const fs::path& path, const std::vector<mc::ReplicaSummary>& summaries,
                         int d) {
  std::ofstream out(path);
  out << "# schema=pnerw.summaries.v1\n";
  out << "replica,stream_root";
  for (int j = 1; j <= d; ++j) out << ",x" << j;
  out << ",range,k_count,d_sup";
  if (!summaries.empty())
    for (std::size_t c = 0; c < summaries[0].checkpoint_steps.size(); ++c)
      out << ",range_at_" << summaries[0].checkpoint_steps[c] << ",k_at_"
          << summaries[0].checkpoint_steps[c];
  out << "\n";
  for (const auto& s : summaries) {
    out << s.replica << "," << s.stream_root;
    for (auto x : s.final_position) out << "," << x;
    out << "," << s.range << "," << s.k_count << "," << io::format_double(s.d_sup_scaled);
    for (std::size_t c = 0; c < s.checkpoint_steps.size(); ++c)
      out << "," << s.checkpoint_range[c] << "," << s.checkpoint_k[c];
    out << "\n";
  }
}

json law_to_json(const IncrementDistribution& law) {
  json atoms = json::array();
  for (std::size_t k = 0; k < law.atom_count(); ++k) {
    json a;
    a["atom"] = std::vector<std::int64_t>(law.atom(k).begin(), law.atom(k).end());
    a["mass"] = law.mass(k);
    atoms.push_back(a);
  }
  return atoms;
}

std::uint64_t pi_manifest_hash(int d, const IncrementDistribution& law,
                               const std::vector<std::uint64_t>& horizons,
                               std::uint64_t replicas, std::uint64_t seed) {
  std::string key = std::to_string(d) + "|";
  for (std::size_t k = 0; k < law.atom_count(); ++k) {
    for (auto x : law.atom(k)) key += std::to_string(x) + ",";
    key += ":" + io::format_double(law.mass(k)) + ";";
  }
  key += "|";
  for (auto h : horizons) key += std::to_string(h) + ",";
  key += "|" + std::to_string(replicas) + "|" + std::to_string(seed);
  return fnv1a(key);
}

void write_pi_outputs(const fs::path& dir, const mc::PiEstimate& est, int d,
                      const IncrementDistribution& law) {
  json j;
  j["schema"] = "pnerw.pi.v1";
  j["d"] = d;
  j["law"] = law_to_json(law);
  j["horizons"] = est.horizons;
  j["survival_fraction"] = est.survival_fraction;
  j["ci_halfwidth"] = est.ci_halfwidth;
  j["replicas"] = est.replicas;
  j["seed"] = est.seed;
  j["manifest_hash"] = pi_manifest_hash(d, law, est.horizons, est.replicas, est.seed);
  std::ofstream(dir / "pi.json") << j.dump(2) << "\n";

  std::ofstream csv(dir / "pi.csv");
  csv << "# schema=pnerw.pi.v1\n";
  csv << "horizon,survival_fraction,ci_halfwidth\n";
  for (std::size_t i = 0; i < est.horizons.size(); ++i)
    csv << est.horizons[i] << "," << io::format_double(est.survival_fraction[i]) << ","
        << io::format_double(est.ci_halfwidth[i]) << "\n";
}

struct PiInput {
  double plateau;
  std::uint64_t manifest_hash;
};

PiInput load_pi(const std::string& run_dir, const char* which) {
  const fs::path path = fs::path(run_dir) / "pi.json";
  std::ifstream in(path);
  if (!in)
    throw ConfigError(std::string("cannot read ") + which + " estimate at " + path.string() +
                      " (run estimate-pi first)");
  json j;
  in >> j;
  if (j.value("schema", "") != "pnerw.pi.v1")
    throw ConfigError(path.string() + " is not an escape-probability manifest");
  return PiInput{j["survival_fraction"].back().get<double>(),
                 j["manifest_hash"].get<std::uint64_t>()};
}

json report_to_json(const diag::TestReport& r) {
  json j;
  j["schema"] = "pnerw.report.v1";
  j["name"] = r.name;
  j["pass"] = r.pass;
  j["statistic"] = r.statistic;
  j["threshold"] = r.threshold;
  j["replicas"] = r.replicas;
  j["seed"] = r.seed;
  j["note"] = r.note;
  j["clauses"] = json::array();
  for (const auto& c : r.clauses) {
    json cj;
    cj["name"] = c.name;
    cj["statistic"] = c.statistic;
    cj["threshold"] = c.threshold;
    cj["comparison"] = c.at_most ? "<=" : ">=";
    cj["pass"] = c.pass;
    j["clauses"].push_back(cj);
  }
  return j;
}

std::vector<double> default_or(const std::vector<double>& v, std::vector<double> fallback) {
  return v.empty() ? fallback : v;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& config_path) {
  const auto result = io::parse_config(read_file(config_path));
  if (!result.ok()) {
    std::cerr << "invalid config:\n";
    for (const auto& e : result.errors)
      std::cerr << "  line " << e.line << ": " << e.message << "\n";
    return 2;
  }
  std::cout << "config ok\n" << io::serialize_config(*result.config);
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out) {
  const auto cfg = load_config(config_path);
  const auto dir = make_run_dir(out);
  Manifest manifest("simulate", cfg);

  mc::ExperimentPlan plan{io::build_walk_config(cfg), cfg.experiment.replicas,
                          cfg.experiment.checkpoints, cfg.experiment.parallelism};
  const auto summaries = mc::run_experiment(plan);
  write_summaries_csv(dir / "summaries.csv", summaries, plan.base.d);
  manifest.note_output("summaries.csv");

  const bool auto_trace = cfg.experiment.replicas == 1 && cfg.experiment.horizon <= 1000000;
  if (cfg.experiment.write_trace || auto_trace) {
    const auto trace = run_walk(plan.base, 0);
    write_trace_csv(dir / "trace.csv", trace);
    manifest.note_output("trace.csv");
    if (!cfg.experiment.checkpoints.empty()) {
      write_observables_csv(dir / "observables.csv", trace, cfg.experiment.checkpoints);
      write_rescaled_csv(dir / "rescaled.csv", trace, cfg.experiment.checkpoints);
      manifest.note_output("observables.csv");
      manifest.note_output("rescaled.csv");
    }
  }
  manifest.write(dir);
  std::cout << "wrote " << dir.string() << " (" << summaries.size() << " replicas)\n";
  return 0;
}

int cmd_estimate_pi(const std::string& config_path, const std::string& out, bool lazy) {
  const auto cfg = load_config(config_path);
  const auto dir = make_run_dir(out);
  Manifest manifest("estimate-pi", cfg);

  IncrementDistribution law = io::build_xi(cfg.model);
  if (lazy) {
    const auto subset = io::build_subset(cfg);
    if (!subset) throw ConfigError("--lazy needs model.subset to project onto");
    law = projected_law(law, *subset);
  }
  std::vector<std::uint64_t> horizons = cfg.diagnostics.n_ladder;
  if (horizons.empty()) {
    for (std::uint64_t h = std::max<std::uint64_t>(cfg.experiment.horizon / 1000, 10);
         h < cfg.experiment.horizon; h *= 10)
      horizons.push_back(h);
    horizons.push_back(cfg.experiment.horizon);
  }
  const auto est = mc::estimate_pi(cfg.model.d, law, horizons, cfg.experiment.replicas,
                                   cfg.experiment.seed, cfg.experiment.parallelism);
  write_pi_outputs(dir, est, cfg.model.d, law);
  manifest.note_output("pi.json");
  manifest.note_output("pi.csv");
  manifest.write(dir);
  std::cout << "survival ladder:";
  for (std::size_t i = 0; i < est.horizons.size(); ++i)
    std::cout << "  " << est.horizons[i] << ": " << est.survival_fraction[i] << " +- "
              << est.ci_halfwidth[i];
  std::cout << "\n";
  return 0;
}

int cmd_couple(const std::string& config_path, const std::string& out, bool relax) {
  const auto cfg = load_config(config_path);
  const auto subset = io::build_subset(cfg);
  if (!subset) throw ConfigError("couple needs model.subset");
  const auto dir = make_run_dir(out);
  Manifest manifest("couple", cfg);

  const auto walk_cfg = io::build_walk_config(cfg);
  const auto coupled = run_coupled(walk_cfg, *subset, /*enforce_cone_constraints=*/!relax);

  std::ofstream csv(dir / "coupled.csv");
  csv << "# schema=pnerw.coupled.v1\n";
  csv << "time";
  for (int j = 1; j <= walk_cfg.d; ++j) csv << ",x" << j;
  for (int j = 1; j <= walk_cfg.d; ++j) csv << ",y" << j;
  csv << ",x_new,y_new\n";
  for (std::uint64_t i = 0; i <= coupled.horizon(); ++i) {
    csv << i;
    for (int j = 0; j < walk_cfg.d; ++j) csv << "," << coupled.x().position(i)[j];
    for (int j = 0; j < walk_cfg.d; ++j) csv << "," << coupled.y_position(i)[j];
    csv << "," << (coupled.x().first_visit(i) ? 1 : 0) << "," << (coupled.y_first_visit(i) ? 1 : 0)
        << "\n";
  }
  manifest.note_output("coupled.csv");
  manifest.write(dir);

  const auto rx = range_series(coupled.x());
  const auto ry = range_series_y(coupled);
  std::cout << "coupled run: |R^X| = " << rx.back() << ", |R^Y| = " << ry.back() << "\n";
  return 0;
}

int cmd_diagnose(const std::string& config_path, const std::string& test_override,
                 const std::string& out) {
  auto cfg = load_config(config_path);
  if (!test_override.empty()) cfg.diagnostics.test = test_override;
  if (cfg.diagnostics.test.empty())
    throw ConfigError("diagnose needs a test name (--test or diagnostics.test)");
  io::validate_diagnostics_regime(cfg);

  const auto& dg = cfg.diagnostics;
  const auto walk_cfg = io::build_walk_config(cfg);
  const diag::ExecContext ctx{cfg.experiment.parallelism};
  const std::uint64_t replicas = cfg.experiment.replicas;
  const std::uint64_t n = dg.n.value_or(cfg.experiment.horizon);

  diag::TestReport report;
  json extra;
  const std::string& name = cfg.diagnostics.test;
  if (name == "gaussian-marginal") {
    const auto ts = default_or(dg.t_points, {0.25, 0.5, 1.0});
    report = diag::test_gaussian_marginal(walk_cfg, n, ts, replicas, ctx);
  } else if (name == "range-upper") {
    const auto pi = load_pi(dg.pi_manifest, "pi_manifest");
    const double delta = dg.delta.value_or(pi.plateau + 0.05);
    report = diag::test_range_upper(walk_cfg, delta, n, replicas, pi.plateau, 0.05, 0.99, ctx);
    extra["pi_manifest_hash"] = pi.manifest_hash;
  } else if (name == "kn-band" || name == "cone-drift") {
    const auto subset = io::build_subset(cfg);
    const auto pi_d = load_pi(dg.pi_manifest, "pi_manifest");
    const auto pi_lazy = load_pi(dg.pi_manifest_lazy, "pi_manifest_lazy");
    const auto ts = default_or(dg.t_points, {0.5, 1.0});
    if (name == "kn-band")
      report = diag::test_kn_band(walk_cfg, *subset, n, ts, replicas, pi_d.plateau,
                                  pi_lazy.plateau, ctx);
    else
      report = diag::test_cone_drift(walk_cfg, *subset, n, ts, replicas, pi_d.plateau,
                                     pi_lazy.plateau, ctx);
    extra["pi_manifest_hash"] = pi_d.manifest_hash;
    extra["pi_manifest_lazy_hash"] = pi_lazy.manifest_hash;
  } else if (name == "jv-asymptotics") {
    std::vector<std::uint64_t> ladder = dg.n_ladder;
    if (ladder.empty()) ladder = {10000, 100000, 1000000};
    const auto result =
        diag::test_jv_asymptotics(dg.delta.value_or(0.64), dg.delta_prime.value_or(0.36), ladder,
                                  replicas, cfg.experiment.seed, dg.tolerance.value_or(0.05),
                                  0.01, ctx);
    report = result.report;
  } else if (name == "d-process") {
    std::vector<std::uint64_t> ladder = dg.n_ladder;
    if (ladder.empty()) ladder = {10000, 100000, 1000000};
    const auto result = diag::test_d_process_vanishes(walk_cfg, ladder, dg.T.value_or(1.0),
                                                      replicas, dg.tolerance.value_or(0.05), ctx);
    report = result.report;
  } else if (name == "stopped-iid") {
    report = diag::test_stopped_increments_iid(walk_cfg, n, replicas, dg.level.value_or(0.01),
                                               1000, ctx);
  } else if (name == "range-lln") {
    const auto pi = load_pi(dg.pi_manifest, "pi_manifest");
    report = diag::test_range_lln_iid(cfg.model.d, walk_cfg.xi, n, replicas, cfg.experiment.seed,
                                      pi.plateau, dg.tolerance.value_or(0.02), ctx);
    extra["pi_manifest_hash"] = pi.manifest_hash;
  } else {
    throw ConfigError("unknown diagnostic test '" + name + "'");
  }

  std::cout << report.table();
  if (!out.empty()) {
    const auto dir = make_run_dir(out);
    Manifest manifest("diagnose", cfg);
    json rj = report_to_json(report);
    for (auto& [k, v] : extra.items()) rj[k] = v;
    std::ofstream(dir / "report.json") << rj.dump(2) << "\n";
    manifest.note_output("report.json");
    manifest.write(dir);
  }
  return report.pass ? 0 : 1;
}

int cmd_probe(const std::string& config_path, const std::string& out) {
  const auto cfg = load_config(config_path);
  const auto walk_cfg = io::build_walk_config(cfg);
  const auto pi = load_pi(cfg.diagnostics.pi_manifest, "pi_manifest");
  std::vector<std::uint64_t> ladder = cfg.diagnostics.n_ladder;
  if (ladder.empty()) ladder = {10000, 100000, 1000000};
  const auto probe =
      diag::probe_conjecture_range(walk_cfg, ladder, cfg.experiment.replicas, pi.plateau,
                                   diag::ExecContext{cfg.experiment.parallelism});
  std::cout << probe.table();
  if (!out.empty()) {
    const auto dir = make_run_dir(out);
    Manifest manifest("probe-conjecture", cfg);
    json j;
    j["schema"] = "pnerw.probe.v1";
    j["pi_hat"] = probe.pi_hat;
    j["pi_manifest_hash"] = pi.manifest_hash;
    j["rows"] = json::array();
    for (const auto& row : probe.rows)
      j["rows"].push_back({{"n", row.n},
                           {"mean_range_over_n", row.mean_range_over_n},
                           {"ci_halfwidth", row.ci_halfwidth}});
    std::ofstream(dir / "probe.json") << j.dump(2) << "\n";
    manifest.note_output("probe.json");
    manifest.write(dir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-inhomogeneous excited random walk simulator"};
  app.require_subcommand(1);

  std::string config_path, out, test_name;
  bool lazy = false, relax = false;

  auto* validate = app.add_subcommand("validate-config", "parse and validate a config file");
  validate->add_option("--config", config_path, "config file")->required();

  auto* simulate = app.add_subcommand("simulate", "run replicas and write summaries");
  simulate->add_option("--config", config_path, "config file")->required();
  simulate->add_option("--out", out, "run directory (must not exist)")->required();

  auto* pi = app.add_subcommand("estimate-pi", "escape-probability ladder");
  pi->add_option("--config", config_path, "config file")->required();
  pi->add_option("--out", out, "run directory")->required();
  pi->add_flag("--lazy", lazy, "project increments onto the subset complement");

  auto* couple = app.add_subcommand("couple", "joint excited walk and projected lazy walk");
  couple->add_option("--config", config_path, "config file")->required();
  couple->add_option("--out", out, "run directory")->required();
  couple->add_flag("--relax-cone", relax, "skip the d >= 4, k <= d-3 check");

  auto* diagnose = app.add_subcommand("diagnose", "run a statistical verification test");
  diagnose->add_option("--config", config_path, "config file")->required();
  diagnose->add_option("--test", test_name, "test name (overrides diagnostics.test)");
  diagnose->add_option("--out", out, "optional report directory");

  auto* probe = app.add_subcommand("probe-conjecture", "exploratory range-rate ladder");
  probe->add_option("--config", config_path, "config file")->required();
  probe->add_option("--out", out, "optional report directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(config_path);
    if (simulate->parsed()) return cmd_simulate(config_path, out);
    if (pi->parsed()) return cmd_estimate_pi(config_path, out, lazy);
    if (couple->parsed()) return cmd_couple(config_path, out, relax);
    if (diagnose->parsed()) return cmd_diagnose(config_path, test_name, out);
    if (probe->parsed()) return cmd_probe(config_path, out);
  } catch (const RegimeError& e) {
    std::cerr << "regime error: " << e.what() << "\n";
    return 2;
  } catch (const InconclusiveError& e) {
    std::cerr << "inconclusive: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
