#include "pnerw/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

#include "pnerw/error.hpp"
#include "pnerw/excitation.hpp"
#include "pnerw/coupling.hpp"
#include "pnerw/format.hpp"

namespace pnerw::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

using Section = std::map<std::string, RawEntry>;

struct RawConfig {
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_lines;
};

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(trim(s.substr(start)));
      break;
    }
    parts.emplace_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return parts;
}

class Reader {
public:
  Reader(RawConfig& raw, std::vector<ParseError>& errors) : raw_(&raw), errors_(&errors) {}

  void fail(int line, std::string message) { errors_->push_back({line, std::move(message)}); }

  Section* section(const std::string& name) {
    auto it = raw_->sections.find(name);
    return it == raw_->sections.end() ? nullptr : &it->second;
  }

  RawEntry* entry(const std::string& section_name, const std::string& key) {
    Section* s = section(section_name);
    if (!s) return nullptr;
    auto it = s->find(key);
    if (it == s->end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  bool required(const std::string& section_name, const std::string& key) {
    if (entry(section_name, key)) return true;
    const auto line_it = raw_->section_lines.find(section_name);
    fail(line_it == raw_->section_lines.end() ? 0 : line_it->second,
         "missing required key '" + key + "' in [" + section_name + "]");
    return false;
  }

  template <class T, class Fn>
  bool parse_with(const std::string& sec, const std::string& key, T& out, Fn&& convert) {
    RawEntry* e = entry(sec, key);
    if (!e) return false;
    try {
      out = convert(e->value);
      return true;
    } catch (const std::exception& ex) {
      fail(e->line, "key '" + key + "': " + ex.what());
      return false;
    }
  }

  void check_unknown_keys() {
    static const std::map<std::string, std::vector<std::string>> known = {
        {"model",
         {"d", "beta", "c", "ell", "xi", "gamma", "delta", "xi_atoms", "gamma_atoms", "subset"}},
        {"experiment", {"horizon", "replicas", "checkpoints", "seed", "parallelism", "write_trace"}},
        {"diagnostics",
         {"test", "t_points", "n", "n_ladder", "delta", "delta_prime", "T", "level", "tolerance",
          "pi_manifest", "pi_manifest_lazy"}}};
    for (auto& [name, section] : raw_->sections) {
      auto known_it = known.find(name);
      if (known_it == known.end()) {
        fail(raw_->section_lines[name], "unknown section [" + name + "]");
        continue;
      }
      for (auto& [key, entry] : section) {
        if (std::find(known_it->second.begin(), known_it->second.end(), key) ==
            known_it->second.end())
          fail(entry.line, "unknown key '" + key + "' in [" + name + "]");
      }
    }
  }

private:
  RawConfig* raw_;
  std::vector<ParseError>* errors_;
};

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("'" + v + "' is not a number");
  return x;
}

std::uint64_t to_u64(const std::string& v) {
  if (v.empty() || v[0] == '-') throw std::invalid_argument("'" + v + "' is not a nonnegative integer");
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw std::invalid_argument("'" + v + "' is not a nonnegative integer");
  return out;
}

int to_int(const std::string& v) {
  std::size_t pos = 0;
  const int x = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("'" + v + "' is not an integer");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("'" + v + "' is not a boolean");
}

std::vector<double> to_double_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& part : split(v, ','))
    if (!part.empty()) out.push_back(to_double(part));
  return out;
}

std::vector<std::uint64_t> to_u64_list(const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(v, ','))
    if (!part.empty()) out.push_back(to_u64(part));
  return out;
}

std::vector<int> to_int_list(const std::string& v) {
  std::vector<int> out;
  for (const auto& part : split(v, ','))
    if (!part.empty()) out.push_back(to_int(part));
  return out;
}

}  // namespace

ParseResult parse_config(std::string_view text) {
  ParseResult result;
  RawConfig raw;
  std::string current;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (sv.front() == '[') {
      if (sv.back() != ']') {
        result.errors.push_back({line_no, "malformed section header"});
        continue;
      }
      current = std::string(trim(sv.substr(1, sv.size() - 2)));
      if (raw.sections.count(current))
        result.errors.push_back({line_no, "duplicate section [" + current + "]"});
      raw.sections[current];
      raw.section_lines.emplace(current, line_no);
      continue;
    }
    const std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      result.errors.push_back({line_no, "expected 'key = value'"});
      continue;
    }
    if (current.empty()) {
      result.errors.push_back({line_no, "key outside any section"});
      continue;
    }
    const std::string key{trim(sv.substr(0, eq))};
    const std::string value{trim(sv.substr(eq + 1))};
    auto [it, inserted] = raw.sections[current].emplace(key, RawEntry{value, line_no, false});
    if (!inserted) result.errors.push_back({line_no, "duplicate key '" + key + "'"});
  }

  Reader reader(raw, result.errors);
  ConfigFile cfg;

  // [model]
  if (!raw.sections.count("model")) {
    result.errors.push_back({0, "missing section [model]"});
  } else {
    reader.required("model", "d");
    reader.required("model", "beta");
    reader.parse_with("model", "d", cfg.model.d, to_int);
    reader.parse_with("model", "beta", cfg.model.beta, to_double);
    reader.parse_with("model", "c", cfg.model.c, to_double);
    reader.parse_with("model", "ell", cfg.model.ell, [](const std::string& v) { return v; });
    reader.parse_with("model", "xi", cfg.model.xi, [](const std::string& v) { return v; });
    reader.parse_with("model", "gamma", cfg.model.gamma, [](const std::string& v) { return v; });
    double delta = 0.0;
    if (reader.parse_with("model", "delta", delta, to_double)) cfg.model.delta = delta;
    reader.parse_with("model", "xi_atoms", cfg.model.xi_atoms,
                      [](const std::string& v) { return v; });
    reader.parse_with("model", "gamma_atoms", cfg.model.gamma_atoms,
                      [](const std::string& v) { return v; });
    reader.parse_with("model", "subset", cfg.model.subset, to_int_list);
  }

  // [experiment]
  if (!raw.sections.count("experiment")) {
    result.errors.push_back({0, "missing section [experiment]"});
  } else {
    reader.required("experiment", "horizon");
    reader.required("experiment", "seed");
    reader.parse_with("experiment", "horizon", cfg.experiment.horizon, to_u64);
    reader.parse_with("experiment", "replicas", cfg.experiment.replicas, to_u64);
    reader.parse_with("experiment", "checkpoints", cfg.experiment.checkpoints, to_double_list);
    reader.parse_with("experiment", "seed", cfg.experiment.seed, to_u64);
    reader.parse_with("experiment", "parallelism", cfg.experiment.parallelism, to_int);
    reader.parse_with("experiment", "write_trace", cfg.experiment.write_trace, to_bool);
  }

  // [diagnostics] is optional as a whole.
  if (raw.sections.count("diagnostics")) {
    reader.parse_with("diagnostics", "test", cfg.diagnostics.test,
                      [](const std::string& v) { return v; });
    reader.parse_with("diagnostics", "t_points", cfg.diagnostics.t_points, to_double_list);
    std::uint64_t n = 0;
    if (reader.parse_with("diagnostics", "n", n, to_u64)) cfg.diagnostics.n = n;
    reader.parse_with("diagnostics", "n_ladder", cfg.diagnostics.n_ladder, to_u64_list);
    double x = 0.0;
    if (reader.parse_with("diagnostics", "delta", x, to_double)) cfg.diagnostics.delta = x;
    if (reader.parse_with("diagnostics", "delta_prime", x, to_double))
      cfg.diagnostics.delta_prime = x;
    if (reader.parse_with("diagnostics", "T", x, to_double)) cfg.diagnostics.T = x;
    if (reader.parse_with("diagnostics", "level", x, to_double)) cfg.diagnostics.level = x;
    if (reader.parse_with("diagnostics", "tolerance", x, to_double)) cfg.diagnostics.tolerance = x;
    reader.parse_with("diagnostics", "pi_manifest", cfg.diagnostics.pi_manifest,
                      [](const std::string& v) { return v; });
    reader.parse_with("diagnostics", "pi_manifest_lazy", cfg.diagnostics.pi_manifest_lazy,
                      [](const std::string& v) { return v; });
  }

  reader.check_unknown_keys();

  // Semantic validation through the real constructors, so the error text is
  // the one rule that was violated.
  if (result.errors.empty()) {
    try {
      build_walk_config(cfg);
      build_subset(cfg);
      validate_diagnostics_regime(cfg);
    } catch (const std::exception& ex) {
      result.errors.push_back({0, ex.what()});
    }
  }

  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

ConfigFile parse_config_or_throw(std::string_view text) {
  ParseResult r = parse_config(text);
  if (r.ok()) return std::move(*r.config);
  std::string msg = "config errors:";
  for (const auto& e : r.errors)
    msg += "\n  line " + std::to_string(e.line) + ": " + e.message;
  throw ConfigError(msg);
}

std::string serialize_config(const ConfigFile& cfg) {
  std::ostringstream out;
  out << "[model]\n";
  out << "d = " << cfg.model.d << "\n";
  out << "beta = " << format_double(cfg.model.beta) << "\n";
  out << "c = " << format_double(cfg.model.c) << "\n";
  out << "ell = " << cfg.model.ell << "\n";
  out << "xi = " << cfg.model.xi << "\n";
  out << "gamma = " << cfg.model.gamma << "\n";
  if (cfg.model.delta) out << "delta = " << format_double(*cfg.model.delta) << "\n";
  if (!cfg.model.xi_atoms.empty()) out << "xi_atoms = " << cfg.model.xi_atoms << "\n";
  if (!cfg.model.gamma_atoms.empty()) out << "gamma_atoms = " << cfg.model.gamma_atoms << "\n";
  if (!cfg.model.subset.empty()) {
    out << "subset = ";
    for (std::size_t i = 0; i < cfg.model.subset.size(); ++i)
      out << (i ? "," : "") << cfg.model.subset[i];
    out << "\n";
  }
  out << "\n[experiment]\n";
  out << "horizon = " << cfg.experiment.horizon << "\n";
  out << "replicas = " << cfg.experiment.replicas << "\n";
  if (!cfg.experiment.checkpoints.empty()) {
    out << "checkpoints = ";
    for (std::size_t i = 0; i < cfg.experiment.checkpoints.size(); ++i)
      out << (i ? "," : "") << format_double(cfg.experiment.checkpoints[i]);
    out << "\n";
  }
  out << "seed = " << cfg.experiment.seed << "\n";
  out << "parallelism = " << cfg.experiment.parallelism << "\n";
  if (cfg.experiment.write_trace) out << "write_trace = true\n";

  const DiagnosticsSection& dg = cfg.diagnostics;
  const bool any_diag = !dg.test.empty() || !dg.t_points.empty() || dg.n || !dg.n_ladder.empty() ||
                        dg.delta || dg.delta_prime || dg.T || dg.level || dg.tolerance ||
                        !dg.pi_manifest.empty() || !dg.pi_manifest_lazy.empty();
  if (any_diag) {
    out << "\n[diagnostics]\n";
    if (!dg.test.empty()) out << "test = " << dg.test << "\n";
    if (!dg.t_points.empty()) {
      out << "t_points = ";
      for (std::size_t i = 0; i < dg.t_points.size(); ++i)
        out << (i ? "," : "") << format_double(dg.t_points[i]);
      out << "\n";
    }
    if (dg.n) out << "n = " << *dg.n << "\n";
    if (!dg.n_ladder.empty()) {
      out << "n_ladder = ";
      for (std::size_t i = 0; i < dg.n_ladder.size(); ++i) out << (i ? "," : "") << dg.n_ladder[i];
      out << "\n";
    }
    if (dg.delta) out << "delta = " << format_double(*dg.delta) << "\n";
    if (dg.delta_prime) out << "delta_prime = " << format_double(*dg.delta_prime) << "\n";
    if (dg.T) out << "T = " << format_double(*dg.T) << "\n";
    if (dg.level) out << "level = " << format_double(*dg.level) << "\n";
    if (dg.tolerance) out << "tolerance = " << format_double(*dg.tolerance) << "\n";
    if (!dg.pi_manifest.empty()) out << "pi_manifest = " << dg.pi_manifest << "\n";
    if (!dg.pi_manifest_lazy.empty()) out << "pi_manifest_lazy = " << dg.pi_manifest_lazy << "\n";
  }
  return out.str();
}

namespace {

std::vector<std::pair<IncrementDistribution::Atom, double>> parse_atoms(const std::string& text,
                                                                        int d) {
  std::vector<std::pair<IncrementDistribution::Atom, double>> support;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const std::size_t open = item.find('(');
    const std::size_t close = item.find(')');
    const std::size_t colon = item.rfind(':');
    if (open == std::string::npos || close == std::string::npos || colon == std::string::npos ||
        colon < close)
      throw ConfigError("atom entry '" + item + "' must look like (1,0):0.25");
    IncrementDistribution::Atom atom;
    for (const auto& c : split(item.substr(open + 1, close - open - 1), ','))
      atom.push_back(static_cast<std::int64_t>(to_int(c)));
    if (static_cast<int>(atom.size()) != d)
      throw ConfigError("atom '" + item + "' has " + std::to_string(atom.size()) +
                        " coordinates, expected d = " + std::to_string(d));
    support.emplace_back(std::move(atom), to_double(std::string(trim(item.substr(colon + 1)))));
  }
  if (support.empty()) throw ConfigError("empty atom list");
  return support;
}

}  // namespace

Direction build_direction(const ModelSection& m) {
  if (m.ell.size() >= 2 && m.ell[0] == 'e') {
    const int axis = to_int(m.ell.substr(1));
    return Direction::axis(m.d, axis);
  }
  return Direction(to_double_list(m.ell));
}

IncrementDistribution build_xi(const ModelSection& m) {
  if (m.xi == "example-xi") return IncrementDistribution::example_xi(m.d);
  if (m.xi == "inline") {
    if (m.xi_atoms.empty()) throw ConfigError("xi = inline requires xi_atoms");
    return IncrementDistribution(m.d, parse_atoms(m.xi_atoms, m.d));
  }
  throw ConfigError("xi must be 'example-xi' or 'inline', got '" + m.xi + "'");
}

IncrementDistribution build_gamma(const ModelSection& m) {
  if (m.gamma == "example-gamma") {
    if (!m.delta) throw ConfigError("gamma = example-gamma requires delta");
    return IncrementDistribution::example_gamma(m.d, *m.delta);
  }
  if (m.gamma == "inline") {
    if (m.gamma_atoms.empty()) throw ConfigError("gamma = inline requires gamma_atoms");
    return IncrementDistribution(m.d, parse_atoms(m.gamma_atoms, m.d));
  }
  throw ConfigError("gamma must be 'example-gamma' or 'inline', got '" + m.gamma + "'");
}

WalkConfig build_walk_config(const ConfigFile& cfg) {
  const ModelSection& m = cfg.model;
  WalkConfig wc{m.d,
                ExcitationSchedule(m.c, m.beta),
                build_xi(m),
                build_gamma(m),
                build_direction(m),
                cfg.experiment.horizon,
                cfg.experiment.seed};
  validate_walk_config(wc);
  for (double t : cfg.experiment.checkpoints)
    if (!(t > 0.0) || t > 1.0) throw ConfigError("checkpoints must lie in (0, 1]");
  if (cfg.experiment.replicas < 1) throw ConfigError("replicas must be at least 1");
  if (cfg.experiment.parallelism < 0) throw ConfigError("parallelism must be >= 0");
  return wc;
}

std::optional<CoordinateSubset> build_subset(const ConfigFile& cfg) {
  if (cfg.model.subset.empty()) return std::nullopt;
  return CoordinateSubset(cfg.model.subset, cfg.model.d);
}

void validate_diagnostics_regime(const ConfigFile& cfg) {
  const std::string& test = cfg.diagnostics.test;
  if (test.empty()) return;
  static const std::vector<std::string> names = {
      "gaussian-marginal", "range-upper", "kn-band",     "cone-drift",
      "jv-asymptotics",    "d-process",   "stopped-iid", "range-lln"};
  if (std::find(names.begin(), names.end(), test) == names.end())
    throw ConfigError("unknown diagnostic test '" + test + "'");
  const double beta = cfg.model.beta;
  const int d = cfg.model.d;
  if (test == "gaussian-marginal" && !(beta > 0.5 || (beta == 0.5 && d == 2)))
    throw ConfigError(
        "gaussian-marginal applies for beta > 1/2 in any d >= 2, or beta = 1/2 with d = 2; "
        "beta = 1/2 with d >= 4 keeps a sqrt(t)-cone drift (use kn-band / cone-drift)");
  if ((test == "kn-band" || test == "cone-drift")) {
    if (beta != 0.5 || d < 4)
      throw ConfigError(test + " applies at beta = 1/2 in dimension d >= 4");
    if (cfg.model.subset.empty())
      throw ConfigError(test + " needs a drift-spanning subset (model.subset)");
    CoordinateSubset subset(cfg.model.subset, d);
    subset.require_cone_constraints();
    check_drift_span(build_direction(cfg.model), subset);
  }
  if (test == "range-upper" && beta != 0.5)
    throw ConfigError("range-upper applies to the beta = 1/2 schedule");
  if (test == "d-process" && !(beta > 0.5))
    throw ConfigError("d-process vanishing applies for beta > 1/2");
}

}  // namespace pnerw::io
