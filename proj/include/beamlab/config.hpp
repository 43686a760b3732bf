#pragma once

// Scenario files: INI-style sections of key = value lines. '#' or ';' start a
// comment line. Every key must be recognized and applicable; misspelled or
// inapplicable keys are hard errors so a scenario never silently runs with a
// default the author thought they had overridden.

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "beamlab/model.hpp"

namespace beamlab {

enum class InitialKind { FirstMode, SmoothPolynomial, FromFile };

struct SpectrumJob {
  std::optional<double> expect_abscissa_below;
  std::optional<bool> expect_branch_decreasing;
};

struct ResolventJob {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int points_per_decade = 20;
  std::optional<double> expect_slope_min;
  std::optional<double> expect_slope_max;
};

struct SimulateJob {
  double dt = 0.0;
  double t_final = 0.0;
  int record_stride = 100;
  InitialKind initial = InitialKind::FirstMode;
  std::string file;
  std::optional<double> expect_drift_below;
  std::optional<double> expect_ledger_below;
};

struct DecayJob {
  bool polynomial = true;
  std::optional<double> t0;
  std::optional<double> t1;
  std::optional<double> expect_exponent_min;
  std::optional<double> expect_exponent_max;
};

struct CompareJob {
  std::vector<int> levels{16, 32, 64};
  std::optional<bool> expect_match;
};

struct ScenarioConfig {
  ModelSpec spec;
  int n = 32;
  std::string out_dir = "out";
  std::optional<SpectrumJob> spectrum;
  std::optional<ResolventJob> resolvent;
  std::optional<SimulateJob> simulate;
  std::optional<DecayJob> decay;
  std::optional<CompareJob> compare;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct RawConfig {
  // section -> key -> value, plus consumed tracking for unknown-key reporting
  std::map<std::string, std::map<std::string, std::string>> data;
  mutable std::map<std::string, std::set<std::string>> consumed;

  bool has_section(const std::string& sec) const { return data.count(sec) > 0; }

  std::optional<std::string> get(const std::string& sec, const std::string& key) const {
    auto s = data.find(sec);
    if (s == data.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    consumed[sec].insert(key);
    return k->second;
  }

  void finish(const std::set<std::string>& known_sections) const {
    for (const auto& [sec, kv] : data) {
      if (!known_sections.count(sec))
        throw ConfigError("unknown section '" + sec + "'");
      for (const auto& [key, _] : kv)
        if (!consumed[sec].count(key))
          throw ConfigError("unknown key '" + sec + "." + key + "'");
    }
  }
};

inline RawConfig parse_ini(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      raw.data[section];
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (raw.data[section].count(key))
      throw ConfigError("duplicate key '" + section + "." + key + "'");
    raw.data[section][key] = val;
  }
  return raw;
}

inline double to_double(const std::string& sec, const std::string& key,
                        const std::string& val) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(val, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != val.size() || val.empty())
    throw ConfigError("key '" + sec + "." + key + "': expected a number, got '" + val + "'");
  return out;
}

inline int to_int(const std::string& sec, const std::string& key,
                  const std::string& val) {
  std::size_t pos = 0;
  int out = 0;
  try {
    out = std::stoi(val, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != val.size() || val.empty())
    throw ConfigError("key '" + sec + "." + key + "': expected an integer, got '" + val + "'");
  return out;
}

inline bool to_bool(const std::string& sec, const std::string& key,
                    const std::string& val) {
  if (val == "true" || val == "yes" || val == "1") return true;
  if (val == "false" || val == "no" || val == "0") return false;
  throw ConfigError("key '" + sec + "." + key + "': expected true/false, got '" + val + "'");
}

inline std::vector<int> to_int_list(const std::string& sec, const std::string& key,
                                    const std::string& val) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(val);
  while (std::getline(in, item, ',')) out.push_back(to_int(sec, key, trim(item)));
  if (out.empty())
    throw ConfigError("key '" + sec + "." + key + "': expected a comma-separated list");
  return out;
}

inline ConstitutiveLaw make_law(const RawConfig& raw) {
  const auto name = raw.get("model", "law");
  if (!name) throw ConfigError("missing required key 'model.law'");
  auto num = [&](const char* key, double fallback) {
    const auto v = raw.get("model", key);
    return v ? to_double("model", key, *v) : fallback;
  };
  auto reject = [&](const char* key, const std::string& law) {
    if (raw.get("model", key))
      throw ConfigError("key 'model." + std::string(key) + "' is not used by law '" +
                        law + "'");
  };
  const std::string& l = *name;
  if (l == "elastic") {
    for (const char* k : {"alpha0", "m_couple", "c_heat", "kappa", "k_star", "mu"})
      reject(k, l);
    return Elastic{num("alpha", 1.0)};
  }
  if (l == "kelvin_voigt") {
    for (const char* k : {"m_couple", "c_heat", "kappa", "k_star", "mu"}) reject(k, l);
    return KelvinVoigt{num("alpha", 1.0), num("alpha0", 0.05)};
  }
  if (l == "thermo_type_i") {
    for (const char* k : {"alpha0", "k_star", "mu"}) reject(k, l);
    return ThermoTypeI{num("alpha", 1.0), num("m_couple", 0.1), num("c_heat", 1.0),
                       num("kappa", 1.0)};
  }
  if (l == "thermo_type_ii") {
    for (const char* k : {"alpha0", "kappa", "mu"}) reject(k, l);
    return ThermoTypeII{num("alpha", 1.0), num("m_couple", 0.1), num("c_heat", 1.0),
                        num("k_star", 1.0)};
  }
  if (l == "nonsimple") {
    for (const char* k : {"alpha0", "k_star"}) reject(k, l);
    return NonsimpleThermo{num("alpha", 1.0), num("mu", 1.0), num("m_couple", 0.1),
                           num("c_heat", 1.0), num("kappa", 1.0)};
  }
  throw ConfigError("key 'model.law': unknown law '" + l + "'");
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
  using detail::to_bool;
  using detail::to_double;
  using detail::to_int;
  using detail::to_int_list;
  const detail::RawConfig raw = detail::parse_ini(text);
  ScenarioConfig cfg;

  cfg.spec.law = detail::make_law(raw);
  if (auto v = raw.get("model", "rho")) cfg.spec.rho = to_double("model", "rho", *v);
  if (auto v = raw.get("model", "ell")) cfg.spec.ell = to_double("model", "ell", *v);
  if (auto v = raw.get("model", "boundary")) {
    if (*v == "free") cfg.spec.boundary = BoundaryKind::Free;
    else if (*v == "hybrid") cfg.spec.boundary = BoundaryKind::Hybrid;
    else throw ConfigError("key 'model.boundary': expected free or hybrid, got '" + *v + "'");
  }
  if (auto v = raw.get("model", "coupling_sign")) {
    if (*v == "energy_closing") cfg.spec.coupling_sign = CouplingSign::EnergyClosing;
    else if (*v == "non_closing") cfg.spec.coupling_sign = CouplingSign::NonClosing;
    else throw ConfigError("key 'model.coupling_sign': expected energy_closing or "
                           "non_closing, got '" + *v + "'");
  }

  if (raw.has_section("tip")) {
    if (auto v = raw.get("tip", "m")) cfg.spec.tip.m = to_double("tip", "m", *v);
    if (auto v = raw.get("tip", "d")) cfg.spec.tip.d = to_double("tip", "d", *v);
    if (auto v = raw.get("tip", "J")) cfg.spec.tip.J = to_double("tip", "J", *v);
    if (auto v = raw.get("tip", "gamma")) cfg.spec.tip.gamma = to_double("tip", "gamma", *v);
    if (auto v = raw.get("tip", "gamma_star"))
      cfg.spec.tip.gamma_star = to_double("tip", "gamma_star", *v);
  }

  if (auto v = raw.get("discretization", "n")) cfg.n = to_int("discretization", "n", *v);
  if (cfg.n < 2) throw ConfigError("key 'discretization.n': need at least 2 elements");

  if (auto v = raw.get("output", "dir")) cfg.out_dir = *v;

  if (raw.has_section("spectrum")) {
    SpectrumJob job;
    if (auto v = raw.get("spectrum", "expect_abscissa_below"))
      job.expect_abscissa_below = to_double("spectrum", "expect_abscissa_below", *v);
    if (auto v = raw.get("spectrum", "expect_branch_decreasing"))
      job.expect_branch_decreasing = to_bool("spectrum", "expect_branch_decreasing", *v);
    cfg.spectrum = job;
  }

  if (raw.has_section("resolvent")) {
    ResolventJob job;
    const auto lo = raw.get("resolvent", "lambda_min");
    const auto hi = raw.get("resolvent", "lambda_max");
    if (!lo || !hi)
      throw ConfigError("section [resolvent] requires lambda_min and lambda_max");
    job.lambda_min = to_double("resolvent", "lambda_min", *lo);
    job.lambda_max = to_double("resolvent", "lambda_max", *hi);
    if (auto v = raw.get("resolvent", "points_per_decade"))
      job.points_per_decade = to_int("resolvent", "points_per_decade", *v);
    if (auto v = raw.get("resolvent", "expect_slope_min"))
      job.expect_slope_min = to_double("resolvent", "expect_slope_min", *v);
    if (auto v = raw.get("resolvent", "expect_slope_max"))
      job.expect_slope_max = to_double("resolvent", "expect_slope_max", *v);
    cfg.resolvent = job;
  }

  if (raw.has_section("simulate")) {
    SimulateJob job;
    const auto dt = raw.get("simulate", "dt");
    const auto tf = raw.get("simulate", "t_final");
    if (!dt || !tf) throw ConfigError("section [simulate] requires dt and t_final");
    job.dt = to_double("simulate", "dt", *dt);
    job.t_final = to_double("simulate", "t_final", *tf);
    if (auto v = raw.get("simulate", "record_stride"))
      job.record_stride = to_int("simulate", "record_stride", *v);
    if (auto v = raw.get("simulate", "initial")) {
      if (*v == "first_mode") job.initial = InitialKind::FirstMode;
      else if (*v == "smooth_polynomial") job.initial = InitialKind::SmoothPolynomial;
      else if (*v == "from_file") job.initial = InitialKind::FromFile;
      else throw ConfigError("key 'simulate.initial': unknown kind '" + *v + "'");
    }
    if (auto v = raw.get("simulate", "file")) job.file = *v;
    if (job.initial == InitialKind::FromFile && job.file.empty())
      throw ConfigError("key 'simulate.initial' = from_file requires 'simulate.file'");
    if (auto v = raw.get("simulate", "expect_drift_below"))
      job.expect_drift_below = to_double("simulate", "expect_drift_below", *v);
    if (auto v = raw.get("simulate", "expect_ledger_below"))
      job.expect_ledger_below = to_double("simulate", "expect_ledger_below", *v);
    cfg.simulate = job;
  }

  if (raw.has_section("decay")) {
    DecayJob job;
    if (auto v = raw.get("decay", "model")) {
      if (*v == "polynomial") job.polynomial = true;
      else if (*v == "exponential") job.polynomial = false;
      else throw ConfigError("key 'decay.model': expected polynomial or exponential, got '" +
                             *v + "'");
    }
    if (auto v = raw.get("decay", "t0")) job.t0 = to_double("decay", "t0", *v);
    if (auto v = raw.get("decay", "t1")) job.t1 = to_double("decay", "t1", *v);
    if (auto v = raw.get("decay", "expect_exponent_min"))
      job.expect_exponent_min = to_double("decay", "expect_exponent_min", *v);
    if (auto v = raw.get("decay", "expect_exponent_max"))
      job.expect_exponent_max = to_double("decay", "expect_exponent_max", *v);
    if (!cfg.simulate)
      throw ConfigError("section [decay] requires a [simulate] section");
    cfg.decay = job;
  }

  if (raw.has_section("compare")) {
    CompareJob job;
    if (auto v = raw.get("compare", "levels"))
      job.levels = to_int_list("compare", "levels", *v);
    if (auto v = raw.get("compare", "expect_match"))
      job.expect_match = to_bool("compare", "expect_match", *v);
    cfg.compare = job;
  }

  static const std::set<std::string> known = {
      "model", "tip", "discretization", "spectrum", "resolvent",
      "simulate", "decay", "compare", "output"};
  raw.finish(known);

  validate(cfg.spec);
  return cfg;
}

}  // namespace beamlab
