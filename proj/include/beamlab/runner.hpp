#pragma once

// Scenario execution: runs the configured stages in a fixed order
// (spectrum, resolvent, simulate, decay, compare), writes CSV series and a
// JSON report into the output directory, and maps failures to exit codes:
//   0 success, 1 config error, 2 numerical/precondition error,
//   3 assertion failure under --assert.
// All files are written atomically (temp file + rename) and all numeric
// output is deterministic, so two runs of the same scenario are byte-equal.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamlab/analysis.hpp"
#include "beamlab/config.hpp"
#include "beamlab/discretize.hpp"
#include "beamlab/spectral.hpp"
#include "beamlab/timeint.hpp"
#include "beamlab/version.hpp"

namespace beamlab {

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Eigen::VectorXd load_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open initial data file '" + path.string() + "'");
  std::vector<double> vals;
  double v = 0.0;
  while (in >> v) vals.push_back(v);
  if (!in.eof())
    throw ConfigError("initial data file '" + path.string() + "': non-numeric content");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

inline double base_frequency(const std::vector<std::complex<double>>& ev) {
  double w1 = std::numeric_limits<double>::infinity();
  for (const auto& z : ev)
    if (z.imag() > 1e-6 && z.imag() < w1) w1 = z.imag();
  if (!std::isfinite(w1))
    throw NumericalError("no oscillatory mode found for the decay window");
  return w1;
}

// resolved branch sorted by frequency; true when damping strictly weakens
// toward the top of the band (|Re| decreasing as |Im| grows)
inline bool branch_damping_decreasing(const std::vector<std::complex<double>>& ev,
                                      double ceiling) {
  std::vector<std::pair<double, double>> band;  // (im, re)
  for (const auto& z : ev)
    if (z.imag() > 1e-6 && z.imag() <= ceiling) band.emplace_back(z.imag(), z.real());
  std::sort(band.begin(), band.end());
  if (band.size() < 2) return false;
  for (std::size_t i = 0; i + 1 < band.size(); ++i)
    if (!(std::abs(band[i + 1].second) < std::abs(band[i].second))) return false;
  return true;
}

}  // namespace detail

struct AssertionOutcome {
  std::string name;
  std::string detail;
  bool pass = false;
};

inline nlohmann::json model_report(const ModelSpec& spec) {
  nlohmann::json j;
  j["law"] = law_name(spec.law);
  j["rho"] = spec.rho;
  j["ell"] = spec.ell;
  j["boundary"] = spec.boundary == BoundaryKind::Hybrid ? "hybrid" : "free";
  j["coupling_sign"] = spec.coupling_sign == CouplingSign::EnergyClosing
                           ? "energy_closing"
                           : "non_closing";
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        j["alpha"] = law.alpha;
        if constexpr (std::is_same_v<T, KelvinVoigt>) j["alpha0"] = law.alpha0;
        if constexpr (std::is_same_v<T, ThermoTypeI> ||
                      std::is_same_v<T, ThermoTypeII> ||
                      std::is_same_v<T, NonsimpleThermo>) {
          j["m_couple"] = law.m_couple;
          j["c_heat"] = law.c_heat;
        }
        if constexpr (std::is_same_v<T, ThermoTypeI> ||
                      std::is_same_v<T, NonsimpleThermo>)
          j["kappa"] = law.kappa;
        if constexpr (std::is_same_v<T, ThermoTypeII>) j["k_star"] = law.k_star;
        if constexpr (std::is_same_v<T, NonsimpleThermo>) j["mu"] = law.mu;
      },
      spec.law);
  j["tip"] = {{"m", spec.tip.m},
              {"d", spec.tip.d},
              {"J", spec.tip.J},
              {"gamma", spec.tip.gamma},
              {"gamma_star", spec.tip.gamma_star}};
  const HypothesisCheck hc = validate_hypothesis(spec.tip);
  j["hypothesis"] = {{"holds", hc.holds}, {"margin", hc.margin}};
  j["conservative"] = is_conservative(spec);
  return j;
}

inline nlohmann::json classification_report(const StabilityClassification& cls) {
  nlohmann::json j;
  j["levels"] = cls.levels;
  j["ceilings"] = cls.ceilings;
  j["abscissas"] = cls.abscissas;
  j["cross_abscissas"] = cls.cross_abscissas;
  j["variations"] = cls.variations;
  j["delta"] = cls.delta;
  j["verdict"] = verdict_name(cls.verdict);
  return j;
}

inline int run_scenario(const std::string& config_path, bool assert_mode,
                        const std::string& out_override) {
  try {
    const ScenarioConfig cfg = parse_scenario(detail::slurp(config_path));
    const std::filesystem::path out_dir =
        out_override.empty() ? std::filesystem::path(cfg.out_dir)
                             : std::filesystem::path(out_override);
    std::filesystem::create_directories(out_dir);

    DiscreteSystem sys = assemble(cfg.spec, cfg.n);
    const double ceiling = validity_ceiling(cfg.spec, cfg.n);

    nlohmann::json report;
    report["version"] = version();
    report["model"] = model_report(cfg.spec);
    report["discretization"] = {{"n", cfg.n},
                                {"dofs_total", sys.layout.total},
                                {"dofs_u", sys.layout.n_u},
                                {"dofs_theta", sys.layout.n_theta},
                                {"dofs_theta_rate", sys.layout.n_theta_rate},
                                {"validity_ceiling", ceiling}};
    std::vector<AssertionOutcome> checks;
    auto check = [&](const std::string& name, bool pass, const std::string& detail) {
      checks.push_back({name, detail, pass});
    };

    std::optional<SpectrumReport> spec_rep;
    auto need_spectrum = [&]() -> const SpectrumReport& {
      if (!spec_rep) spec_rep = spectrum(sys);
      return *spec_rep;
    };

    if (cfg.spectrum) {
      const SpectrumReport& rep = need_spectrum();
      std::string csv = "re,im\n";
      for (const auto& z : rep.eigenvalues)
        csv += detail::fmt17(z.real()) + "," + detail::fmt17(z.imag()) + "\n";
      detail::write_file_atomic(out_dir / "spectrum.csv", csv);

      nlohmann::json js;
      js["n_eigenvalues"] = rep.eigenvalues.size();
      js["abscissa"] = rep.abscissa;
      js["abscissa_within_ceiling"] = windowed_abscissa(rep.eigenvalues, ceiling);
      js["branch_modes"] = rep.branch.size();
      js["branch_fit"] = {{"valid", rep.branch_fit.valid},
                          {"amplitude", rep.branch_fit.C},
                          {"exponent", rep.branch_fit.p},
                          {"r_squared", rep.branch_fit.r_squared},
                          {"n_modes", rep.branch_fit.n_modes}};
      report["spectrum"] = js;

      if (cfg.spectrum->expect_abscissa_below) {
        const double a = windowed_abscissa(rep.eigenvalues, ceiling);
        const double bound = *cfg.spectrum->expect_abscissa_below;
        check("spectrum.abscissa_below", a < bound,
              "abscissa " + detail::fmt17(a) + " vs bound " + detail::fmt17(bound));
      }
      if (cfg.spectrum->expect_branch_decreasing) {
        const bool dec = detail::branch_damping_decreasing(rep.eigenvalues, ceiling);
        check("spectrum.branch_decreasing", dec == *cfg.spectrum->expect_branch_decreasing,
              dec ? "damping decreases along the branch"
                  : "damping is not monotonically decreasing");
      }
    }

    if (cfg.resolvent) {
      const ResolventSweep sweep = sweep_resolvent(
          sys, cfg.resolvent->lambda_min, cfg.resolvent->lambda_max,
          cfg.resolvent->points_per_decade);
      std::string csv = "lambda,norm\n";
      for (const auto& s : sweep.samples)
        csv += detail::fmt17(s.lambda) + "," + detail::fmt17(s.norm) + "\n";
      detail::write_file_atomic(out_dir / "resolvent.csv", csv);

      nlohmann::json js;
      js["lambda_min"] = cfg.resolvent->lambda_min;
      js["lambda_max"] = cfg.resolvent->lambda_max;
      js["points_per_decade"] = cfg.resolvent->points_per_decade;
      js["n_samples"] = sweep.samples.size();
      js["n_masked"] = sweep.n_masked;
      js["fit_refused"] = sweep.fit_refused;
      js["refusal_reason"] = sweep.refusal_reason;
      if (!sweep.fit_refused) {
        js["slope"] = sweep.fitted_slope;
        js["fit_window"] = {sweep.fit_window.first, sweep.fit_window.second};
      }
      report["resolvent"] = js;

      const bool has_range = cfg.resolvent->expect_slope_min ||
                             cfg.resolvent->expect_slope_max;
      if (has_range) {
        if (sweep.fit_refused) {
          check("resolvent.slope_range", false, "fit refused: " + sweep.refusal_reason);
        } else {
          bool ok = true;
          if (cfg.resolvent->expect_slope_min)
            ok = ok && sweep.fitted_slope >= *cfg.resolvent->expect_slope_min;
          if (cfg.resolvent->expect_slope_max)
            ok = ok && sweep.fitted_slope <= *cfg.resolvent->expect_slope_max;
          check("resolvent.slope_range", ok,
                "slope " + detail::fmt17(sweep.fitted_slope));
        }
      }
    }

    std::optional<Trajectory> traj;
    if (cfg.simulate) {
      InitialData init = FirstMode{};
      if (cfg.simulate->initial == InitialKind::SmoothPolynomial)
        init = SmoothPolynomial{};
      else if (cfg.simulate->initial == InitialKind::FromFile)
        init = FromFile{detail::load_vector(cfg.simulate->file)};
      traj = integrate(sys, init, cfg.simulate->dt, cfg.simulate->t_final,
                       cfg.simulate->record_stride);

      std::string csv = "t,energy,dissipation_cumulative,balance_residual\n";
      for (std::size_t i = 0; i < traj->times.size(); ++i)
        csv += detail::fmt17(traj->times[i]) + "," + detail::fmt17(traj->energies[i]) +
               "," + detail::fmt17(traj->dissipation_integral[i]) + "," +
               detail::fmt17(traj->balance_residual[i]) + "\n";
      detail::write_file_atomic(out_dir / "energy.csv", csv);

      const double e0 = traj->energies.front();
      const double ef = traj->energies.back();
      const double drift = std::abs(ef - e0) / (e0 > 0.0 ? e0 : 1.0);
      const double ledger = energy_ledger_check(*traj);
      nlohmann::json js;
      js["dt"] = cfg.simulate->dt;
      js["t_final"] = cfg.simulate->t_final;
      js["steps"] = traj->times.size() - 1;
      js["energy_initial"] = e0;
      js["energy_final"] = ef;
      js["energy_drift"] = drift;
      js["ledger_max_defect"] = ledger;
      report["simulate"] = js;

      if (cfg.simulate->expect_drift_below)
        check("simulate.drift_below", drift < *cfg.simulate->expect_drift_below,
              "drift " + detail::fmt17(drift));
      if (cfg.simulate->expect_ledger_below)
        check("simulate.ledger_below", ledger < *cfg.simulate->expect_ledger_below,
              "ledger defect " + detail::fmt17(ledger));
    }

    if (cfg.decay) {
      DecayWindow window;
      if (cfg.decay->t0 && cfg.decay->t1) {
        window.t0 = *cfg.decay->t0;
        window.t1 = *cfg.decay->t1;
      } else {
        const SpectrumReport& rep = need_spectrum();
        const double w1 = detail::base_frequency(rep.eigenvalues);
        const double a = windowed_abscissa(rep.eigenvalues, ceiling);
        window = suggest_decay_window(w1, a, cfg.simulate->t_final);
        if (cfg.decay->t0) window.t0 = *cfg.decay->t0;
        if (cfg.decay->t1) window.t1 = *cfg.decay->t1;
      }
      const DecayFit fit = fit_decay(*traj, window,
                                     cfg.decay->polynomial ? DecayModel::Polynomial
                                                           : DecayModel::Exponential);
      nlohmann::json js;
      js["model"] = cfg.decay->polynomial ? "polynomial" : "exponential";
      js["window"] = {{"t0", window.t0}, {"t1", window.t1}};
      js["exponent"] = fit.exponent;
      js["amplitude"] = fit.amplitude;
      js["r_squared"] = fit.r_squared;
      js["n_samples"] = fit.n_samples;
      report["decay"] = js;

      if (cfg.decay->expect_exponent_min || cfg.decay->expect_exponent_max) {
        bool ok = true;
        if (cfg.decay->expect_exponent_min)
          ok = ok && fit.exponent >= *cfg.decay->expect_exponent_min;
        if (cfg.decay->expect_exponent_max)
          ok = ok && fit.exponent <= *cfg.decay->expect_exponent_max;
        check("decay.exponent_range", ok, "exponent " + detail::fmt17(fit.exponent));
      }
    }

    if (cfg.compare) {
      const EquivalenceReport eq = equivalence_harness(cfg.spec, cfg.compare->levels);
      nlohmann::json js;
      js["levels"] = cfg.compare->levels;
      js["expected"] = verdict_name(eq.expected);
      js["free"] = classification_report(eq.free_cls);
      js["hybrid"] = classification_report(eq.hybrid_cls);
      js["agreement"] = agreement_name(eq.agreement);
      js["match"] = eq.agreement == Agreement::Match;
      report["compare"] = js;

      if (cfg.compare->expect_match)
        check("compare.match", (eq.agreement == Agreement::Match) == *cfg.compare->expect_match,
              std::string("agreement: ") + agreement_name(eq.agreement));
    }

    nlohmann::json ja = nlohmann::json::array();
    int failures = 0;
    for (const auto& c : checks) {
      ja.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
      if (!c.pass) ++failures;
    }
    report["assertions"] = {{"evaluated", checks.size()},
                            {"failed", failures},
                            {"results", ja}};
    detail::write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");

    for (const auto& c : checks)
      if (!c.pass)
        std::cerr << "assertion failed: " << c.name << " (" << c.detail << ")\n";
    if (assert_mode && failures > 0) return 3;
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
}

inline int export_matrices(const std::string& config_path,
                           const std::string& out_override) {
  try {
    const ScenarioConfig cfg = parse_scenario(detail::slurp(config_path));
    const std::filesystem::path out_dir =
        out_override.empty() ? std::filesystem::path(cfg.out_dir)
                             : std::filesystem::path(out_override);
    std::filesystem::create_directories(out_dir);
    const DiscreteSystem sys = assemble(cfg.spec, cfg.n);

    auto dump = [&](const Eigen::MatrixXd& m, const char* name) {
      std::string out;
      for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j)
          if (m(i, j) != 0.0)
            out += std::to_string(i) + " " + std::to_string(j) + " " +
                   detail::fmt17(m(i, j)) + "\n";
      detail::write_file_atomic(out_dir / name, out);
    };
    dump(sys.E, "E.txt");
    dump(sys.S, "S.txt");
    dump(sys.energy_form(), "H.txt");
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace beamlab
