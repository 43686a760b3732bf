#pragma once

// Mesh-sequence stability classification and energy decay fitting.
//
// The classifier looks at the spectral abscissa restricted to the resolved
// band |Im| <= validity_ceiling(n) on a strictly increasing mesh ladder.
// Level-to-level variation is measured cross-band: the finer level's
// eigenvalues are windowed by the *coarser* level's ceiling before comparing,
// so the statistic measures discretization convergence and is not polluted by
// newly admitted high-frequency modes.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "beamlab/discretize.hpp"
#include "beamlab/spectral.hpp"
#include "beamlab/timeint.hpp"

namespace beamlab {

enum class Verdict { ExponentiallyStable, NotExponentiallyStable, Inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::ExponentiallyStable: return "exponentially_stable";
    case Verdict::NotExponentiallyStable: return "not_exponentially_stable";
    default: return "inconclusive";
  }
}

struct StabilityClassification {
  std::vector<int> levels;
  std::vector<double> ceilings;
  std::vector<double> abscissas;        // windowed by the level's own ceiling
  std::vector<double> cross_abscissas;  // level k+1 windowed by ceiling k
  std::vector<double> variations;       // relative change, coarse band
  double delta = 0.0;                   // uniform-negativity bar: |a_0| / 2
  Verdict verdict = Verdict::Inconclusive;
};

inline StabilityClassification classify_stability(const ModelSpec& spec,
                                                  const std::vector<int>& levels) {
  if (levels.size() < 3)
    throw PreconditionError("classify: need at least 3 mesh levels");
  for (std::size_t k = 1; k < levels.size(); ++k)
    if (levels[k] <= levels[k - 1])
      throw PreconditionError("classify: mesh levels must be strictly increasing");

  StabilityClassification cls;
  cls.levels = levels;
  std::vector<std::vector<std::complex<double>>> spectra;
  for (int n : levels) {
    DiscreteSystem sys = assemble(spec, n);
    SpectrumReport rep = spectrum(sys);
    spectra.push_back(rep.eigenvalues);
    cls.ceilings.push_back(validity_ceiling(spec, n));
    cls.abscissas.push_back(windowed_abscissa(rep.eigenvalues, cls.ceilings.back()));
  }
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    const double cross = windowed_abscissa(spectra[k + 1], cls.ceilings[k]);
    cls.cross_abscissas.push_back(cross);
    cls.variations.push_back(std::abs(cross - cls.abscissas[k]) /
                             (std::abs(cls.abscissas[k]) + 1e-300));
  }
  cls.delta = 0.5 * std::abs(cls.abscissas.front());

  const bool all_tiny = std::all_of(cls.abscissas.begin(), cls.abscissas.end(),
                                    [](double a) { return std::abs(a) <= 1e-8; });
  const bool all_below = std::all_of(cls.abscissas.begin(), cls.abscissas.end(),
                                     [&](double a) { return a <= -cls.delta; });
  const bool converged = std::all_of(cls.variations.begin(), cls.variations.end(),
                                     [](double v) { return v < 0.25; });
  const bool shrinking =
      std::abs(cls.abscissas.front()) >= 2.0 * std::abs(cls.abscissas.back());

  if (all_tiny)
    cls.verdict = Verdict::NotExponentiallyStable;
  else if (all_below && converged)
    cls.verdict = Verdict::ExponentiallyStable;
  else if (shrinking)
    cls.verdict = Verdict::NotExponentiallyStable;
  else
    cls.verdict = Verdict::Inconclusive;
  return cls;
}

// --- energy decay fitting -------------------------------------------------

enum class DecayModel { Exponential, Polynomial };

struct DecayWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

struct DecayFit {
  double exponent = 0.0;   // slope of log E vs t (exponential) or log t (polynomial)
  double amplitude = 0.0;  // fitted E at t = 0 (exponential) or t = 1 (polynomial)
  double r_squared = 0.0;
  int n_samples = 0;
};

inline DecayFit fit_decay(const Trajectory& traj, const DecayWindow& window,
                          DecayModel model) {
  if (!(window.t1 > window.t0))
    throw PreconditionError("fit_decay: window must have t1 > t0");
  if (model == DecayModel::Polynomial && !(window.t0 > 0.0))
    throw PreconditionError("fit_decay: polynomial model needs t0 > 0");

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const double e = traj.energies[i];
    if (t < window.t0 || t > window.t1 || !(e > 0.0)) continue;
    xs.push_back(model == DecayModel::Polynomial ? std::log(t) : t);
    ys.push_back(std::log(e));
  }
  if (xs.size() < 20)
    throw PreconditionError("fit_decay: need at least 20 positive samples in window");

  const std::size_t m = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = m * sxx - sx * sx;
  if (std::abs(det) < 1e-300)
    throw NumericalError("fit_decay: degenerate sample distribution");
  DecayFit fit;
  fit.exponent = (m * sxy - sx * sy) / det;
  const double intercept = (sy * sxx - sx * sxy) / det;
  fit.amplitude = std::exp(intercept);
  fit.n_samples = static_cast<int>(m);

  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / m;
  for (std::size_t i = 0; i < m; ++i) {
    const double pred = intercept + fit.exponent * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// Default fitting window: start after the first few oscillation periods,
// stop before the slowest resolved mode has decayed away.
inline DecayWindow suggest_decay_window(double omega1, double abscissa,
                                        double t_final) {
  if (!(omega1 > 0.0))
    throw PreconditionError("decay window: need a positive base frequency");
  DecayWindow w;
  w.t0 = 5.0 / omega1;
  const double a = std::abs(abscissa);
  w.t1 = a > 0.0 ? std::min(0.5 / a, t_final) : t_final;
  if (!(w.t1 > w.t0))
    throw PreconditionError("decay window: horizon too short for this model");
  return w;
}

// --- free/hybrid equivalence harness ---------------------------------------

enum class Agreement { Match, Mismatch, Indeterminate };

inline const char* agreement_name(Agreement a) {
  switch (a) {
    case Agreement::Match: return "match";
    case Agreement::Mismatch: return "mismatch";
    default: return "indeterminate";
  }
}

inline Verdict expected_verdict(const ConstitutiveLaw& law) {
  return std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, KelvinVoigt> ||
                      std::is_same_v<T, ThermoTypeI> ||
                      std::is_same_v<T, NonsimpleThermo>)
          return Verdict::ExponentiallyStable;
        else
          return Verdict::NotExponentiallyStable;
      },
      law);
}

struct EquivalenceReport {
  StabilityClassification free_cls;
  StabilityClassification hybrid_cls;
  Verdict expected = Verdict::Inconclusive;
  Agreement agreement = Agreement::Indeterminate;
};

// Classifies the same constitutive law under both boundary configurations and
// checks that the verdicts agree with each other and with the damped/undamped
// character of the law.
inline EquivalenceReport equivalence_harness(const ModelSpec& base,
                                             const std::vector<int>& levels) {
  EquivalenceReport rep;
  rep.expected = expected_verdict(base.law);
  ModelSpec spec = base;
  spec.boundary = BoundaryKind::Free;
  rep.free_cls = classify_stability(spec, levels);
  spec.boundary = BoundaryKind::Hybrid;
  rep.hybrid_cls = classify_stability(spec, levels);
  const Verdict f = rep.free_cls.verdict;
  const Verdict h = rep.hybrid_cls.verdict;
  if (f == Verdict::Inconclusive || h == Verdict::Inconclusive)
    rep.agreement = Agreement::Indeterminate;
  else if (f == rep.expected && h == rep.expected)
    rep.agreement = Agreement::Match;
  else
    rep.agreement = Agreement::Mismatch;
  return rep;
}

inline EquivalenceReport equivalence_harness(const ConstitutiveLaw& law,
                                             const std::vector<int>& levels) {
  return equivalence_harness(default_spec(law, BoundaryKind::Hybrid), levels);
}

}  // namespace beamlab
