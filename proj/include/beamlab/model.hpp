#pragma once

// Beam model descriptions: constitutive laws, tip-body data, and the
// small boundary ODE matrices. Everything here is immutable value types.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

namespace beamlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Rigid tip body at x = 0. Granular contents damp translation (gamma)
// and rotation (gamma_star); d offsets the center of mass.
struct TipBody {
  double m = 1.0;
  double d = 0.1;
  double J = 0.1;
  double gamma = 1.0;
  double gamma_star = 0.5;
};

struct Elastic {
  double alpha = 1.0;
};
struct KelvinVoigt {
  double alpha = 1.0;
  double alpha0 = 0.05;
};
struct ThermoTypeI {
  double alpha = 1.0;
  double m_couple = 0.1;
  double c_heat = 1.0;
  double kappa = 1.0;
};
struct ThermoTypeII {
  double alpha = 1.0;
  double m_couple = 0.1;
  double c_heat = 1.0;
  double k_star = 1.0;
};
struct NonsimpleThermo {
  double alpha = 1.0;
  double mu = 1.0;
  double m_couple = 0.1;
  double c_heat = 1.0;
  double kappa = 1.0;
};

using ConstitutiveLaw =
    std::variant<Elastic, KelvinVoigt, ThermoTypeI, ThermoTypeII, NonsimpleThermo>;

enum class BoundaryKind { Free, Hybrid };

// Which sign convention couples the heat equation back to the beam.
// EnergyClosing is the one under which the assembled system satisfies the
// exact power balance (dissipative for type I / nonsimple, conservative for
// type II). NonClosing flips the thermal feedback for comparison runs; it
// breaks the balance and exists so that the difference is testable.
enum class CouplingSign { EnergyClosing, NonClosing };

struct ModelSpec {
  ConstitutiveLaw law = Elastic{};
  double rho = 1.0;
  double ell = 1.0;
  BoundaryKind boundary = BoundaryKind::Hybrid;
  TipBody tip;  // ignored when boundary == Free
  CouplingSign coupling_sign = CouplingSign::EnergyClosing;
};

struct BoundaryMatrices {
  Eigen::Matrix2d B;
  Eigen::Matrix2d K;
};

struct HypothesisCheck {
  bool holds = true;
  double margin = 0.0;  // 2*gamma_star - d*gamma
};

inline double law_alpha(const ConstitutiveLaw& law) {
  return std::visit([](const auto& l) { return l.alpha; }, law);
}

inline const char* law_name(const ConstitutiveLaw& law) {
  struct V {
    const char* operator()(const Elastic&) const { return "elastic"; }
    const char* operator()(const KelvinVoigt&) const { return "kelvin_voigt"; }
    const char* operator()(const ThermoTypeI&) const { return "thermo_type_i"; }
    const char* operator()(const ThermoTypeII&) const { return "thermo_type_ii"; }
    const char* operator()(const NonsimpleThermo&) const { return "nonsimple"; }
  };
  return std::visit(V{}, law);
}

inline void validate(const ModelSpec& spec) {
  if (spec.rho <= 0.0) throw PreconditionError("model: rho must be > 0");
  if (spec.ell <= 0.0) throw PreconditionError("model: ell must be > 0");
  std::visit(
      [](const auto& l) {
        using L = std::decay_t<decltype(l)>;
        if (l.alpha <= 0.0) throw PreconditionError("model: alpha must be > 0");
        if constexpr (std::is_same_v<L, KelvinVoigt>) {
          if (l.alpha0 <= 0.0) throw PreconditionError("model: alpha0 must be > 0");
        } else if constexpr (std::is_same_v<L, ThermoTypeI>) {
          if (l.m_couple <= 0.0 || l.c_heat <= 0.0 || l.kappa <= 0.0)
            throw PreconditionError("model: thermal coefficients must be > 0");
        } else if constexpr (std::is_same_v<L, ThermoTypeII>) {
          if (l.m_couple <= 0.0 || l.c_heat <= 0.0 || l.k_star <= 0.0)
            throw PreconditionError("model: thermal coefficients must be > 0");
        } else if constexpr (std::is_same_v<L, NonsimpleThermo>) {
          if (l.mu <= 0.0 || l.m_couple <= 0.0 || l.c_heat <= 0.0 || l.kappa <= 0.0)
            throw PreconditionError("model: thermal coefficients must be > 0");
        }
      },
      spec.law);
  if (spec.boundary == BoundaryKind::Hybrid) {
    const TipBody& t = spec.tip;
    if (t.m <= 0.0 || t.J <= 0.0)
      throw PreconditionError("model: tip mass and inertia must be > 0");
    if (t.d < 0.0 || t.gamma < 0.0 || t.gamma_star < 0.0)
      throw PreconditionError("model: tip d, gamma, gamma_star must be >= 0");
  }
}

inline BoundaryMatrices build_tip_matrices(const TipBody& tip) {
  if (tip.m <= 0.0 || tip.J <= 0.0)
    throw PreconditionError("tip: mass and inertia must be > 0 (B would be singular)");
  BoundaryMatrices out;
  out.B << tip.m, tip.m * tip.d, tip.m * tip.d, tip.J + tip.m * tip.d * tip.d;
  out.K << tip.gamma, 0.0, tip.d * tip.gamma, tip.d * tip.gamma_star;
  return out;
}

inline HypothesisCheck validate_hypothesis(const TipBody& tip) {
  HypothesisCheck h;
  h.margin = 2.0 * tip.gamma_star - tip.d * tip.gamma;
  h.holds = tip.d * tip.gamma <= 2.0 * tip.gamma_star;
  return h;
}

// Residual of the boundary ODE B*V_dot + K*V = Gamma; zero on exact solutions.
inline Eigen::Vector2d tip_ode_residual(const TipBody& tip, const Eigen::Vector2d& V,
                                        const Eigen::Vector2d& V_dot,
                                        const Eigen::Vector2d& Gamma_value) {
  BoundaryMatrices bm = build_tip_matrices(tip);
  return bm.B * V_dot + bm.K * V - Gamma_value;
}

// Zero damping makes the elastic and type II models exactly conservative;
// the other laws always carry bulk dissipation.
inline bool is_conservative(const ModelSpec& spec) {
  bool no_tip_damping = spec.boundary == BoundaryKind::Free ||
                        (spec.tip.gamma == 0.0 && spec.tip.gamma_star == 0.0);
  bool lossless_law = std::holds_alternative<Elastic>(spec.law) ||
                      std::holds_alternative<ThermoTypeII>(spec.law);
  return no_tip_damping && lossless_law;
}

// Uniform time-unit rescale t -> c*t: every generalized eigenvalue of the
// assembled system divides by c exactly. Coefficients multiplying k time
// derivatives pick up c^k; the thermal fields are rescaled internally, which
// shifts m_couple by sqrt(c) (type I, nonsimple) and k_star by 1/c^2 (type II).
inline ModelSpec rescaled_time(const ModelSpec& spec, double c) {
  if (c <= 0.0) throw PreconditionError("rescaled_time: factor must be > 0");
  ModelSpec out = spec;
  out.rho = spec.rho * c * c;
  out.tip.m = spec.tip.m * c * c;
  out.tip.J = spec.tip.J * c * c;
  out.tip.gamma = spec.tip.gamma * c;
  out.tip.gamma_star = spec.tip.gamma_star * c;
  std::visit(
      [c](auto& l) {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, KelvinVoigt>) {
          l.alpha0 *= c;
        } else if constexpr (std::is_same_v<L, ThermoTypeI>) {
          l.m_couple *= std::sqrt(c);
          l.c_heat *= c;
        } else if constexpr (std::is_same_v<L, NonsimpleThermo>) {
          l.m_couple *= std::sqrt(c);
          l.c_heat *= c;
        } else if constexpr (std::is_same_v<L, ThermoTypeII>) {
          l.k_star /= c * c;
        }
      },
      out.law);
  return out;
}

inline ModelSpec default_spec(const ConstitutiveLaw& law, BoundaryKind boundary) {
  ModelSpec spec;
  spec.law = law;
  spec.boundary = boundary;
  return spec;
}

}  // namespace beamlab
