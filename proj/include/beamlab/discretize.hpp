#pragma once

// Assembles the semidiscrete first-order system E*(dx/dt) = S*x from a
// ModelSpec. Displacement uses cubic Hermite elements (value + slope dofs per
// node), temperature fields use piecewise linear elements with Dirichlet ends.
// State ordering: [u | v | theta | theta_rate], clamped node dropped.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <vector>

#include "beamlab/model.hpp"

namespace beamlab {

struct DofLayout {
  int n_elements = 0;
  int n_u = 0;         // displacement dofs, 2 per free node
  int n_theta = 0;     // interior temperature dofs (Dirichlet both ends)
  int n_theta_rate = 0;  // temperature-rate dofs, type II only
  int u_offset = 0;
  int v_offset = 0;
  int theta_offset = 0;
  int theta_rate_offset = 0;
  int total = 0;

  // tip traces: u(0), u_x(0) and their velocity mirrors
  int u_value_tip() const { return u_offset; }
  int u_slope_tip() const { return u_offset + 1; }
  int v_value_tip() const { return v_offset; }
  int v_slope_tip() const { return v_offset + 1; }
  // temperature dof of interior node j, j in [1, n_elements-1]
  int theta_index(int j) const { return theta_offset + j - 1; }
};

// Matrices needed to evaluate the dissipation rate independently of S.
struct DampingForms {
  Eigen::MatrixXd bend;   // plain bending form on v, used by Kelvin-Voigt
  Eigen::MatrixXd theta_stiff;  // plain gradient form on theta, types I/nonsimple
  double alpha0 = 0.0;
  double kappa = 0.0;
};

struct DiscreteSystem {
  Eigen::MatrixXd E;  // symmetric positive definite
  Eigen::MatrixXd S;
  DofLayout layout;
  ModelSpec spec;
  DampingForms damping;

  // The energy quadratic form coincides with the mass-side pencil matrix:
  // energy(x) = x' E x / 2 for every law handled here.
  const Eigen::MatrixXd& energy_form() const { return E; }
};

namespace detail {

// 4 point Gauss-Legendre on [0,1]; exact through polynomial degree 7,
// which covers every element integrand used below.
struct GaussRule {
  std::array<double, 4> xi;
  std::array<double, 4> w;
};

inline const GaussRule& gauss4() {
  static const GaussRule rule = [] {
    GaussRule r;
    const double a = 0.8611363115940526;
    const double b = 0.3399810435848563;
    const double wa = 0.3478548451374538;
    const double wb = 0.6521451548625461;
    r.xi = {0.5 - 0.5 * a, 0.5 - 0.5 * b, 0.5 + 0.5 * b, 0.5 + 0.5 * a};
    r.w = {0.5 * wa, 0.5 * wb, 0.5 * wb, 0.5 * wa};
    return r;
  }();
  return rule;
}

// Hermite shape values and derivatives at local coordinate xi on an element
// of width h. Dof order: value(left), slope(left), value(right), slope(right).
inline std::array<double, 4> hermite(double xi, double h) {
  return {1.0 - 3.0 * xi * xi + 2.0 * xi * xi * xi,
          h * (xi - 2.0 * xi * xi + xi * xi * xi),
          3.0 * xi * xi - 2.0 * xi * xi * xi,
          h * (-xi * xi + xi * xi * xi)};
}
inline std::array<double, 4> hermite_dx(double xi, double h) {
  return {(-6.0 * xi + 6.0 * xi * xi) / h,
          1.0 - 4.0 * xi + 3.0 * xi * xi,
          (6.0 * xi - 6.0 * xi * xi) / h,
          -2.0 * xi + 3.0 * xi * xi};
}
inline std::array<double, 4> hermite_dxx(double xi, double h) {
  return {(-6.0 + 12.0 * xi) / (h * h),
          (-4.0 + 6.0 * xi) / h,
          (6.0 - 12.0 * xi) / (h * h),
          (-2.0 + 6.0 * xi) / h};
}
inline std::array<double, 2> linear(double xi) { return {1.0 - xi, xi}; }
inline std::array<double, 2> linear_dx(double h) { return {-1.0 / h, 1.0 / h}; }

struct ElementForms {
  Eigen::Matrix4d mass;       // N N
  Eigen::Matrix4d bend;       // N'' N''
  Eigen::Matrix4d shear;      // N' N'
  Eigen::Matrix<double, 4, 2> couple_dxx;  // N'' L
  Eigen::Matrix<double, 4, 2> couple_dx;   // N' L
  Eigen::Matrix2d p1_mass;    // L L
  Eigen::Matrix2d p1_stiff;   // L' L'
};

inline ElementForms element_forms(double h) {
  ElementForms f;
  f.mass.setZero();
  f.bend.setZero();
  f.shear.setZero();
  f.couple_dxx.setZero();
  f.couple_dx.setZero();
  f.p1_mass.setZero();
  f.p1_stiff.setZero();
  const GaussRule& g = gauss4();
  for (int q = 0; q < 4; ++q) {
    const double xi = g.xi[q];
    const double w = g.w[q] * h;  // jacobian of [0,1] -> [0,h]
    const auto N = hermite(xi, h);
    const auto Nx = hermite_dx(xi, h);
    const auto Nxx = hermite_dxx(xi, h);
    const auto L = linear(xi);
    const auto Lx = linear_dx(h);
    // accumulate the upper triangles only; product rounding is not symmetric
    for (int a = 0; a < 4; ++a) {
      for (int b = a; b < 4; ++b) {
        f.mass(a, b) += w * N[a] * N[b];
        f.bend(a, b) += w * Nxx[a] * Nxx[b];
        f.shear(a, b) += w * Nx[a] * Nx[b];
      }
      for (int i = 0; i < 2; ++i) {
        f.couple_dxx(a, i) += w * Nxx[a] * L[i];
        f.couple_dx(a, i) += w * Nx[a] * L[i];
      }
    }
    for (int i = 0; i < 2; ++i)
      for (int k = i; k < 2; ++k) {
        f.p1_mass(i, k) += w * L[i] * L[k];
        f.p1_stiff(i, k) += w * Lx[i] * Lx[k];
      }
  }
  // mirror so the symmetric forms are symmetric to the last bit
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < a; ++b) {
      f.mass(a, b) = f.mass(b, a);
      f.bend(a, b) = f.bend(b, a);
      f.shear(a, b) = f.shear(b, a);
    }
  f.p1_mass(1, 0) = f.p1_mass(0, 1);
  f.p1_stiff(1, 0) = f.p1_stiff(0, 1);
  return f;
}

// Scatter a Hermite element block; dofs at or beyond n_u belong to the
// clamped node and are dropped.
inline void add_u_block(Eigen::MatrixXd& M, const Eigen::Matrix4d& el, int e, int n_u,
                        double scale) {
  const int base = 2 * e;
  for (int a = 0; a < 4; ++a) {
    if (base + a >= n_u) continue;
    for (int b = 0; b < 4; ++b) {
      if (base + b >= n_u) continue;
      M(base + a, base + b) += scale * el(a, b);
    }
  }
}

// Scatter a Hermite-by-linear coupling block; linear dofs at the Dirichlet
// ends (nodes 0 and n) are dropped.
inline void add_coupling_block(Eigen::MatrixXd& M, const Eigen::Matrix<double, 4, 2>& el,
                               int e, int n_u, int n_elements, double scale) {
  const int base = 2 * e;
  for (int a = 0; a < 4; ++a) {
    if (base + a >= n_u) continue;
    for (int i = 0; i < 2; ++i) {
      const int node = e + i;
      if (node < 1 || node > n_elements - 1) continue;
      M(base + a, node - 1) += scale * el(a, i);
    }
  }
}

inline void add_theta_block(Eigen::MatrixXd& M, const Eigen::Matrix2d& el, int e,
                            int n_elements, double scale) {
  for (int i = 0; i < 2; ++i) {
    const int ni = e + i;
    if (ni < 1 || ni > n_elements - 1) continue;
    for (int k = 0; k < 2; ++k) {
      const int nk = e + k;
      if (nk < 1 || nk > n_elements - 1) continue;
      M(ni - 1, nk - 1) += scale * el(i, k);
    }
  }
}

}  // namespace detail

inline DofLayout make_layout(const ModelSpec& spec, int n_elements) {
  DofLayout lay;
  lay.n_elements = n_elements;
  lay.n_u = 2 * n_elements;  // node n clamped: value and slope eliminated
  const bool thermal = std::holds_alternative<ThermoTypeI>(spec.law) ||
                       std::holds_alternative<ThermoTypeII>(spec.law) ||
                       std::holds_alternative<NonsimpleThermo>(spec.law);
  lay.n_theta = thermal ? n_elements - 1 : 0;
  lay.n_theta_rate = std::holds_alternative<ThermoTypeII>(spec.law) ? n_elements - 1 : 0;
  lay.u_offset = 0;
  lay.v_offset = lay.n_u;
  lay.theta_offset = 2 * lay.n_u;
  lay.theta_rate_offset = lay.theta_offset + lay.n_theta;
  lay.total = 2 * lay.n_u + lay.n_theta + lay.n_theta_rate;
  return lay;
}

inline DiscreteSystem assemble(const ModelSpec& spec, int n_elements) {
  validate(spec);
  if (n_elements < 2) throw PreconditionError("assemble: n_elements must be >= 2");

  DiscreteSystem sys;
  sys.spec = spec;
  sys.layout = make_layout(spec, n_elements);
  const DofLayout& lay = sys.layout;
  const int n = n_elements;
  const int nu = lay.n_u;
  const double h = spec.ell / n;
  const detail::ElementForms ef = detail::element_forms(h);

  Eigen::MatrixXd Mu = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::MatrixXd bend = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::MatrixXd shear = Eigen::MatrixXd::Zero(nu, nu);
  for (int e = 0; e < n; ++e) {
    detail::add_u_block(Mu, ef.mass, e, nu, 1.0);
    detail::add_u_block(bend, ef.bend, e, nu, 1.0);
    detail::add_u_block(shear, ef.shear, e, nu, 1.0);
  }

  const double alpha = law_alpha(spec.law);
  Eigen::MatrixXd Au = alpha * bend;
  if (const auto* ns = std::get_if<NonsimpleThermo>(&spec.law)) Au += ns->mu * shear;

  sys.E = Eigen::MatrixXd::Zero(lay.total, lay.total);
  sys.S = Eigen::MatrixXd::Zero(lay.total, lay.total);
  auto Eb = [&](int r, int c, int nr, int nc) { return sys.E.block(r, c, nr, nc); };
  auto Sb = [&](int r, int c, int nr, int nc) { return sys.S.block(r, c, nr, nc); };

  // u row: A_u u_t = A_u v keeps E symmetric and the energy form explicit
  Eb(lay.u_offset, lay.u_offset, nu, nu) = Au;
  Sb(lay.u_offset, lay.v_offset, nu, nu) = Au;

  // v row: momentum balance; tip body contributes B to mass and K to damping
  Eigen::MatrixXd Mv = spec.rho * Mu;
  if (spec.boundary == BoundaryKind::Hybrid) {
    const BoundaryMatrices bm = build_tip_matrices(spec.tip);
    Mv.block<2, 2>(0, 0) += bm.B;
    sys.S.block<2, 2>(lay.v_offset, lay.v_offset) -= bm.K;
  }
  Eb(lay.v_offset, lay.v_offset, nu, nu) = Mv;
  Sb(lay.v_offset, lay.u_offset, nu, nu) = -Au;

  if (const auto* kv = std::get_if<KelvinVoigt>(&spec.law)) {
    Sb(lay.v_offset, lay.v_offset, nu, nu) -= kv->alpha0 * bend;
    sys.damping.bend = bend;
    sys.damping.alpha0 = kv->alpha0;
  }

  if (lay.n_theta > 0) {
    const int nth = lay.n_theta;
    Eigen::MatrixXd Mth = Eigen::MatrixXd::Zero(nth, nth);
    Eigen::MatrixXd Ath = Eigen::MatrixXd::Zero(nth, nth);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nu, nth);
    const bool nonsimple = std::holds_alternative<NonsimpleThermo>(spec.law);
    for (int e = 0; e < n; ++e) {
      detail::add_theta_block(Mth, ef.p1_mass, e, n, 1.0);
      detail::add_theta_block(Ath, ef.p1_stiff, e, n, 1.0);
      detail::add_coupling_block(C, nonsimple ? ef.couple_dx : ef.couple_dxx, e, nu, n,
                                 1.0);
    }
    // the printed-sign variant flips the thermal feedback row, breaking the
    // skew pairing that closes the power balance
    const double fb = spec.coupling_sign == CouplingSign::EnergyClosing ? 1.0 : -1.0;

    if (const auto* t1 = std::get_if<ThermoTypeI>(&spec.law)) {
      Eb(lay.theta_offset, lay.theta_offset, nth, nth) = t1->c_heat * Mth;
      Sb(lay.v_offset, lay.theta_offset, nu, nth) = -t1->m_couple * C;
      Sb(lay.theta_offset, lay.v_offset, nth, nu) = fb * t1->m_couple * C.transpose();
      Sb(lay.theta_offset, lay.theta_offset, nth, nth) = -t1->kappa * Ath;
      sys.damping.theta_stiff = Ath;
      sys.damping.kappa = t1->kappa;
    } else if (const auto* ns = std::get_if<NonsimpleThermo>(&spec.law)) {
      Eb(lay.theta_offset, lay.theta_offset, nth, nth) = ns->c_heat * Mth;
      Sb(lay.v_offset, lay.theta_offset, nu, nth) = -ns->m_couple * C;
      Sb(lay.theta_offset, lay.v_offset, nth, nu) = fb * ns->m_couple * C.transpose();
      Sb(lay.theta_offset, lay.theta_offset, nth, nth) = -ns->kappa * Ath;
      sys.damping.theta_stiff = Ath;
      sys.damping.kappa = ns->kappa;
    } else if (const auto* t2 = std::get_if<ThermoTypeII>(&spec.law)) {
      // theta stores the thermal displacement, theta_rate its time derivative;
      // the moment couples to the rate, which is what makes the loop lossless
      const int nTh = lay.n_theta_rate;
      Eb(lay.theta_offset, lay.theta_offset, nth, nth) = t2->k_star * Ath;
      Eb(lay.theta_rate_offset, lay.theta_rate_offset, nTh, nTh) = t2->c_heat * Mth;
      Sb(lay.theta_offset, lay.theta_rate_offset, nth, nTh) = t2->k_star * Ath;
      Sb(lay.theta_rate_offset, lay.theta_offset, nTh, nth) =
          -t2->k_star * Ath.transpose();
      if (spec.coupling_sign == CouplingSign::EnergyClosing) {
        Sb(lay.v_offset, lay.theta_rate_offset, nu, nTh) = -t2->m_couple * C;
      } else {
        Sb(lay.v_offset, lay.theta_offset, nu, nth) = -t2->m_couple * C;
      }
      Sb(lay.theta_rate_offset, lay.v_offset, nTh, nu) = t2->m_couple * C.transpose();
    }
  }
  return sys;
}

inline double energy(const DiscreteSystem& sys, const Eigen::VectorXd& x) {
  if (x.size() != sys.layout.total)
    throw PreconditionError("energy: state dimension mismatch");
  return 0.5 * x.dot(sys.energy_form() * x);
}

// Instantaneous power drain: tip damping quadratic plus the law's bulk term.
// Evaluated from boundary traces and the stored small forms, independently of
// how S was assembled, so it can cross-check the power balance.
inline double dissipation_rate(const DiscreteSystem& sys, const Eigen::VectorXd& x) {
  if (x.size() != sys.layout.total)
    throw PreconditionError("dissipation_rate: state dimension mismatch");
  double rate = 0.0;
  if (sys.spec.boundary == BoundaryKind::Hybrid) {
    const TipBody& t = sys.spec.tip;
    const double w = x[sys.layout.v_value_tip()];
    const double z = x[sys.layout.v_slope_tip()];
    rate -= t.gamma * w * w + t.d * t.gamma_star * z * z + t.d * t.gamma * w * z;
  }
  if (sys.damping.alpha0 > 0.0) {
    const auto v = x.segment(sys.layout.v_offset, sys.layout.n_u);
    rate -= sys.damping.alpha0 * v.dot(sys.damping.bend * v);
  }
  if (sys.damping.kappa > 0.0) {
    const auto th = x.segment(sys.layout.theta_offset, sys.layout.n_theta);
    rate -= sys.damping.kappa * th.dot(sys.damping.theta_stiff * th);
  }
  return rate;
}

inline std::vector<DiscreteSystem> refine(const ModelSpec& spec,
                                          const std::vector<int>& levels) {
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1])
      throw PreconditionError("refine: levels must be strictly increasing");
  std::vector<DiscreteSystem> out;
  out.reserve(levels.size());
  for (int n : levels) out.push_back(assemble(spec, n));
  return out;
}

}  // namespace beamlab
