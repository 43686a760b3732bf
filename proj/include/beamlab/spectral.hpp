#pragma once

// Generalized spectrum of (E, S), energy-norm resolvent along the imaginary
// axis, and the validity ceiling that separates mesh-resolved modes from
// grid-scale artifacts.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include "beamlab/discretize.hpp"
#include "beamlab/model.hpp"

namespace beamlab {

// Eigenvalues with |Im| above this frequency live at wavelengths the mesh
// cannot represent; they enter no branch fit, sweep window, or stability
// abscissa. Defined as half the dispersion frequency of the shortest
// mesh-representable bending wave (wavelength 2h).
inline double validity_ceiling(const ModelSpec& spec, int n_elements) {
  const double beta_max = M_PI * n_elements / spec.ell;
  return 0.5 * beta_max * beta_max * std::sqrt(law_alpha(spec.law) / spec.rho);
}

struct BranchFit {
  double C = 0.0;       // -Re lambda ~ C * |Im lambda|^(-p)
  double p = 0.0;
  double r_squared = 0.0;
  int n_modes = 0;
  bool valid = false;
};

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;  // sorted by |Im|
  double abscissa = 0.0;
  std::vector<std::pair<double, double>> branch;  // (|Im|, -Re), mesh-resolved upper branch
  BranchFit branch_fit;
  int n_elements = 0;
};

// Congruence reduction of the pencil: with E = L L', the generator in energy
// coordinates is G = L^-1 S L^-T. The skew and symmetric parts of S are split
// before conjugation and the structure of each image is enforced, so a
// conservative system yields an exactly skew G.
struct ScaledGenerator {
  Eigen::MatrixXd L;       // lower Cholesky factor of E
  Eigen::MatrixXd G;       // G_skew + G_sym
  Eigen::MatrixXd G_skew;  // conservative part, exactly skew
  Eigen::MatrixXd G_sym;   // damping part, symmetric negative semidefinite
};

inline ScaledGenerator make_scaled_generator(const DiscreteSystem& sys) {
  Eigen::LLT<Eigen::MatrixXd> llt(sys.E);
  if (llt.info() != Eigen::Success)
    throw NumericalError("spectral: E is not positive definite (Cholesky failed)");
  ScaledGenerator g;
  g.L = llt.matrixL();
  auto conjugate = [&](const Eigen::MatrixXd& M) {
    Eigen::MatrixXd X = g.L.triangularView<Eigen::Lower>().solve(M);
    Eigen::MatrixXd Y =
        g.L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
    return Y;
  };
  const Eigen::MatrixXd S_skew = 0.5 * (sys.S - sys.S.transpose());
  const Eigen::MatrixXd S_sym = 0.5 * (sys.S + sys.S.transpose());
  g.G_skew = conjugate(S_skew);
  g.G_skew = 0.5 * (g.G_skew - g.G_skew.transpose().eval());
  g.G_sym = conjugate(S_sym);
  g.G_sym = 0.5 * (g.G_sym + g.G_sym.transpose().eval());
  g.G = g.G_skew + g.G_sym;
  return g;
}

inline BranchFit fit_branch(const std::vector<std::pair<double, double>>& branch) {
  BranchFit fit;
  std::vector<double> lx, ly;
  for (const auto& [im, negre] : branch)
    if (im > 0.0 && negre > 0.0) {
      lx.push_back(std::log(im));
      ly.push_back(std::log(negre));
    }
  fit.n_modes = static_cast<int>(lx.size());
  if (fit.n_modes < 3) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
    syy += ly[i] * ly[i];
  }
  const double m = static_cast<double>(lx.size());
  const double denom = m * sxx - sx * sx;
  if (denom <= 0.0) return fit;
  const double slope = (m * sxy - sx * sy) / denom;
  const double icept = (sy - slope * sx) / m;
  fit.p = -slope;
  fit.C = std::exp(icept);
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / m;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double pred = icept + slope * lx[i];
    ss_res += (ly[i] - pred) * (ly[i] - pred);
    ss_tot += (ly[i] - ybar) * (ly[i] - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.valid = true;
  return fit;
}

inline SpectrumReport spectrum(const DiscreteSystem& sys) {
  const ScaledGenerator gen = make_scaled_generator(sys);
  Eigen::EigenSolver<Eigen::MatrixXd> es(gen.G, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral: eigensolver failed to converge");
  SpectrumReport rep;
  rep.n_elements = sys.layout.n_elements;
  rep.eigenvalues.assign(es.eigenvalues().data(),
                         es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              const double ia = std::abs(a.imag()), ib = std::abs(b.imag());
              if (ia != ib) return ia < ib;
              if (a.imag() != b.imag()) return a.imag() > b.imag();
              return a.real() < b.real();
            });
  rep.abscissa = -std::numeric_limits<double>::infinity();
  for (const auto& ev : rep.eigenvalues) rep.abscissa = std::max(rep.abscissa, ev.real());

  const double ceiling = validity_ceiling(sys.spec, sys.layout.n_elements);
  for (const auto& ev : rep.eigenvalues)
    if (ev.imag() > 1e-6 && ev.imag() <= ceiling)
      rep.branch.emplace_back(ev.imag(), -ev.real());
  rep.branch_fit = fit_branch(rep.branch);
  return rep;
}

// Spectral abscissa restricted to the mesh-resolved window |Im| <= ceiling.
// Grid-scale modes of the thermal laws carry spurious near-zero damping that
// would otherwise dominate the maximum.
inline double windowed_abscissa(const std::vector<std::complex<double>>& eigenvalues,
                                double ceiling) {
  double a = -std::numeric_limits<double>::infinity();
  for (const auto& ev : eigenvalues)
    if (std::abs(ev.imag()) <= ceiling) a = std::max(a, ev.real());
  return a;
}

// Fundamental mechanical frequency of the undamped pencil, taken from the
// u/v blocks of the energy matrix. Solving the inverted problem M q = mu A q
// makes the wanted eigenvalue the largest one, which keeps it accurate to
// rounding even when the stiffness spectrum spans many orders of magnitude.
inline double fundamental_frequency(const DiscreteSystem& sys) {
  const int nu = sys.layout.n_u;
  const Eigen::MatrixXd A =
      sys.E.block(sys.layout.u_offset, sys.layout.u_offset, nu, nu);
  const Eigen::MatrixXd M =
      sys.E.block(sys.layout.v_offset, sys.layout.v_offset, nu, nu);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(M, A);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral: fundamental frequency solve failed");
  const double mu = es.eigenvalues().maxCoeff();
  if (!(mu > 0.0))
    throw NumericalError("spectral: mass pencil has no oscillatory mode");
  return 1.0 / std::sqrt(mu);
}

struct ResolventSample {
  double lambda = 0.0;
  double norm = 0.0;
  double sigma_min = 0.0;
  bool near_singular = false;
};

namespace detail {

// Smallest singular value of A = i*lambda*I - G by inverse power iteration
// on A^H A through one LU factorization of A.
inline ResolventSample resolvent_sample(const Eigen::MatrixXd& G, double lambda) {
  using CMat = Eigen::MatrixXcd;
  using CVec = Eigen::VectorXcd;
  const int n = static_cast<int>(G.rows());
  CMat A = -G.cast<std::complex<double>>();
  for (int i = 0; i < n; ++i) A(i, i) += std::complex<double>(0.0, lambda);
  const double scale = A.norm();  // Frobenius
  Eigen::PartialPivLU<CMat> lu(A);

  std::mt19937_64 rng(0x5eedbeefULL);
  std::normal_distribution<double> nd;
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = std::complex<double>(nd(rng), nd(rng));
  v.normalize();

  double sigma = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 64; ++it) {
    CVec y = lu.adjoint().solve(v);
    CVec z = lu.solve(y);
    const double mu = z.norm();  // dominant eigenvalue of (A^H A)^-1
    if (!(mu > 0.0) || !std::isfinite(mu)) {
      sigma = 0.0;
      break;
    }
    const double next = 1.0 / std::sqrt(mu);
    const bool done = std::abs(next - sigma) <= 1e-12 * next;
    sigma = next;
    v = z / mu;
    if (done) break;
  }
  ResolventSample s;
  s.lambda = lambda;
  s.sigma_min = sigma;
  // the threshold is relative to the pencil scale; an absolute cut would
  // never trigger against ||G|| ~ 1e5
  s.near_singular = sigma < 1e-13 * std::max(1.0, scale);
  s.norm = s.near_singular ? std::numeric_limits<double>::infinity() : 1.0 / sigma;
  return s;
}

}  // namespace detail

inline ResolventSample resolvent_norm(const DiscreteSystem& sys, double lambda) {
  const ScaledGenerator gen = make_scaled_generator(sys);
  return detail::resolvent_sample(gen.G, lambda);
}

struct ResolventSweep {
  std::vector<ResolventSample> samples;  // lambda strictly increasing, unmasked
  std::vector<std::pair<double, double>> envelope;  // local maxima of (lambda, norm)
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  std::pair<double, double> fit_window{0.0, 0.0};
  int n_masked = 0;
  bool fit_refused = false;
  std::string refusal_reason;
};

inline ResolventSweep sweep_resolvent(const DiscreteSystem& sys, double lambda_min,
                                      double lambda_max, int points_per_decade) {
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min))
    throw PreconditionError("sweep: need 0 < lambda_min < lambda_max");
  const double decades = std::log10(lambda_max / lambda_min);
  if (decades < 1.0)
    throw PreconditionError("sweep: window narrower than one decade rejected");
  if (points_per_decade < 2)
    throw PreconditionError("sweep: need at least 2 points per decade");
  const double ceiling = validity_ceiling(sys.spec, sys.layout.n_elements);
  if (lambda_max > ceiling)
    throw PreconditionError("sweep: window top exceeds the spectral validity ceiling");

  const ScaledGenerator gen = make_scaled_generator(sys);

  // log grid plus eigenfrequency anchors so every resonance peak is sampled
  std::vector<double> grid;
  const int n_pts = static_cast<int>(std::ceil(decades * points_per_decade)) + 1;
  for (int i = 0; i < n_pts; ++i)
    grid.push_back(lambda_min * std::pow(lambda_max / lambda_min,
                                         static_cast<double>(i) / (n_pts - 1)));
  {
    Eigen::EigenSolver<Eigen::MatrixXd> es(gen.G, false);
    if (es.info() == Eigen::Success)
      for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double im = es.eigenvalues()[i].imag();
        if (im > lambda_min && im < lambda_max) grid.push_back(im);
      }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
             grid.end());

  ResolventSweep sweep;
  sweep.fit_window = {lambda_min, lambda_max};
  for (double lam : grid) {
    ResolventSample s = detail::resolvent_sample(gen.G, lam);
    if (s.near_singular) {
      ++sweep.n_masked;
      continue;
    }
    sweep.samples.push_back(s);
  }

  // envelope: local maxima of the retained samples, one-sided at the ends
  const auto& sm = sweep.samples;
  for (std::size_t i = 0; i < sm.size(); ++i) {
    const bool up = i == 0 || sm[i].norm >= sm[i - 1].norm;
    const bool down = i + 1 == sm.size() || sm[i].norm >= sm[i + 1].norm;
    if (up && down) sweep.envelope.emplace_back(sm[i].lambda, sm[i].norm);
  }

  if (is_conservative(sys.spec)) {
    sweep.fit_refused = true;
    sweep.refusal_reason = "conservative system: samples dominated by singularities";
    return sweep;
  }
  if (sweep.n_masked > static_cast<int>(grid.size()) / 2) {
    sweep.fit_refused = true;
    sweep.refusal_reason = "most samples near-singular";
    return sweep;
  }
  if (sweep.envelope.size() < 2) {
    sweep.fit_refused = true;
    sweep.refusal_reason = "fewer than two envelope points";
    return sweep;
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [lam, norm] : sweep.envelope) {
    const double x = std::log10(lam), y = std::log10(norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(sweep.envelope.size());
  sweep.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return sweep;
}

}  // namespace beamlab
