#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "beamlab/discretize.hpp"
#include "beamlab/spectral.hpp"
#include "beamlab/timeint.hpp"

using namespace beamlab;

namespace {

DiscreteSystem conservative_beam(int n) {
  return assemble(default_spec(Elastic{}, BoundaryKind::Free), n);
}

Eigen::VectorXd random_state(const DiscreteSystem& sys, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(sys.layout.total);
  for (int i = 0; i < x.size(); ++i) x[i] = nd(rng);
  return x;
}

}  // namespace

TEST_CASE("energy is conserved to roundoff over ten thousand steps", "[timeint]") {
  const DiscreteSystem sys = conservative_beam(16);
  const Trajectory traj = integrate(sys, FirstMode{}, 0.01, 100.0, 100);
  REQUIRE(traj.times.size() == 10001);
  const double e0 = traj.energies.front();
  REQUIRE(e0 > 0.0);
  for (double e : traj.energies) CHECK(std::abs(e - e0) <= 1e-10 * e0);
  CHECK(energy_ledger_check(traj) <= 1e-10);
}

TEST_CASE("zero initial datum stays identically zero", "[timeint]") {
  const DiscreteSystem sys = conservative_beam(8);
  const Trajectory traj = integrate(
      sys, FromFile{Eigen::VectorXd::Zero(sys.layout.total)}, 0.05, 5.0, 10);
  for (double e : traj.energies) CHECK(e == 0.0);
  for (double r : traj.balance_residual) CHECK(r == 0.0);
}

TEST_CASE("per-step ledger closes for damped dynamics at two step sizes", "[timeint]") {
  const DiscreteSystem sys =
      assemble(default_spec(KelvinVoigt{}, BoundaryKind::Hybrid), 12);
  for (double dt : {0.01, 0.005}) {
    const Trajectory traj = integrate(sys, FirstMode{}, dt, 10.0, 50);
    CHECK(energy_ledger_check(traj) <= 1e-10);
    // cumulative form: E(T) - E(0) equals the integrated drain
    const double closure = std::abs(traj.energies.back() - traj.energies.front() -
                                    traj.dissipation_integral.back());
    CHECK(closure <= 1e-9 * traj.energies.front());
    CHECK(traj.dissipation_integral.back() < 0.0);
  }
}

TEST_CASE("damped energies never increase", "[timeint]") {
  const DiscreteSystem sys = assemble(default_spec(Elastic{}, BoundaryKind::Hybrid), 8);
  const Trajectory traj = integrate(sys, FirstMode{}, 0.01, 20.0, 100);
  for (std::size_t k = 1; k < traj.energies.size(); ++k)
    CHECK(traj.energies[k] <= traj.energies[k - 1] * (1.0 + 1e-12) + 1e-15);
  CHECK(traj.energies.back() < 0.9 * traj.energies.front());
}

TEST_CASE("one step agrees with the direct pencil solve", "[timeint]") {
  const DiscreteSystem sys =
      assemble(default_spec(ThermoTypeI{}, BoundaryKind::Hybrid), 6);
  const Eigen::VectorXd x0 = random_state(sys, 11);
  const double dt = 0.02;
  const Trajectory traj = integrate(sys, FromFile{x0}, dt, dt, 1);
  REQUIRE(traj.states.size() == 2);

  const Eigen::MatrixXd A = sys.E - 0.5 * dt * sys.S;
  const Eigen::MatrixXd B = sys.E + 0.5 * dt * sys.S;
  const Eigen::VectorXd x1 = A.partialPivLu().solve(B * x0);
  CHECK((traj.states.back() - x1).norm() <= 1e-10 * x1.norm());
}

TEST_CASE("step map never amplifies", "[timeint]") {
  for (ConstitutiveLaw law : {ConstitutiveLaw(Elastic{}), ConstitutiveLaw(KelvinVoigt{}),
                              ConstitutiveLaw(ThermoTypeI{}),
                              ConstitutiveLaw(ThermoTypeII{}),
                              ConstitutiveLaw(NonsimpleThermo{})}) {
    const DiscreteSystem sys = assemble(default_spec(law, BoundaryKind::Hybrid), 6);
    const ScaledGenerator gen = make_scaled_generator(sys);
    const double dt = 0.05;
    const int n = static_cast<int>(gen.G.rows());
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - 0.5 * dt * gen.G;
    const Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n) + 0.5 * dt * gen.G;
    const Eigen::MatrixXd M = A.partialPivLu().solve(B);
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    REQUIRE(es.info() == Eigen::Success);
    double radius = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      radius = std::max(radius, std::abs(es.eigenvalues()[i]));
    INFO(law_name(law));
    CHECK(radius <= 1.0 + 1e-12);
  }
}

TEST_CASE("conservative stepping is time reversible", "[timeint]") {
  const DiscreteSystem sys = conservative_beam(10);
  const ScaledGenerator gen = make_scaled_generator(sys);
  const double dt = 0.02;
  const int n = static_cast<int>(gen.G.rows());
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - 0.5 * dt * gen.G;
  const Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n) + 0.5 * dt * gen.G;
  const Eigen::PartialPivLU<Eigen::MatrixXd> fwd(A), bwd(B);

  Eigen::VectorXd y = gen.L.transpose() * build_initial_vector(sys, FirstMode{});
  const Eigen::VectorXd y0 = y;
  for (int k = 0; k < 200; ++k) y = fwd.solve(B * y);
  for (int k = 0; k < 200; ++k) y = bwd.solve(A * y);
  CHECK((y - y0).norm() <= 1e-10 * y0.norm());
}

TEST_CASE("the flow is linear in the initial datum", "[timeint]") {
  const DiscreteSystem sys =
      assemble(default_spec(NonsimpleThermo{}, BoundaryKind::Hybrid), 6);
  const Eigen::VectorXd xa = random_state(sys, 21);
  const Eigen::VectorXd xb = random_state(sys, 22);
  const double ca = 2.0, cb = -0.5;
  const Trajectory ta = integrate(sys, FromFile{xa}, 0.05, 2.0, 10);
  const Trajectory tb = integrate(sys, FromFile{xb}, 0.05, 2.0, 10);
  const Trajectory tc = integrate(sys, FromFile{ca * xa + cb * xb}, 0.05, 2.0, 10);
  REQUIRE(ta.states.size() == tc.states.size());
  for (std::size_t k = 0; k < tc.states.size(); ++k) {
    const Eigen::VectorXd lin = ca * ta.states[k] + cb * tb.states[k];
    CHECK((tc.states[k] - lin).norm() <= 1e-10 * (lin.norm() + 1.0));
  }
}

TEST_CASE("smooth polynomial datum interpolates the quintic profile", "[timeint]") {
  const DiscreteSystem sys = assemble(default_spec(Elastic{}, BoundaryKind::Hybrid), 8);
  const Eigen::VectorXd x0 = build_initial_vector(sys, SmoothPolynomial{});
  const double ell = sys.spec.ell;
  const double h = ell / 8;
  for (int j = 0; j < 8; ++j) {
    const double x = j * h;
    const double val = (x - ell) * (x - ell) * x * x * x / std::pow(ell, 5);
    CHECK(x0[2 * j] == Catch::Approx(val).margin(1e-15));
  }
  CHECK(x0[sys.layout.u_value_tip()] == 0.0);  // profile vanishes at the tip
  CHECK(x0[sys.layout.u_slope_tip()] == 0.0);
  CHECK(x0.segment(sys.layout.v_offset, sys.layout.n_u).norm() == 0.0);
  CHECK(energy(sys, x0) > 0.0);  // bending energy only
}

TEST_CASE("first mode datum is normalized and purely mechanical", "[timeint]") {
  const DiscreteSystem sys =
      assemble(default_spec(ThermoTypeI{}, BoundaryKind::Hybrid), 8);
  const Eigen::VectorXd x0 = build_initial_vector(sys, FirstMode{});
  CHECK(x0.cwiseAbs().maxCoeff() == Catch::Approx(1.0));
  CHECK(x0.segment(sys.layout.theta_offset, sys.layout.n_theta).norm() == 0.0);
  CHECK(energy(sys, x0) > 0.0);
}

TEST_CASE("recorded states line up with the step series", "[timeint]") {
  const DiscreteSystem sys = conservative_beam(6);
  const Trajectory traj = integrate(sys, FirstMode{}, 0.1, 2.05, 7);
  const int steps = static_cast<int>(std::llround(2.05 / 0.1));
  REQUIRE(traj.times.size() == static_cast<std::size_t>(steps) + 1);
  REQUIRE(traj.states.size() == traj.state_indices.size());
  CHECK(traj.state_indices.front() == 0);
  CHECK(traj.state_indices.back() == traj.times.size() - 1);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const std::size_t idx = traj.state_indices[k];
    CHECK(std::abs(traj.energies[idx] - energy(sys, traj.states[k])) <=
          1e-10 * (traj.energies[idx] + 1.0));
  }
}

TEST_CASE("integration rejects bad arguments", "[timeint]") {
  const DiscreteSystem sys = conservative_beam(4);
  CHECK_THROWS_AS(integrate(sys, FirstMode{}, 0.0, 1.0, 1), PreconditionError);
  CHECK_THROWS_AS(integrate(sys, FirstMode{}, -0.1, 1.0, 1), PreconditionError);
  CHECK_THROWS_AS(integrate(sys, FirstMode{}, 0.5, 0.1, 1), PreconditionError);
  CHECK_THROWS_AS(integrate(sys, FirstMode{}, 0.1, 1.0, 0), PreconditionError);
  CHECK_THROWS_AS(
      integrate(sys, FromFile{Eigen::VectorXd::Zero(3)}, 0.1, 1.0, 1),
      PreconditionError);
}
