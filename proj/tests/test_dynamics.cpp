#include <doctest.h>

#include <cmath>
#include <random>

#include "prepsy/dynamics.hpp"

using namespace prepsy;
using namespace prepsy::dynamics;
using states::DensityMatrix;

namespace {

DensityMatrix plus_state() {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return states::pure_state(v, qubits(1));
}

DensityMatrix random_state(Index dim, const HilbertStructure& s, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ComplexMatrix a(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) a(i, j) = Complex(dist(gen), dist(gen));
  ComplexMatrix r = a * a.adjoint();
  r /= r.trace();
  return DensityMatrix(std::move(r), s);
}

ComplexMatrix random_hermitian(Index dim, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ComplexMatrix a(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) a(i, j) = Complex(dist(gen), dist(gen));
  return 0.5 * (a + a.adjoint()).eval();
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("closed qubit precession has the analytic coherence phase") {
  // Oracle: under H = sigma_z, rho01(t) = rho01(0) exp(-2 i t).
  EvolutionSpec spec;
  spec.hamiltonian = linalg::sigma_z();
  const DensityMatrix rho0 = plus_state();
  for (double t : {0.3, 1.0, 2.7}) {
    const DensityMatrix rho = evolve(rho0, spec, t);
    const Complex expected = 0.5 * std::exp(Complex(0.0, -2.0 * t));
    CHECK(std::abs(rho.matrix(0, 1) - expected) < 1e-12);
    CHECK(rho.matrix(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("integrator matches the eigenbasis propagator on a random closed system") {
  const HilbertStructure s = qubits(3);
  const DensityMatrix rho0 = random_state(8, s, 2024);
  EvolutionSpec spec;
  spec.hamiltonian = random_hermitian(8, 77);
  spec.method = Method::kEigenbasis;
  const DensityMatrix exact = evolve(rho0, spec, 1.5);
  spec.method = Method::kIntegrator;
  spec.dt = 0.01;
  const DensityMatrix stepped = evolve(rho0, spec, 1.5);
  CHECK(linalg::max_abs(exact.matrix - stepped.matrix) < 1e-6);
}

TEST_CASE("damped qubit follows the closed-form decay") {
  // Oracle: one lowering channel at rate g empties the excited population as
  // exp(-2 g t) and damps the coherence as exp(-g t).
  const double g = 0.35;
  ComplexMatrix r0(2, 2);
  r0 << 0.25, 0.25, 0.25, 0.75;  // mixed, coherent, excited-heavy
  const DensityMatrix rho0(r0, qubits(1));
  EvolutionSpec spec;
  spec.hamiltonian = ComplexMatrix::Zero(2, 2);
  spec.channels.push_back({linalg::sigma_minus(), g});
  spec.dt = 0.002;
  for (double t : {0.5, 2.0}) {
    const DensityMatrix rho = evolve(rho0, spec, t);
    CHECK(rho.matrix(1, 1).real() == doctest::Approx(0.75 * std::exp(-2.0 * g * t)).epsilon(1e-7));
    CHECK(std::abs(rho.matrix(0, 1)) == doctest::Approx(0.25 * std::exp(-g * t)).epsilon(1e-7));
  }
}

TEST_CASE("integrator converges at fourth order") {
  // Halving dt should cut the error by ~16x; accept an observed order >= 3.5.
  const HilbertStructure s = qubits(1);
  const DensityMatrix rho0 = plus_state();
  EvolutionSpec spec;
  spec.hamiltonian = linalg::sigma_z();
  spec.channels.push_back({linalg::sigma_minus(), 0.2});
  spec.method = Method::kIntegrator;
  const double t = 1.0;

  spec.dt = 1e-4;
  const ComplexMatrix reference = evolve(rho0, spec, t).matrix;
  spec.dt = 0.05;
  const double err_coarse = linalg::max_abs(evolve(rho0, spec, t).matrix - reference);
  spec.dt = 0.025;
  const double err_fine = linalg::max_abs(evolve(rho0, spec, t).matrix - reference);
  const double order = std::log2(err_coarse / err_fine);
  CHECK(order > 3.5);
}

TEST_CASE("dissipative evolution preserves trace and positivity") {
  const HilbertStructure s = qubits(2);
  const DensityMatrix rho0 = random_state(4, s, 99);
  EvolutionSpec spec;
  spec.hamiltonian = random_hermitian(4, 5);
  spec.channels.push_back({linalg::embed(linalg::sigma_minus(), s, 0), 0.1});
  spec.channels.push_back({linalg::embed(linalg::sigma_minus(), s, 1), 0.05});
  spec.dt = 0.01;
  const DensityMatrix rho = evolve(rho0, spec, 3.0);
  CHECK(std::abs(rho.trace_real() - 1.0) < 1e-10);
  CHECK(linalg::herm_eig(rho.matrix).values(0) > -1e-10);
}

TEST_CASE("generator annihilates the trace") {
  const HilbertStructure s = qubits(2);
  EvolutionSpec spec;
  spec.hamiltonian = random_hermitian(4, 11);
  spec.channels.push_back({linalg::embed(linalg::sigma_minus(), s, 0), 0.3});
  const DensityMatrix rho = random_state(4, s, 12);
  const ComplexMatrix rhs = lindblad_rhs(rho.matrix, spec);
  CHECK(std::abs(rhs.trace()) < 1e-12);
  CHECK(linalg::max_abs(rhs - rhs.adjoint()) < 1e-12);
}

TEST_CASE("evolution specs are validated") {
  EvolutionSpec spec;
  spec.hamiltonian = linalg::sigma_z();
  spec.dt = 1.0;  // dt * max|H| = 1 > 0.1: violates the stability guard
  CHECK_THROWS_AS(spec.validate(), ContractError);
  spec.dt = 0.05;
  CHECK_NOTHROW(spec.validate());

  EvolutionSpec open_eig;
  open_eig.hamiltonian = linalg::sigma_z();
  open_eig.channels.push_back({linalg::sigma_minus(), 0.1});
  open_eig.method = Method::kEigenbasis;
  CHECK_THROWS_AS(open_eig.validate(), UnsupportedConfiguration);

  EvolutionSpec skew;
  skew.hamiltonian = ComplexMatrix::Zero(2, 2);
  skew.hamiltonian(0, 1) = Complex(0.0, 1.0);
  CHECK_THROWS_AS(skew.validate(), ContractError);

  EvolutionSpec bad_rate;
  bad_rate.hamiltonian = linalg::sigma_z();
  bad_rate.channels.push_back({linalg::sigma_minus(), -0.1});
  CHECK_THROWS_AS(bad_rate.validate(), ContractError);
}

TEST_CASE("derived step obeys the stability guard") {
  EvolutionSpec spec;
  spec.hamiltonian = 50.0 * linalg::sigma_z();
  const double dt = spec.resolved_dt(/*fallback_span=*/10.0);
  CHECK(dt * 50.0 <= 0.1 + 1e-12);
  // A small requested dt is honored as-is.
  spec.dt = 1e-4;
  CHECK(spec.resolved_dt(10.0) == doctest::Approx(1e-4));
}

TEST_CASE("stepper repetition equals one long evolve") {
  const HilbertStructure s = qubits(2);
  const DensityMatrix rho0 = random_state(4, s, 31);
  EvolutionSpec spec;
  spec.hamiltonian = random_hermitian(4, 32);
  spec.channels.push_back({linalg::embed(linalg::sigma_minus(), s, 1), 0.2});
  spec.dt = 0.005;

  const double spacing = 0.25;
  Stepper stepper(spec, spacing);
  ComplexMatrix rho = rho0.matrix;
  stepper.step(rho);
  stepper.step(rho);
  const DensityMatrix direct = evolve(rho0, spec, 2.0 * spacing);
  CHECK(linalg::max_abs(rho - direct.matrix) < 1e-10);
}

TEST_CASE("stepper takes the propagator fast path only when closed") {
  EvolutionSpec closed;
  closed.hamiltonian = linalg::sigma_x();
  CHECK(Stepper(closed, 0.1).closed_path());
  EvolutionSpec open = closed;
  open.channels.push_back({linalg::sigma_minus(), 0.1});
  CHECK_FALSE(Stepper(open, 0.1).closed_path());
  EvolutionSpec forced = closed;
  forced.method = Method::kIntegrator;
  CHECK_FALSE(Stepper(forced, 0.1).closed_path());
}

TEST_CASE("pulse conjugates by the embedded rotation") {
  // Oracle: a pi/2 rotation about sigma_y maps |0><0| to |+><+| on the
  // pulsed factor and leaves the other factor untouched.
  const HilbertStructure s = qubits(2);
  ComplexMatrix r0 = ComplexMatrix::Zero(4, 4);
  r0(0, 0) = 0.7;  // |00><00|
  r0(1, 1) = 0.3;  // |01><01|
  const DensityMatrix rho0(r0, s);
  PulseSpec pulse;
  pulse.generator = 0.5 * linalg::sigma_y();
  pulse.angle = kPi / 2.0;
  pulse.factor = 0;
  const DensityMatrix rho = apply_pulse(rho0, pulse);
  // exp(-i pi/4 sigma_y)|0> = (|0> - |1>)/sqrt(2)  (footnote: Jy convention)
  ComplexMatrix sys = linalg::partial_trace(rho.matrix, s, {0});
  CHECK(sys(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sys(0, 1).real() == doctest::Approx(-0.5).epsilon(1e-12));
  ComplexMatrix env = linalg::partial_trace(rho.matrix, s, {1});
  CHECK(env(0, 0).real() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(env(1, 1).real() == doctest::Approx(0.3).epsilon(1e-12));

  // The embedded unitary itself is unitary and acts trivially at angle 0.
  const ComplexMatrix u = pulse_unitary(pulse, s);
  CHECK(linalg::max_abs(u * u.adjoint() - linalg::identity(4)) < 1e-13);
  pulse.angle = 0.0;
  CHECK(linalg::max_abs(pulse_unitary(pulse, s) - linalg::identity(4)) < 1e-14);
}

TEST_CASE("pulse generators must be Hermitian and fit the factor") {
  PulseSpec pulse;
  pulse.generator = linalg::sigma_minus();  // not Hermitian
  const DensityMatrix rho = random_state(2, qubits(1), 8);
  CHECK_THROWS_AS(apply_pulse(rho, pulse), ContractError);
  pulse.generator = linalg::identity(4);  // wrong dimension for a qubit factor
  CHECK_THROWS_AS(apply_pulse(rho, pulse), ContractError);
}

}  // TEST_SUITE
