#include <doctest.h>

#include <cmath>
#include <random>

#include "prepsy/protocol.hpp"

using namespace prepsy;
using namespace prepsy::protocol;
using states::DensityMatrix;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

ComplexVector axis_plus() {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return v;
}

ComplexVector axis_minus() {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  return v;
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

// Two-qubit protocol over the anisotropic coupling model.
PrepsyConfig toy_config(Index t1_count = 8, Index t2_count = 8) {
  PrepsyConfig config;
  config.projections = {axis_plus(), axis_minus()};
  config.projection_labels = {"+x", "-x"};
  config.standard_state = axis_plus();
  config.pulse.generator = 0.5 * linalg::sigma_z();
  config.pulse.angle = kPi / 2.0;
  config.observable = axis_plus();
  config.t1 = {t1_count, 0.05};
  config.t2 = {t2_count, 0.05};
  models::ToyModelParams p;
  p.lambda[0][0] = kTwoPi * 4.0;
  p.lambda[1][1] = kTwoPi * 3.0;
  p.lambda[2][2] = kTwoPi * 3.5;
  config.evolution.hamiltonian = models::toy_hamiltonian(p);
  return config;
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("conditioning keeps the exact branch probability and environment state") {
  // Oracle: p = <m|rho_s|m> and sigma_m = tau + <m|chi|m>/p, computed here
  // from the decomposition directly.
  for (unsigned seed : {7u, 8u}) {
    const HilbertStructure s = qubits(2);
    const DensityMatrix r = random_state(4, s, seed);
    const states::BipartiteDecomposition parts = states::decompose(r);
    const ComplexVector m = axis_plus();

    const PreparedState prep = conditional_prepare(r, m, axis_plus());
    const Complex p_expected = (m.adjoint() * parts.rho.matrix * m)(0, 0);
    CHECK(prep.probability == doctest::Approx(p_expected.real()).epsilon(1e-12));

    const ComplexMatrix sigma = linalg::partial_trace(prep.state.matrix, s, {1});
    const ComplexMatrix shift = retained_correlation(parts.chi, m, s);
    const ComplexMatrix expected = parts.tau.matrix + shift / prep.probability;
    CHECK(linalg::max_abs(sigma - expected) < 1e-12);

    // The system factor is reset to the standard state exactly.
    const ComplexMatrix sys = linalg::partial_trace(prep.state.matrix, s, {0});
    const ComplexMatrix reset = axis_plus() * axis_plus().adjoint();
    CHECK(linalg::max_abs(sys - reset) < 1e-12);
  }
}

TEST_CASE("retained correlation equals the probability-weighted environment shift") {
  // Identity chi . <m|chi|m> = p (sigma_m - tau), checked on uneven factor
  // dimensions as well.
  for (const HilbertStructure& s : {qubits(2), HilbertStructure({2, 3})}) {
    const DensityMatrix r = random_state(s.total_dim(), s, 21u + s.total_dim());
    const states::BipartiteDecomposition parts = states::decompose(r);
    const ComplexVector m = axis_plus();
    const PreparedState prep = conditional_prepare(r, m, axis_plus());
    const ComplexMatrix sigma =
        linalg::partial_trace(prep.state.matrix, s, {1});
    const ComplexMatrix lhs = retained_correlation(parts.chi, m, s);
    const ComplexMatrix rhs = prep.probability * (sigma - parts.tau.matrix);
    CHECK(linalg::max_abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("impossible branches are rejected") {
  // |0><0| (x) I/2 has zero weight on |1>.
  ComplexMatrix r = ComplexMatrix::Zero(4, 4);
  r(0, 0) = 0.5;
  r(1, 1) = 0.5;
  const DensityMatrix rho(r, qubits(2));
  ComplexVector one(2);
  one << 0.0, 1.0;
  CHECK_THROWS_AS(conditional_prepare(rho, one, axis_plus()), BranchImpossible);
}

TEST_CASE("uncorrelated states give projection-independent records") {
  const PrepsyConfig config = toy_config();
  const DensityMatrix r = states::build_maximally_mixed_marginal({0.0, 0.0, 0.0});
  const std::vector<Signal2D> signals = run_prepsy(r, config);
  REQUIRE(signals.size() == 2);
  CHECK(linalg::max_abs(signals[0].values - signals[1].values) == 0.0);
  const std::vector<Signal2D> diffs = difference_signals(signals);
  REQUIRE(diffs.size() == 1);
  CHECK(diffs[0].label == "+x--x");
  CHECK(linalg::max_abs(diffs[0].values) == 0.0);
}

TEST_CASE("records are independent of the worker count") {
  PrepsyConfig config = toy_config();
  const DensityMatrix r = states::build_maximally_mixed_marginal({-0.8, 0.0, 0.0});
  config.workers = 1;
  const std::vector<Signal2D> serial = run_prepsy(r, config);
  config.workers = 3;
  const std::vector<Signal2D> pooled = run_prepsy(r, config);
  REQUIRE(serial.size() == pooled.size());
  for (size_t k = 0; k < serial.size(); ++k)
    CHECK(linalg::max_abs(serial[k].values - pooled[k].values) == 0.0);  // bit-identical
}

TEST_CASE("difference signals are exactly linear in the correlation remainder") {
  const PrepsyConfig config = toy_config();
  auto diff_for = [&](double cx) {
    const DensityMatrix r = states::build_maximally_mixed_marginal({cx, 0.0, 0.0});
    return difference_signals(run_prepsy(r, config))[0].values;
  };
  const RealMatrix d_full = diff_for(-0.8);
  const RealMatrix d_half = diff_for(-0.4);
  const RealMatrix d_mid = diff_for(-0.6);
  // Homogeneity and the midpoint affinity test of linearity.
  CHECK(linalg::max_abs(d_half - 0.5 * d_full) < 1e-8);
  CHECK(linalg::max_abs(d_mid - 0.5 * (d_full + d_half)) < 1e-8);
}

TEST_CASE("diagnostics stay within the integrity budget") {
  PrepsyConfig config = toy_config();
  config.evolution.channels.push_back(
      {linalg::embed(linalg::sigma_minus(), qubits(2), 1), 0.05});
  config.evolution.dt = 0.01;
  const DensityMatrix r = states::build_maximally_mixed_marginal({-0.5, 0.0, 0.0});
  RunDiagnostics diag;
  const std::vector<Signal2D> signals = run_prepsy(r, config, &diag);
  REQUIRE(signals.size() == 2);
  CHECK(diag.max_trace_drift <= 1e-8);
  CHECK(diag.min_eigenvalue >= -1e-8);
  CHECK(diag.max_imag_signal <= 1e-10);
}

TEST_CASE("signal grids carry the configured spacings and labels") {
  PrepsyConfig config = toy_config(8, 12);
  config.projection_labels = {"+x", "-x"};
  const DensityMatrix r = states::build_maximally_mixed_marginal({-0.8, 0.0, 0.0});
  const std::vector<Signal2D> signals = run_prepsy(r, config);
  CHECK(signals[0].values.rows() == 8);
  CHECK(signals[0].values.cols() == 12);
  CHECK(signals[0].t1_spacing == doctest::Approx(0.05));
  CHECK(signals[0].label == "+x");
  CHECK(signals[1].label == "-x");
}

TEST_CASE("difference of mismatched grids is rejected") {
  Signal2D a, b;
  a.values = RealMatrix::Zero(4, 4);
  a.t1_spacing = a.t2_spacing = 0.1;
  b = a;
  b.values = RealMatrix::Zero(4, 5);
  CHECK_THROWS_AS(difference_signals({a, b}), ContractError);
  b = a;
  b.t2_spacing = 0.2;
  CHECK_THROWS_AS(difference_signals({a, b}), ContractError);
  CHECK_THROWS_AS(difference_signals({a}), ContractError);
}

TEST_CASE("configs are validated before running") {
  PrepsyConfig config = toy_config();
  config.projections.pop_back();  // one projection cannot form a difference
  CHECK_THROWS_AS(config.validate(2), ContractError);

  config = toy_config();
  config.standard_state *= 2.0;  // not a unit vector
  CHECK_THROWS_AS(config.validate(2), ContractError);

  config = toy_config();
  config.pulse.factor = 1;  // pulse must act on the system factor
  CHECK_THROWS_AS(config.validate(2), ContractError);

  config = toy_config();
  config.t1.count = 1;
  CHECK_THROWS_AS(config.validate(2), ContractError);
}

TEST_CASE("analytic derivative matches a centered finite difference") {
  // Build the full protocol response to a small perturbation of one chi
  // element and compare against the closed-form directional derivative.
  const PrepsyConfig config = toy_config();
  const HilbertStructure s = qubits(2);
  const double t1 = 2.0 * config.t1.spacing;
  const double t2 = 3.0 * config.t2.spacing;

  const ChiElement element{0, 1, 1, 0};
  const double eps = 1e-6;

  auto record_point = [&](double amplitude) {
    // State I/4 + amplitude * (delta + delta^dag), delta = E_01 (x) E_10.
    ComplexMatrix chi = ComplexMatrix::Zero(4, 4);
    const Index d_env = 2;
    const Index row = element.i_s * d_env + element.i_e;
    const Index col = element.j_s * d_env + element.j_e;
    chi(row, col) += amplitude;
    chi(col, row) += amplitude;  // Hermitian partner
    ComplexMatrix full = 0.25 * linalg::identity(4) + chi;
    const DensityMatrix r(full, s);
    const std::vector<Signal2D> signals = run_prepsy(r, config);
    return signals[0].values(2, 3);
  };

  const double fd = (record_point(eps) - record_point(-eps)) / (2.0 * eps);
  const double analytic = signal_chi_derivative(config, element, t1, t2);
  CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("derivative rejects directions that break double tracelessness") {
  const PrepsyConfig config = toy_config();
  CHECK_THROWS_AS(signal_chi_derivative(config, {0, 0, 0, 1}, 0.1, 0.1), ContractError);
  CHECK_THROWS_AS(signal_chi_derivative(config, {0, 1, 1, 1}, 0.1, 0.1), ContractError);
  CHECK_THROWS_AS(signal_chi_derivative(config, {0, 1, 1, 5}, 0.1, 0.1), ContractError);
}

TEST_CASE("derivative requires closed evolution") {
  PrepsyConfig config = toy_config();
  config.evolution.channels.push_back(
      {linalg::embed(linalg::sigma_minus(), qubits(2), 1), 0.1});
  CHECK_THROWS_AS(signal_chi_derivative(config, {0, 1, 0, 1}, 0.1, 0.1),
                  UnsupportedConfiguration);
}

}  // TEST_SUITE
