#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "prepsy/models.hpp"

using namespace prepsy;
using namespace prepsy::models;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> sorted_eigenvalues(const ComplexMatrix& h) {
  const linalg::EigResult eig = linalg::herm_eig(h);
  return std::vector<double>(eig.values.data(), eig.values.data() + eig.values.size());
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("single-axis coupling has the +-1 doublet spectrum") {
  // Oracle: H = sigma_x (x) sigma_x for lambda_xx = 4, eigenvalues {-1,-1,1,1}.
  ToyModelParams p;
  p.lambda[0][0] = 4.0;
  const std::vector<double> ev = sorted_eigenvalues(toy_hamiltonian(p));
  const std::vector<double> expected{-1.0, -1.0, 1.0, 1.0};
  for (size_t k = 0; k < 4; ++k) CHECK(ev[k] == doctest::Approx(expected[k]).epsilon(1e-13));
}

TEST_CASE("diagonal coupling spectrum matches the Bell-basis closed form") {
  // Oracle: for H = sum_i lambda_i/4 sigma_i(x)sigma_i the Bell states are
  // eigenvectors with energies (+-lx -+ly +lz)/4 and -(lx+ly+lz)/4. For
  // lambda = 2*pi*(4, 3, 3.5) that is 2*pi*{-2.625, 0.625, 0.875, 1.125}.
  ToyModelParams p;
  p.lambda[0][0] = kTwoPi * 4.0;
  p.lambda[1][1] = kTwoPi * 3.0;
  p.lambda[2][2] = kTwoPi * 3.5;
  const std::vector<double> ev = sorted_eigenvalues(toy_hamiltonian(p));
  const std::vector<double> expected{-2.625, 0.625, 0.875, 1.125};
  for (size_t k = 0; k < 4; ++k)
    CHECK(ev[k] / kTwoPi == doctest::Approx(expected[k]).epsilon(1e-12));

  // Distinct positive gaps in ordinary-frequency units.
  std::set<double> gaps;
  for (size_t a = 0; a < 4; ++a)
    for (size_t b = a + 1; b < 4; ++b) {
      const double g = std::abs(ev[b] - ev[a]) / kTwoPi;
      bool seen = false;
      for (double have : gaps) seen = seen || std::abs(have - g) < 1e-9;
      if (!seen) gaps.insert(g);
    }
  const std::vector<double> expected_gaps{0.25, 0.5, 3.25, 3.5, 3.75};
  REQUIRE(gaps.size() == expected_gaps.size());
  size_t k = 0;
  for (double g : gaps) CHECK(g == doctest::Approx(expected_gaps[k++]).epsilon(1e-12));
}

TEST_CASE("local fields shift the product-basis diagonal") {
  ToyModelParams p;
  p.omega_s = 2.0;
  p.omega_e = 0.6;
  const ComplexMatrix h = toy_hamiltonian(p);
  // Diagonal in the computational basis: (s z + e z')/2 with z = +-1.
  CHECK(h(0, 0).real() == doctest::Approx(1.3));
  CHECK(h(1, 1).real() == doctest::Approx(0.7));
  CHECK(h(2, 2).real() == doctest::Approx(-0.7));
  CHECK(h(3, 3).real() == doctest::Approx(-1.3));
  CHECK(linalg::max_abs(h - h.adjoint()) < 1e-15);
}

TEST_CASE("two-spin collective spectrum is the triplet/singlet split") {
  // Oracle: 4xi(J^2-Jz^2) - 4xi I on two qubits has eigenvalues {-4xi, 0, 0, 4xi}.
  const double xi = 0.3;
  const NvEnsembleParams p = NvEnsembleParams::uniform(2, xi);
  const std::vector<double> ev = sorted_eigenvalues(nv_collective_hamiltonian(p));
  const std::vector<double> expected{-4.0 * xi, 0.0, 0.0, 4.0 * xi};
  for (size_t k = 0; k < 4; ++k) CHECK(ev[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("pairwise and collective builders agree for uniform coupling") {
  for (Index n = 2; n <= 4; ++n) {
    const NvEnsembleParams p = NvEnsembleParams::uniform(n, 0.05);
    const ComplexMatrix pairwise = nv_pairwise_hamiltonian(p);
    const ComplexMatrix collective = nv_collective_hamiltonian(p);
    CHECK(linalg::max_abs(pairwise - collective) < 1e-12);
  }
}

TEST_CASE("nonuniform coupling is rejected by the collective form only") {
  NvEnsembleParams p = NvEnsembleParams::uniform(3, 0.05);
  p.xi(0, 1) = p.xi(1, 0) = 0.07;
  CHECK_NOTHROW(nv_pairwise_hamiltonian(p));
  CHECK_THROWS_AS(nv_collective_hamiltonian(p), ContractError);
}

TEST_CASE("parameter validation rejects malformed ensembles") {
  CHECK_THROWS_AS(NvEnsembleParams::uniform(1, 0.1).validate(), ContractError);
  NvEnsembleParams asym = NvEnsembleParams::uniform(3, 0.1);
  asym.xi(0, 1) = 0.2;  // breaks symmetry
  CHECK_THROWS_AS(asym.validate(), ContractError);
  NvEnsembleParams self = NvEnsembleParams::uniform(3, 0.1);
  self.xi(1, 1) = 0.1;
  CHECK_THROWS_AS(self.validate(), ContractError);
  NvEnsembleParams neg = NvEnsembleParams::uniform(3, 0.1, 0.01);
  neg.gamma10(2) = -0.01;
  CHECK_THROWS_AS(neg.validate(), ContractError);
}

TEST_CASE("adiabatic check compares detuning against ten couplings") {
  NvEnsembleParams p = NvEnsembleParams::uniform(2, 0.1);
  CHECK(p.adiabatic_ok());  // no metadata: nothing to check
  p.g = 1.0;
  p.delta = 10.0;
  CHECK(p.adiabatic_ok());
  p.delta = 5.0;
  CHECK_FALSE(p.adiabatic_ok());
}

TEST_CASE("level table for six spins") {
  const double xi = 0.001 * kTwoPi;
  const LevelTable table = enumerate_levels(6, xi);
  CHECK(table.n_spins == 6);
  REQUIRE(table.levels.size() == 10);  // (j,|m|) multiplets for j in {0..3}
  CHECK(table.distinct_energy_count == 9);

  Index total = 0;
  for (const Level& lv : table.levels) total += lv.multiplicity;
  CHECK(total == 64);

  // Oracle: distinct positive gaps are exactly 4*xi*{1,...,12}.
  REQUIRE(table.transition_energies.size() == 12);
  for (size_t k = 0; k < 12; ++k)
    CHECK(table.transition_energies[k] ==
          doctest::Approx(4.0 * xi * static_cast<double>(k + 1)).epsilon(1e-12));

  // The closed-form energies match the dense collective Hamiltonian.
  const NvEnsembleParams p = NvEnsembleParams::uniform(6, xi);
  const std::vector<double> dense = sorted_eigenvalues(nv_collective_hamiltonian(p));
  std::vector<double> listed;
  for (const Level& lv : table.levels)
    listed.insert(listed.end(), static_cast<size_t>(lv.multiplicity), lv.energy);
  std::sort(listed.begin(), listed.end());
  REQUIRE(listed.size() == dense.size());
  for (size_t k = 0; k < dense.size(); ++k)
    CHECK(listed[k] == doctest::Approx(dense[k]).epsilon(1e-10));
}

TEST_CASE("level table for two spins") {
  const LevelTable table = enumerate_levels(2, 0.5);
  CHECK(table.levels.size() == 3);
  CHECK(table.distinct_energy_count == 3);
  REQUIRE(table.transition_energies.size() == 2);
  CHECK(table.transition_energies[0] == doctest::Approx(4.0 * 0.5));
  CHECK(table.transition_energies[1] == doctest::Approx(8.0 * 0.5));
  CHECK_THROWS_AS(enumerate_levels(6, 0.0), ContractError);
  CHECK_THROWS_AS(enumerate_levels(1, 0.1), ContractError);
}

TEST_CASE("negative coupling folds into positive transition energies") {
  const LevelTable table = enumerate_levels(4, -0.2);
  for (double e : table.transition_energies) CHECK(e > 0.0);
  CHECK(table.transition_energies.front() == doctest::Approx(4.0 * 0.2));
}

TEST_CASE("decay channels embed one lowering operator per damped spin") {
  NvEnsembleParams p = NvEnsembleParams::uniform(3, 0.1, 0.02);
  p.gamma10(1) = 0.0;  // undamped spin contributes no channel
  const HilbertStructure s = qubits(3);
  const std::vector<LindbladChannel> ch = nv_dissipators(p, s);
  REQUIRE(ch.size() == 2);
  CHECK(ch[0].rate == doctest::Approx(0.02));
  CHECK(linalg::max_abs(ch[0].op - linalg::embed(linalg::sigma_minus(), s, 0)) < 1e-15);
  CHECK(linalg::max_abs(ch[1].op - linalg::embed(linalg::sigma_minus(), s, 2)) < 1e-15);
  CHECK_THROWS_AS(nv_dissipators(p, qubits(4)), ContractError);
}

TEST_CASE("bus channel appends the truncated annihilation operator") {
  NvEnsembleParams p = NvEnsembleParams::uniform(2, 0.1);
  p.kappa = 0.4;
  HilbertStructure s({2, 2, 3});
  const std::vector<LindbladChannel> ch = nv_dissipators(p, s, /*include_bus=*/true);
  REQUIRE(ch.size() == 1);  // no spin decay, just the bus
  CHECK(ch[0].rate == doctest::Approx(0.4));
  CHECK(linalg::max_abs(ch[0].op - linalg::embed(annihilation(3), s, 2)) < 1e-15);
}

TEST_CASE("annihilation operator matrix elements") {
  const ComplexMatrix a = annihilation(3);
  ComplexMatrix expected = ComplexMatrix::Zero(3, 3);
  expected(0, 1) = 1.0;
  expected(1, 2) = std::sqrt(2.0);
  CHECK(linalg::max_abs(a - expected) < 1e-15);
  CHECK_THROWS_AS(annihilation(1), ContractError);
}

}  // TEST_SUITE
