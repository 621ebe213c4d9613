#pragma once

#include <optional>

#include "prepsy/common.hpp"
#include "prepsy/linalg.hpp"

namespace prepsy::models {

// Two-spin model H = omega_s S_z(x)I + omega_e I(x)S_z + sum_ij lambda[i][j] S_i(x)S_j
// with S_i = sigma_i/2. All parameters are angular frequencies; the config
// layer owns any Hz -> angular conversion.
struct ToyModelParams {
  double omega_s = 0.0;
  double omega_e = 0.0;
  std::array<std::array<double, 3>, 3> lambda{};  // lambda[i][j] couples S_i (x) S_j
};

ComplexMatrix toy_hamiltonian(const ToyModelParams& p);

// Spin-ensemble parameters after adiabatic elimination of the bus mode.
// xi is the effective pair coupling and the only quantity entering the
// Hamiltonian builders; the raw cavity numbers ride along as metadata.
struct NvEnsembleParams {
  Index n_spins = 0;
  RealMatrix xi;                    // symmetric, zero diagonal; angular frequency
  RealVector gamma10;               // per-spin |1>->|0> decay rate (plain rate, may be empty = all zero)
  // Metadata from the physical setup (not used by the builders):
  std::optional<double> g;          // spin-bus coupling
  std::optional<double> delta;      // bus detuning
  std::optional<double> omega_raman;
  std::optional<double> kappa;      // bus decay (explicit-bus variant only)
  std::optional<double> gamma_e0, gamma_e1;  // optical manifold rates, out of scope here

  static NvEnsembleParams uniform(Index n_spins, double xi, double gamma10 = 0.0);

  void validate() const;
  // Adiabatic-elimination sanity: detuning should dominate the coupling.
  // Returns false (rather than throwing) when delta < 10*g; callers record it.
  bool adiabatic_ok() const;
};

// Excitation-hopping form: per unordered pair (i<j) the coupling element is
// 4*xi[i][j] on |1_i 0_j><0_i 1_j| + h.c. The factor 4 is pinned by the
// collective form below: with uniform xi both builders produce the same
// matrix, which anchors the (j,m) level formulas used downstream.
ComplexMatrix nv_pairwise_hamiltonian(const NvEnsembleParams& p);

// Collective form 4*xi*(J^2 - J_z^2) - 2*xi*n*I with J = sum_i sigma_i/2.
// Requires uniform xi.
ComplexMatrix nv_collective_hamiltonian(const NvEnsembleParams& p);

struct LindbladChannel {
  ComplexMatrix op;  // jump operator in the full space
  double rate;       // plain rate (the factor-2 convention lives in the dissipator)
};

// Per-spin |0><1| decay channels for every spin with gamma10 > 0. With
// include_bus the structure must carry one extra non-qubit factor (the bus
// mode, photon-number cutoff 2 => dimension 3) and kappa adds its
// annihilation-operator channel.
std::vector<LindbladChannel> nv_dissipators(const NvEnsembleParams& p,
                                            const HilbertStructure& structure,
                                            bool include_bus = false);

// Photon annihilation operator on an n-dimensional truncated mode.
ComplexMatrix annihilation(Index dim);

// One (j,|m|) multiplet of the collective spectrum.
struct Level {
  double j;
  double m_abs;
  double energy;      // 4*xi*(j(j+1) - m^2) - 2*xi*n
  Index multiplicity; // degeneracy counting j-repeats and the +-m pair
};

struct LevelTable {
  Index n_spins = 0;
  std::vector<Level> levels;                  // all (j,|m|) multiplets
  std::vector<double> transition_energies;    // distinct positive energy differences, ascending
  Index distinct_energy_count = 0;            // numerically distinct level energies
};

// Closed-form level structure of the collective Hamiltonian. Multiplicities
// use the standard j-degeneracy count for n spins-1/2 and sum to 2^n.
LevelTable enumerate_levels(Index n_spins, double xi);

}  // namespace prepsy::models
