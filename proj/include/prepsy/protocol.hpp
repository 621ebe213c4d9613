#pragma once

#include <string>

#include "prepsy/common.hpp"
#include "prepsy/dynamics.hpp"
#include "prepsy/states.hpp"

namespace prepsy::protocol {

struct TimeGrid {
  Index count = 0;
  double spacing = 0.0;  // grid points sit at k * spacing, k = 0..count-1
  void validate() const {
    if (count < 2) throw ContractError("time grid needs at least 2 points");
    if (spacing <= 0.0) throw ContractError("time grid spacing must be positive");
  }
};

// Real-valued measurement record over the (t1, t2) grid; rows index t1.
struct Signal2D {
  RealMatrix values;
  double t1_spacing = 0.0;
  double t2_spacing = 0.0;
  std::string label;
};

// Full protocol description. The system is tensor factor 0 of the state;
// projections, the reset state, the pulse generator and the readout vector
// all live in that factor's space.
struct PrepsyConfig {
  std::vector<ComplexVector> projections;      // conditioning measurement basis states
  std::vector<std::string> projection_labels;  // optional; defaults m0, m1, ...
  ComplexVector standard_state;                // system reset vector after conditioning
  dynamics::PulseSpec pulse;                   // applied between the two delays
  ComplexVector observable;                    // population of this vector is recorded
  TimeGrid t1, t2;
  dynamics::EvolutionSpec evolution;
  int workers = 0;  // protocol-level row parallelism; <= 0 means automatic

  void validate(Index system_dim) const;
  std::string label(size_t i) const;
};

// Integrity counters accumulated over every recorded grid point.
struct RunDiagnostics {
  double max_trace_drift = 0.0;
  double min_eigenvalue = 1.0;
  double max_imag_signal = 0.0;
};

// Conditioning step: project factor 0 of r onto |m><m|, normalize, and reset
// the system to |standard><standard| while the environment keeps the
// conditional state sigma_m. Returns the prepared state and the branch
// probability p = <m| Tr_env(r) |m>. p below 1e-12 throws BranchImpossible.
struct PreparedState {
  states::DensityMatrix state;
  double probability = 0.0;
};
PreparedState conditional_prepare(const states::DensityMatrix& r, const ComplexVector& m,
                                  const ComplexVector& standard);

// The three-step protocol for every projection: prepare, evolve t1, pulse,
// evolve t2, record the observable population on the grid. Results are
// deterministic and independent of the worker count.
std::vector<Signal2D> run_prepsy(const states::DensityMatrix& r, const PrepsyConfig& config,
                                 RunDiagnostics* diagnostics = nullptr);

// All pairwise differences signal_i - signal_j, i < j, in lexicographic order.
std::vector<Signal2D> difference_signals(const std::vector<Signal2D>& signals);

// The part of the correlation remainder chi that survives conditioning on m:
// <m|_s chi |m>_s, an operator on the environment factor. Equals
// p * (sigma_m - tau) for r = rho (x) tau + chi.
ComplexMatrix retained_correlation(const ComplexMatrix& chi, const ComplexVector& m,
                                   const HilbertStructure& structure);

// A single correlation matrix element of chi, perturbed jointly with its
// Hermitian-conjugate partner.
struct ChiElement {
  Index i_s, j_s;  // system row/column
  Index i_e, j_e;  // environment row/column
};

// Closed-form d N_m / d chi_element at one grid point for the FIRST
// projection in config, for perturbation directions that keep chi doubly
// traceless (i_s != j_s and i_e != j_e). system_marginal fixes the branch
// probability p = <m|rho|m>; empty means maximally mixed. Closed evolution
// only.
double signal_chi_derivative(const PrepsyConfig& config, const ChiElement& element, double t1,
                             double t2, const ComplexMatrix& system_marginal = {});

}  // namespace prepsy::protocol
