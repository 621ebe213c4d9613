#pragma once

#include <array>

#include "prepsy/common.hpp"
#include "prepsy/linalg.hpp"

namespace prepsy::states {

// Validated density operator on a structured Hilbert space.
// Invariants checked on construction: Hermitian within kHermTol, unit trace
// within kStateTraceTol, eigenvalues >= -kStateEigTol.
struct DensityMatrix {
  ComplexMatrix matrix;
  HilbertStructure structure;

  DensityMatrix() = default;
  DensityMatrix(ComplexMatrix m, HilbertStructure s);

  Index dim() const { return matrix.rows(); }
  double trace_real() const { return matrix.trace().real(); }

  // Throws InvalidParameters with diagnostics if the invariants fail.
  void validate(double trace_tol = kStateTraceTol, double eig_tol = kStateEigTol) const;
};

// R = rho (x) tau + chi with doubly traceless chi. decompose() makes this
// exact by construction: rho and tau are the marginals, chi the remainder.
struct BipartiteDecomposition {
  DensityMatrix rho;   // system marginal
  DensityMatrix tau;   // environment marginal
  ComplexMatrix chi;   // correlation remainder, Tr_s chi = 0 and Tr_e chi = 0
};

// u, v Bloch vectors of the marginals, T the 3x3 correlation tensor:
// R = 1/4 (I + u.sigma (x) I + I (x) v.sigma + sum_jk T_jk sigma_j (x) sigma_k).
struct FanoCoefficients {
  std::array<double, 3> u{};
  std::array<double, 3> v{};
  std::array<std::array<double, 3>, 3> t{};
};

// Two-qubit state from Fano-form coefficients. Throws InvalidParameters
// naming the offending eigenvalue when the coefficients leave the state cone.
DensityMatrix build_fano(const FanoCoefficients& coeffs);

// Diagonal-correlation family with maximally mixed marginals:
// R = 1/4 (I + sum_j c_j sigma_j (x) sigma_j).
DensityMatrix build_maximally_mixed_marginal(const std::array<double, 3>& c);

// exp(-beta h)/Z computed in the eigenbasis of h with the ground energy
// shifted out before exponentiation (no overflow for large beta).
DensityMatrix gibbs_state(const ComplexMatrix& h, double beta, const HilbertStructure& structure);

// Marginals + correlation remainder of a state on exactly two factors.
BipartiteDecomposition decompose(const DensityMatrix& r);

// Inverse of build_fano for two-qubit states (Pauli expectation readout).
FanoCoefficients fano_coefficients(const DensityMatrix& r);

// Pure projector |v><v| as a density matrix (v normalized within 1e-12).
DensityMatrix pure_state(const ComplexVector& v, const HilbertStructure& structure);

}  // namespace prepsy::states
