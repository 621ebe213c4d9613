#include "prepsy/states.hpp"

#include <cmath>
#include <sstream>

namespace prepsy::states {

using linalg::herm_eig;
using linalg::kron;
using linalg::partial_trace;
using linalg::pauli;

DensityMatrix::DensityMatrix(ComplexMatrix m, HilbertStructure s)
    : matrix(std::move(m)), structure(std::move(s)) {
  structure.validate();
  if (matrix.rows() != matrix.cols() || matrix.rows() != structure.total_dim())
    throw ContractError("density matrix dimension does not match structure");
  validate();
}

void DensityMatrix::validate(double trace_tol, double eig_tol) const {
  linalg::require_hermitian(matrix, "density matrix");
  const double drift = std::abs(matrix.trace() - Complex(1.0, 0.0));
  if (drift > trace_tol)
    throw InvalidParameters("density matrix trace deviates from 1 by " + std::to_string(drift));
  const RealVector evals = herm_eig(matrix).values;
  if (evals(0) < -eig_tol) {
    std::ostringstream os;
    os << "density matrix has negative eigenvalue " << evals(0);
    throw InvalidParameters(os.str());
  }
}

DensityMatrix build_fano(const FanoCoefficients& coeffs) {
  ComplexMatrix r = ComplexMatrix::Identity(4, 4);
  const ComplexMatrix id = linalg::identity(2);
  for (int j = 0; j < 3; ++j) {
    r += coeffs.u[static_cast<size_t>(j)] * kron(pauli(j), id);
    r += coeffs.v[static_cast<size_t>(j)] * kron(id, pauli(j));
    for (int k = 0; k < 3; ++k)
      r += coeffs.t[static_cast<size_t>(j)][static_cast<size_t>(k)] * kron(pauli(j), pauli(k));
  }
  r *= 0.25;
  const RealVector evals = herm_eig(r).values;
  if (evals(0) < -kStateEigTol) {
    std::ostringstream os;
    os << "fano coefficients give eigenvalue " << evals(0) << "; not a state";
    throw InvalidParameters(os.str());
  }
  return DensityMatrix(std::move(r), bipartite(2, 2));
}

DensityMatrix build_maximally_mixed_marginal(const std::array<double, 3>& c) {
  FanoCoefficients coeffs;
  for (size_t j = 0; j < 3; ++j) coeffs.t[j][j] = c[j];
  return build_fano(coeffs);
}

DensityMatrix gibbs_state(const ComplexMatrix& h, double beta, const HilbertStructure& structure) {
  if (beta < 0.0) throw ContractError("gibbs_state: beta must be nonnegative");
  linalg::EigResult eig = herm_eig(h);
  // Shift by the ground energy so every Boltzmann weight stays in (0, 1].
  const double ground = eig.values(0);
  RealVector w(eig.values.size());
  for (Index i = 0; i < w.size(); ++i) w(i) = std::exp(-beta * (eig.values(i) - ground));
  w /= w.sum();
  ComplexMatrix r = eig.vectors * w.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  return DensityMatrix(std::move(r), structure);
}

BipartiteDecomposition decompose(const DensityMatrix& r) {
  if (r.structure.factors() != 2)
    throw ContractError("decompose: state must have exactly two factors");
  BipartiteDecomposition out;
  ComplexMatrix rho = partial_trace(r.matrix, r.structure, {0});
  ComplexMatrix tau = partial_trace(r.matrix, r.structure, {1});
  out.chi = r.matrix - kron(rho, tau);
  out.rho = DensityMatrix(std::move(rho), HilbertStructure({r.structure.dims[0]}));
  out.tau = DensityMatrix(std::move(tau), HilbertStructure({r.structure.dims[1]}));
  return out;
}

FanoCoefficients fano_coefficients(const DensityMatrix& r) {
  if (r.structure.dims != std::vector<Index>{2, 2})
    throw ContractError("fano_coefficients: state must be two qubits");
  const ComplexMatrix id = linalg::identity(2);
  FanoCoefficients c;
  for (int j = 0; j < 3; ++j) {
    c.u[static_cast<size_t>(j)] = (kron(pauli(j), id) * r.matrix).trace().real();
    c.v[static_cast<size_t>(j)] = (kron(id, pauli(j)) * r.matrix).trace().real();
    for (int k = 0; k < 3; ++k)
      c.t[static_cast<size_t>(j)][static_cast<size_t>(k)] =
          (kron(pauli(j), pauli(k)) * r.matrix).trace().real();
  }
  return c;
}

DensityMatrix pure_state(const ComplexVector& v, const HilbertStructure& structure) {
  if (v.size() != structure.total_dim())
    throw ContractError("pure_state: vector does not match structure dimension");
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw ContractError("pure_state: vector is not normalized");
  return DensityMatrix(v * v.adjoint(), structure);
}

}  // namespace prepsy::states
