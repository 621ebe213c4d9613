#pragma once

#include "prepsy/common.hpp"

namespace prepsy::linalg {

// Pauli matrices and friends, by value so callers can't mutate shared state.
ComplexMatrix identity(Index n);
ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();
ComplexMatrix sigma_minus();  // |0><1|
ComplexMatrix pauli(int axis);  // 0,1,2 -> x,y,z

// Kronecker product, row-major index convention:
// (kron(a,b))[i*rb + k, j*cb + l] = a(i,j) * b(k,l).
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector kron(const ComplexVector& a, const ComplexVector& b);

// Embed op acting on factor `k` of `structure` into the full space.
ComplexMatrix embed(const ComplexMatrix& op, const HilbertStructure& structure, Index k);

// Trace out every factor not listed in `keep` (ascending, duplicate-free).
// keep == {} reduces to the scalar trace (1x1 result).
ComplexMatrix partial_trace(const ComplexMatrix& m, const HilbertStructure& structure,
                            const std::vector<Index>& keep);

double max_abs(const ComplexMatrix& m);
bool is_hermitian(const ComplexMatrix& m, double tol = kHermTol);
void require_hermitian(const ComplexMatrix& m, const char* what, double tol = kHermTol);

struct EigResult {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns, orthonormal
};

// Eigendecomposition of a Hermitian matrix. Rejects input further than
// kHermTol (max-abs) from Hermitian, then symmetrizes (m + m†)/2 before
// solving so roundoff never leaks into complex eigenvalues.
EigResult herm_eig(const ComplexMatrix& m);

// V * diag(exp(scale * lambda)) * V† for Hermitian h. This is the only
// matrix-exponential route in the library; scale = -i*t gives a unitary.
ComplexMatrix expm_herm_factor(const ComplexMatrix& h, Complex scale);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace prepsy::linalg
