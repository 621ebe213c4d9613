#pragma once

#include <Eigen/SparseCore>

#include "prepsy/common.hpp"
#include "prepsy/linalg.hpp"
#include "prepsy/models.hpp"
#include "prepsy/states.hpp"

namespace prepsy::dynamics {

using models::LindbladChannel;

enum class Method {
  kAuto,        // eigenbasis propagator when closed, integrator otherwise
  kIntegrator,  // force the fixed-step 4th-order integrator
  kEigenbasis,  // closed systems only
};

// Time-independent evolution problem. dt is the integrator step target;
// evolve() subdivides the requested span into equal steps no longer than dt.
struct EvolutionSpec {
  ComplexMatrix hamiltonian;
  std::vector<LindbladChannel> channels;
  double dt = 0.0;  // <= 0 means "derive from the stability guard"
  Method method = Method::kAuto;

  bool closed() const { return channels.empty(); }
  // Stability guard: dt * max|H_ij| <= 0.1. Returns the compliant step.
  double resolved_dt(double fallback_span) const;
  void validate() const;
};

// d rho/dt = -i[H, rho] + sum_k rate_k (2 L rho L† - {L†L, rho}).
// The factor-2 normalization is part of the model convention here; single
// qubit decay at channel rate g therefore empties |1> as exp(-2 g t).
ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const EvolutionSpec& spec);

// Evolve by t >= 0. Output is re-symmetrized and validated (trace within
// 1e-8 of 1, eigenvalues >= -1e-8); violations throw NumericalFailure with
// the measured drift attached.
states::DensityMatrix evolve(const states::DensityMatrix& rho, const EvolutionSpec& spec,
                             double t);

// Precomputed fixed-step evolution: cheap repeated stepping along a grid.
// step() advances by exactly `spacing` passed at construction.
class Stepper {
 public:
  Stepper(const EvolutionSpec& spec, double spacing);
  void step(ComplexMatrix& rho) const;
  double spacing() const { return spacing_; }
  bool closed_path() const { return use_propagator_; }

 private:
  // Jump operators are usually sparse (embedded single-site lowering ops);
  // storing them sparse turns the O(d^3) channel matmuls into O(nnz * d).
  struct Channel {
    double rate = 0.0;
    bool sparse = false;
    ComplexMatrix dense;                          // when !sparse
    Eigen::SparseMatrix<Complex> op, op_adjoint;  // when sparse
  };

  ComplexMatrix propagator_;          // closed fast path: U(spacing)
  ComplexMatrix drift_;               // H - i sum rate L†L (integrator path)
  std::vector<Channel> channels_;
  double spacing_ = 0.0;
  double h_ = 0.0;                    // integrator substep
  Index substeps_ = 0;
  bool use_propagator_ = false;

  void rhs(const ComplexMatrix& rho, ComplexMatrix& out) const;
};

// Unitary kick exp(-i * angle * generator) applied to one factor.
struct PulseSpec {
  ComplexMatrix generator;  // Hermitian, dimension of the target factor
  double angle = kPi / 2.0;
  Index factor = 0;         // which tensor factor the pulse acts on
};

states::DensityMatrix apply_pulse(const states::DensityMatrix& rho, const PulseSpec& pulse);

// The embedded pulse unitary on the full space.
ComplexMatrix pulse_unitary(const PulseSpec& pulse, const HilbertStructure& structure);

}  // namespace prepsy::dynamics
