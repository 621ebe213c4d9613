#include "prepsy/dynamics.hpp"

#include <cmath>

namespace prepsy::dynamics {

using states::DensityMatrix;

double EvolutionSpec::resolved_dt(double fallback_span) const {
  double step = dt > 0.0 ? dt : fallback_span / 20.0;
  const double hmax = linalg::max_abs(hamiltonian);
  if (hmax > 0.0) step = std::min(step, 0.1 / hmax);
  return step;
}

void EvolutionSpec::validate() const {
  linalg::require_hermitian(hamiltonian, "evolution hamiltonian");
  const Index dim = hamiltonian.rows();
  for (const LindbladChannel& ch : channels) {
    if (ch.op.rows() != dim || ch.op.cols() != dim)
      throw ContractError("lindblad channel dimension does not match hamiltonian");
    if (ch.rate < 0.0) throw ContractError("lindblad channel rate must be nonnegative");
  }
  if (dt > 0.0) {
    const double hmax = linalg::max_abs(hamiltonian);
    if (dt * hmax > 0.1 + 1e-12)
      throw ContractError("dt " + std::to_string(dt) + " violates stability guard dt*|H|max <= 0.1");
  }
  if (method == Method::kEigenbasis && !closed())
    throw UnsupportedConfiguration("eigenbasis propagator cannot handle dissipative channels");
}

ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const EvolutionSpec& spec) {
  const Index dim = spec.hamiltonian.rows();
  if (rho.rows() != dim || rho.cols() != dim)
    throw ContractError("lindblad_rhs: state dimension does not match hamiltonian");
  ComplexMatrix out = Complex(0, -1) * linalg::commutator(spec.hamiltonian, rho);
  for (const LindbladChannel& ch : spec.channels) {
    const ComplexMatrix lr = ch.op * rho;
    out.noalias() += (2.0 * ch.rate) * (lr * ch.op.adjoint());
    out -= ch.rate * linalg::anticommutator(ch.op.adjoint() * ch.op, rho);
  }
  return out;
}

Stepper::Stepper(const EvolutionSpec& spec, double spacing) : spacing_(spacing) {
  spec.validate();
  if (spacing < 0.0) throw ContractError("stepper spacing must be nonnegative");
  const bool want_propagator =
      spec.method == Method::kEigenbasis ||
      (spec.method == Method::kAuto && spec.closed());
  if (want_propagator) {
    use_propagator_ = true;
    propagator_ = linalg::expm_herm_factor(spec.hamiltonian, Complex(0, -spacing));
    return;
  }
  // Fold the anticommutator term into a non-Hermitian drift:
  // rhs = -i (A rho - rho A†) + sum 2 rate L rho L†, A = H - i sum rate L†L.
  drift_ = spec.hamiltonian;
  const Index dim = spec.hamiltonian.rows();
  channels_.reserve(spec.channels.size());
  for (const LindbladChannel& ch : spec.channels) {
    if (ch.rate == 0.0) continue;  // contributes nothing to drift or jumps
    drift_ -= Complex(0, 1) * ch.rate * (ch.op.adjoint() * ch.op);
    Channel c;
    c.rate = ch.rate;
    Eigen::SparseMatrix<Complex> s = ch.op.sparseView();
    if (4 * s.nonZeros() <= dim * dim) {
      c.sparse = true;
      c.op = std::move(s);
      c.op_adjoint = ComplexMatrix(ch.op.adjoint()).sparseView();
    } else {
      c.dense = ch.op;
    }
    channels_.push_back(std::move(c));
  }
  const double step = spec.resolved_dt(spacing > 0.0 ? spacing : 1.0);
  substeps_ = spacing > 0.0 ? static_cast<Index>(std::ceil(spacing / step - 1e-12)) : 0;
  if (substeps_ < 1) substeps_ = 1;
  h_ = spacing > 0.0 ? spacing / static_cast<double>(substeps_) : 0.0;
}

void Stepper::rhs(const ComplexMatrix& rho, ComplexMatrix& out) const {
  const ComplexMatrix ar = drift_ * rho;
  out = Complex(0, -1) * (ar - ar.adjoint());
  ComplexMatrix lr, jump;  // locals: rhs runs concurrently from worker threads
  for (const Channel& ch : channels_) {
    if (ch.sparse) {
      lr.noalias() = ch.op * rho;
      jump.noalias() = lr * ch.op_adjoint;
    } else {
      lr.noalias() = ch.dense * rho;
      jump.noalias() = lr * ch.dense.adjoint();
    }
    out.noalias() += (2.0 * ch.rate) * jump;
  }
}

void Stepper::step(ComplexMatrix& rho) const {
  if (use_propagator_) {
    rho = propagator_ * rho * propagator_.adjoint();
    return;
  }
  if (spacing_ == 0.0) return;
  ComplexMatrix k1(rho.rows(), rho.cols()), k2 = k1, k3 = k1, k4 = k1, tmp = k1;
  for (Index s = 0; s < substeps_; ++s) {
    rhs(rho, k1);
    tmp = rho + (0.5 * h_) * k1;
    rhs(tmp, k2);
    tmp = rho + (0.5 * h_) * k2;
    rhs(tmp, k3);
    tmp = rho + h_ * k3;
    rhs(tmp, k4);
    rho += (h_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = 0.5 * (rho + rho.adjoint()).eval();  // keep roundoff from breaking Hermiticity
  }
}

DensityMatrix evolve(const DensityMatrix& rho, const EvolutionSpec& spec, double t) {
  spec.validate();
  if (t < 0.0) throw ContractError("evolve: time must be nonnegative");
  if (rho.dim() != spec.hamiltonian.rows())
    throw ContractError("evolve: state dimension does not match hamiltonian");

  ComplexMatrix m = rho.matrix;
  if (t > 0.0) {
    Stepper stepper(spec, t);
    stepper.step(m);
  }

  const double drift = std::abs(m.trace() - Complex(1.0, 0.0));
  const double min_eig = linalg::herm_eig(m).values(0);
  if (drift > kEvolveTraceTol || min_eig < -kEvolveEigTol)
    throw NumericalFailure("evolution lost numerical integrity (trace drift " +
                               std::to_string(drift) + ", min eigenvalue " +
                               std::to_string(min_eig) + ")",
                           drift, min_eig);

  DensityMatrix out;
  out.matrix = std::move(m);
  out.structure = rho.structure;
  return out;
}

ComplexMatrix pulse_unitary(const PulseSpec& pulse, const HilbertStructure& structure) {
  linalg::require_hermitian(pulse.generator, "pulse generator");
  const ComplexMatrix u2 = linalg::expm_herm_factor(pulse.generator, Complex(0, -pulse.angle));
  return linalg::embed(u2, structure, pulse.factor);
}

DensityMatrix apply_pulse(const DensityMatrix& rho, const PulseSpec& pulse) {
  const ComplexMatrix u = pulse_unitary(pulse, rho.structure);
  DensityMatrix out;
  out.matrix = u * rho.matrix * u.adjoint();
  out.structure = rho.structure;
  return out;
}

}  // namespace prepsy::dynamics
