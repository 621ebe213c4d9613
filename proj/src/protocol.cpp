#include "prepsy/protocol.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace prepsy::protocol {

using states::DensityMatrix;

namespace {

void require_unit_vector(const ComplexVector& v, Index dim, const char* what) {
  if (v.size() != dim)
    throw ContractError(std::string(what) + ": expected dimension " + std::to_string(dim));
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw ContractError(std::string(what) + ": vector is not normalized");
}

// <v|_0 M |w>_0 : contract tensor factor 0 on both sides, leaving an
// operator on the remaining factors.
ComplexMatrix partial_inner(const ComplexMatrix& m, const ComplexVector& v,
                            const ComplexVector& w) {
  const Index d_sys = v.size();
  const Index d_env = m.rows() / d_sys;
  ComplexMatrix out = ComplexMatrix::Zero(d_env, d_env);
  for (Index i = 0; i < d_sys; ++i)
    for (Index j = 0; j < d_sys; ++j) {
      const Complex c = std::conj(v(i)) * w(j);
      if (c != Complex(0, 0))
        out.noalias() += c * m.block(i * d_env, j * d_env, d_env, d_env);
    }
  return out;
}

// Tr[(|n><n| (x) I) rho] without forming the projector.
Complex population(const ComplexMatrix& rho, const ComplexVector& n) {
  const Index d_sys = n.size();
  const Index d_env = rho.rows() / d_sys;
  Complex acc = 0;
  for (Index i = 0; i < d_sys; ++i)
    for (Index j = 0; j < d_sys; ++j) {
      const Complex c = std::conj(n(i)) * n(j);
      if (c == Complex(0, 0)) continue;
      acc += c * rho.block(i * d_env, j * d_env, d_env, d_env).trace();
    }
  return acc;
}

int resolve_workers(int requested, Index rows) {
  int w = requested > 0 ? requested
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<Index>(w, rows));
}

}  // namespace

void PrepsyConfig::validate(Index system_dim) const {
  if (projections.size() < 2)
    throw ContractError("prepsy config needs at least 2 projections to difference");
  for (const ComplexVector& m : projections) require_unit_vector(m, system_dim, "projection");
  if (!projection_labels.empty() && projection_labels.size() != projections.size())
    throw ContractError("projection_labels must match projections");
  require_unit_vector(standard_state, system_dim, "standard state");
  require_unit_vector(observable, system_dim, "observable");
  linalg::require_hermitian(pulse.generator, "pulse generator");
  if (pulse.generator.rows() != system_dim)
    throw ContractError("pulse generator must act on the system factor");
  if (pulse.factor != 0) throw ContractError("the protocol pulses tensor factor 0 (the system)");
  t1.validate();
  t2.validate();
  evolution.validate();
}

std::string PrepsyConfig::label(size_t i) const {
  if (i < projection_labels.size()) return projection_labels[i];
  return "m" + std::to_string(i);
}

PreparedState conditional_prepare(const states::DensityMatrix& r, const ComplexVector& m,
                                  const ComplexVector& standard) {
  if (r.structure.factors() < 2)
    throw ContractError("conditional_prepare: state needs an environment factor");
  const Index d_sys = r.structure.dims[0];
  require_unit_vector(m, d_sys, "projection");
  require_unit_vector(standard, d_sys, "standard state");

  ComplexMatrix sigma = partial_inner(r.matrix, m, m);
  const double p = sigma.trace().real();
  if (p < 1e-12)
    throw BranchImpossible("projection branch has probability " + std::to_string(p));
  sigma /= p;
  sigma = 0.5 * (sigma + sigma.adjoint()).eval();

  PreparedState out;
  out.probability = p;
  out.state.matrix = linalg::kron(ComplexMatrix(standard * standard.adjoint()), sigma);
  out.state.structure = r.structure;
  out.state.validate();
  return out;
}

std::vector<Signal2D> run_prepsy(const states::DensityMatrix& r, const PrepsyConfig& config,
                                 RunDiagnostics* diagnostics) {
  if (r.structure.factors() < 2)
    throw ContractError("run_prepsy: state needs an environment factor");
  const Index d_sys = r.structure.dims[0];
  config.validate(d_sys);
  if (config.evolution.hamiltonian.rows() != r.dim())
    throw ContractError("run_prepsy: hamiltonian does not match state dimension");

  const Index n1 = config.t1.count, n2 = config.t2.count;
  const dynamics::Stepper step1(config.evolution, config.t1.spacing);
  const dynamics::Stepper step2(config.evolution, config.t2.spacing);
  const ComplexMatrix pulse_u = dynamics::pulse_unitary(config.pulse, r.structure);

  RunDiagnostics diag;
  std::vector<Signal2D> signals;
  signals.reserve(config.projections.size());

  for (size_t pi = 0; pi < config.projections.size(); ++pi) {
    const PreparedState prepared =
        conditional_prepare(r, config.projections[pi], config.standard_state);

    // March the pre-pulse state down the t1 grid once; rows then evolve
    // independently along t2 (parallelizable without changing results).
    std::vector<ComplexMatrix> row_base(static_cast<size_t>(n1));
    row_base[0] = prepared.state.matrix;
    for (Index i1 = 1; i1 < n1; ++i1) {
      row_base[static_cast<size_t>(i1)] = row_base[static_cast<size_t>(i1 - 1)];
      step1.step(row_base[static_cast<size_t>(i1)]);
    }

    Signal2D sig;
    sig.values.resize(n1, n2);
    sig.t1_spacing = config.t1.spacing;
    sig.t2_spacing = config.t2.spacing;
    sig.label = config.label(pi);

    std::mutex merge_mutex;
    std::exception_ptr first_error;
    std::atomic<Index> next_row{0};

    auto process_rows = [&]() {
      RunDiagnostics local;
      try {
        for (;;) {
          const Index i1 = next_row.fetch_add(1);
          if (i1 >= n1) break;
          ComplexMatrix st = pulse_u * row_base[static_cast<size_t>(i1)] * pulse_u.adjoint();
          for (Index i2 = 0; i2 < n2; ++i2) {
            const Complex value = population(st, config.observable);
            sig.values(i1, i2) = value.real();
            local.max_imag_signal = std::max(local.max_imag_signal, std::abs(value.imag()));
            local.max_trace_drift =
                std::max(local.max_trace_drift, std::abs(st.trace() - Complex(1, 0)));
            local.min_eigenvalue =
                std::min(local.min_eigenvalue, linalg::herm_eig(st).values(0));
            if (i2 + 1 < n2) step2.step(st);
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(merge_mutex);
        if (!first_error) first_error = std::current_exception();
      }
      std::lock_guard<std::mutex> lock(merge_mutex);
      diag.max_imag_signal = std::max(diag.max_imag_signal, local.max_imag_signal);
      diag.max_trace_drift = std::max(diag.max_trace_drift, local.max_trace_drift);
      diag.min_eigenvalue = std::min(diag.min_eigenvalue, local.min_eigenvalue);
    };

    const int workers = resolve_workers(config.workers, n1);
    if (workers <= 1) {
      process_rows();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(workers));
      for (int w = 0; w < workers; ++w) pool.emplace_back(process_rows);
      for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    signals.push_back(std::move(sig));
  }

  if (diag.max_trace_drift > kEvolveTraceTol || diag.min_eigenvalue < -kEvolveEigTol)
    throw NumericalFailure("protocol run lost numerical integrity (trace drift " +
                               std::to_string(diag.max_trace_drift) + ", min eigenvalue " +
                               std::to_string(diag.min_eigenvalue) + ")",
                           diag.max_trace_drift, diag.min_eigenvalue);
  if (diag.max_imag_signal > kImagSignalTol)
    throw NumericalFailure("measured signal has imaginary residue " +
                               std::to_string(diag.max_imag_signal),
                           diag.max_trace_drift, diag.min_eigenvalue);
  if (diagnostics) *diagnostics = diag;
  return signals;
}

std::vector<Signal2D> difference_signals(const std::vector<Signal2D>& signals) {
  if (signals.size() < 2)
    throw ContractError("difference_signals: need at least 2 signals");
  for (size_t i = 1; i < signals.size(); ++i) {
    if (signals[i].values.rows() != signals[0].values.rows() ||
        signals[i].values.cols() != signals[0].values.cols() ||
        signals[i].t1_spacing != signals[0].t1_spacing ||
        signals[i].t2_spacing != signals[0].t2_spacing)
      throw ContractError("difference_signals: signals disagree on the grid");
  }
  std::vector<Signal2D> out;
  out.reserve(signals.size() * (signals.size() - 1) / 2);
  for (size_t i = 0; i < signals.size(); ++i)
    for (size_t j = i + 1; j < signals.size(); ++j) {
      Signal2D d;
      d.values = signals[i].values - signals[j].values;
      d.t1_spacing = signals[0].t1_spacing;
      d.t2_spacing = signals[0].t2_spacing;
      d.label = signals[i].label + "-" + signals[j].label;
      out.push_back(std::move(d));
    }
  return out;
}

ComplexMatrix retained_correlation(const ComplexMatrix& chi, const ComplexVector& m,
                                   const HilbertStructure& structure) {
  structure.validate();
  if (structure.factors() < 2)
    throw ContractError("retained_correlation: structure needs an environment factor");
  if (chi.rows() != structure.total_dim() || chi.cols() != structure.total_dim())
    throw ContractError("retained_correlation: chi does not match structure");
  require_unit_vector(m, structure.dims[0], "projection");
  return partial_inner(chi, m, m);
}

double signal_chi_derivative(const PrepsyConfig& config, const ChiElement& element, double t1,
                             double t2, const ComplexMatrix& system_marginal) {
  const Index d_total = config.evolution.hamiltonian.rows();
  if (config.projections.empty()) throw ContractError("config has no projections");
  const Index d_sys = config.projections[0].size();
  if (d_total % d_sys != 0)
    throw ContractError("hamiltonian dimension is not a multiple of the system dimension");
  const Index d_env = d_total / d_sys;
  config.validate(d_sys);
  if (!config.evolution.closed())
    throw UnsupportedConfiguration("signal_chi_derivative supports closed evolution only");
  if (t1 < 0.0 || t2 < 0.0) throw ContractError("delays must be nonnegative");

  if (element.i_s < 0 || element.i_s >= d_sys || element.j_s < 0 || element.j_s >= d_sys ||
      element.i_e < 0 || element.i_e >= d_env || element.j_e < 0 || element.j_e >= d_env)
    throw ContractError("chi element index out of range");
  if (element.i_s == element.j_s || element.i_e == element.j_e)
    throw ContractError(
        "chi element must be off-diagonal in both factors so the perturbation stays doubly "
        "traceless");

  // Branch probability of the first projection under the system marginal.
  const ComplexVector& m = config.projections[0];
  double p;
  if (system_marginal.size() == 0) {
    p = 1.0 / static_cast<double>(d_sys);
  } else {
    linalg::require_hermitian(system_marginal, "system marginal");
    if (system_marginal.rows() != d_sys)
      throw ContractError("system marginal must act on the system factor");
    p = (m.adjoint() * system_marginal * m)(0, 0).real();
  }
  if (p < 1e-12) throw BranchImpossible("projection branch has probability " + std::to_string(p));

  // d sigma_m / d eps for E = |i_s i_e><j_s j_e| + h.c. equals
  // (<m|i_s><j_s|m> |i_e><j_e| + conj) / p.
  const Complex coeff = std::conj(m(element.i_s)) * m(element.j_s);
  ComplexMatrix env_dir = ComplexMatrix::Zero(d_env, d_env);
  env_dir(element.i_e, element.j_e) += coeff;
  env_dir(element.j_e, element.i_e) += std::conj(coeff);
  env_dir /= p;

  const HilbertStructure structure = bipartite(d_sys, d_env);
  const ComplexMatrix u1 =
      linalg::expm_herm_factor(config.evolution.hamiltonian, Complex(0, -t1));
  const ComplexMatrix u2 =
      linalg::expm_herm_factor(config.evolution.hamiltonian, Complex(0, -t2));
  const ComplexMatrix pulse_u = dynamics::pulse_unitary(config.pulse, structure);

  ComplexMatrix delta = linalg::kron(
      ComplexMatrix(config.standard_state * config.standard_state.adjoint()), env_dir);
  delta = u2 * (pulse_u * (u1 * delta * u1.adjoint()) * pulse_u.adjoint()) * u2.adjoint();
  return population(delta, config.observable).real();
}

}  // namespace prepsy::protocol
