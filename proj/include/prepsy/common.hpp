#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace prepsy {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Hard cap on dense operator dimension; everything here is exact dense algebra.
inline constexpr Index kMaxDim = 256;

// Tolerances shared across modules.
inline constexpr double kHermTol = 1e-10;        // max-abs deviation from m == m.adjoint()
inline constexpr double kStateTraceTol = 1e-10;  // |tr - 1| on construction
inline constexpr double kStateEigTol = 1e-10;    // min eigenvalue >= -kStateEigTol on construction
inline constexpr double kEvolveTraceTol = 1e-8;  // looser bounds for integrator output
inline constexpr double kEvolveEigTol = 1e-8;
inline constexpr double kImagSignalTol = 1e-10;  // imaginary residue monitor on measured signals

// ------------------------------- errors -------------------------------

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural misuse: dimension mismatches, non-Hermitian input, bad arguments.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Parameters describe no valid object (e.g. a Fano tensor with a negative eigenvalue).
class InvalidParameters : public Error {
 public:
  using Error::Error;
};

// A conditional branch has (numerically) zero probability.
class BranchImpossible : public Error {
 public:
  using Error::Error;
};

// Requested configuration is outside what the implementation supports.
class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

// Calibration preconditions not met (e.g. no thermal correlation to anchor on).
class CalibrationImpossible : public Error {
 public:
  using Error::Error;
};

// Numerical integrity lost during evolution; carries the offending diagnostics.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double trace_drift, double min_eigenvalue)
      : Error(what), trace_drift(trace_drift), min_eigenvalue(min_eigenvalue) {}
  double trace_drift = 0.0;
  double min_eigenvalue = 0.0;
};

// Experiment-file problems; carries the line number and a remedy hint.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string hint = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line),
        hint(std::move(hint)) {}
  int line = 0;
  std::string hint;
};

// --------------------------- hilbert structure ---------------------------

// Ordered tensor factorization of a Hilbert space. Factor 0 is the "system"
// by convention everywhere in this library.
struct HilbertStructure {
  std::vector<Index> dims;

  HilbertStructure() = default;
  explicit HilbertStructure(std::vector<Index> d) : dims(std::move(d)) { validate(); }

  Index total_dim() const {
    Index n = 1;
    for (Index d : dims) n *= d;
    return n;
  }
  Index factors() const { return static_cast<Index>(dims.size()); }

  void validate() const {
    if (dims.empty()) throw ContractError("hilbert structure needs at least one factor");
    for (Index d : dims)
      if (d < 2) throw ContractError("hilbert structure factors must have dimension >= 2");
    if (total_dim() > kMaxDim)
      throw ContractError("total dimension " + std::to_string(total_dim()) +
                          " exceeds dense-storage cap " + std::to_string(kMaxDim));
  }

  bool operator==(const HilbertStructure& o) const { return dims == o.dims; }
};

inline HilbertStructure bipartite(Index d_system, Index d_environment) {
  return HilbertStructure({d_system, d_environment});
}

inline HilbertStructure qubits(Index n) {
  return HilbertStructure(std::vector<Index>(static_cast<size_t>(n), 2));
}

}  // namespace prepsy
