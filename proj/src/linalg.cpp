#include "prepsy/linalg.hpp"

#include <algorithm>

namespace prepsy::linalg {

ComplexMatrix identity(Index n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix sigma_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ComplexMatrix sigma_y() {
  ComplexMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

ComplexMatrix sigma_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

ComplexMatrix sigma_minus() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = 1;
  return m;
}

ComplexMatrix pauli(int axis) {
  switch (axis) {
    case 0: return sigma_x();
    case 1: return sigma_y();
    case 2: return sigma_z();
    default: throw ContractError("pauli axis must be 0, 1 or 2");
  }
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const Index ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  if (ra * rb > kMaxDim || ca * cb > kMaxDim)
    throw ContractError("kron result exceeds dense-storage cap");
  ComplexMatrix out(ra * rb, ca * cb);
  for (Index i = 0; i < ra; ++i)
    for (Index j = 0; j < ca; ++j)
      out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

ComplexMatrix embed(const ComplexMatrix& op, const HilbertStructure& structure, Index k) {
  structure.validate();
  if (k < 0 || k >= structure.factors()) throw ContractError("embed: factor index out of range");
  if (op.rows() != op.cols() || op.rows() != structure.dims[static_cast<size_t>(k)])
    throw ContractError("embed: operator dimension does not match factor");
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (Index f = 0; f < structure.factors(); ++f) {
    const Index d = structure.dims[static_cast<size_t>(f)];
    out = kron(out, f == k ? op : ComplexMatrix(ComplexMatrix::Identity(d, d)));
  }
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, const HilbertStructure& structure,
                            const std::vector<Index>& keep) {
  structure.validate();
  const Index dim = structure.total_dim();
  if (m.rows() != dim || m.cols() != dim)
    throw ContractError("partial_trace: matrix does not match structure dimension");
  for (size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= structure.factors())
      throw ContractError("partial_trace: keep index out of range");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw ContractError("partial_trace: keep set must be ascending without duplicates");
  }

  const Index nf = structure.factors();
  std::vector<char> kept(static_cast<size_t>(nf), 0);
  for (Index k : keep) kept[static_cast<size_t>(k)] = 1;

  Index keep_dim = 1;
  for (Index f = 0; f < nf; ++f)
    if (kept[static_cast<size_t>(f)]) keep_dim *= structure.dims[static_cast<size_t>(f)];

  // Split each full row-major index into its kept and traced parts once.
  std::vector<Index> keep_part(static_cast<size_t>(dim)), trace_part(static_cast<size_t>(dim));
  for (Index r = 0; r < dim; ++r) {
    Index rest = r, kp = 0, tp = 0, kacc = 1, tacc = 1;
    for (Index f = nf - 1; f >= 0; --f) {
      const Index d = structure.dims[static_cast<size_t>(f)];
      const Index idx = rest % d;
      rest /= d;
      if (kept[static_cast<size_t>(f)]) {
        kp += idx * kacc;
        kacc *= d;
      } else {
        tp += idx * tacc;
        tacc *= d;
      }
    }
    keep_part[static_cast<size_t>(r)] = kp;
    trace_part[static_cast<size_t>(r)] = tp;
  }

  ComplexMatrix out = ComplexMatrix::Zero(keep_dim, keep_dim);
  for (Index r = 0; r < dim; ++r)
    for (Index c = 0; c < dim; ++c)
      if (trace_part[static_cast<size_t>(r)] == trace_part[static_cast<size_t>(c)])
        out(keep_part[static_cast<size_t>(r)], keep_part[static_cast<size_t>(c)]) += m(r, c);
  return out;
}

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tol;
}

void require_hermitian(const ComplexMatrix& m, const char* what, double tol) {
  if (m.rows() != m.cols())
    throw ContractError(std::string(what) + ": matrix is not square");
  const double dev = max_abs(m - m.adjoint());
  if (dev > tol)
    throw ContractError(std::string(what) + ": matrix deviates from Hermitian by " +
                        std::to_string(dev));
}

EigResult herm_eig(const ComplexMatrix& m) {
  require_hermitian(m, "herm_eig");
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("herm_eig: eigensolver failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix expm_herm_factor(const ComplexMatrix& h, Complex scale) {
  EigResult eig = herm_eig(h);
  ComplexVector w(eig.values.size());
  for (Index i = 0; i < w.size(); ++i) w(i) = std::exp(scale * eig.values(i));
  return eig.vectors * w.asDiagonal() * eig.vectors.adjoint();
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw ContractError("commutator: dimension mismatch");
  return a * b - b * a;
}

ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw ContractError("anticommutator: dimension mismatch");
  return a * b + b * a;
}

}  // namespace prepsy::linalg
