#include "prepsy/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace prepsy::models {

using linalg::embed;
using linalg::kron;
using linalg::pauli;

ComplexMatrix toy_hamiltonian(const ToyModelParams& p) {
  const ComplexMatrix id = linalg::identity(2);
  ComplexMatrix h = ComplexMatrix::Zero(4, 4);
  h += p.omega_s * kron(0.5 * linalg::sigma_z(), id);
  h += p.omega_e * kron(id, 0.5 * linalg::sigma_z());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double lam = p.lambda[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (lam != 0.0) h += (0.25 * lam) * kron(pauli(i), pauli(j));
    }
  return h;
}

NvEnsembleParams NvEnsembleParams::uniform(Index n_spins, double xi, double gamma10) {
  NvEnsembleParams p;
  p.n_spins = n_spins;
  p.xi = RealMatrix::Constant(n_spins, n_spins, xi);
  p.xi.diagonal().setZero();
  p.gamma10 = RealVector::Constant(n_spins, gamma10);
  return p;
}

void NvEnsembleParams::validate() const {
  if (n_spins < 2) throw ContractError("nv ensemble needs at least 2 spins");
  if ((Index{1} << n_spins) > kMaxDim)
    throw ContractError("nv ensemble dimension exceeds dense-storage cap");
  if (xi.rows() != n_spins || xi.cols() != n_spins)
    throw ContractError("xi matrix must be n_spins x n_spins");
  if ((xi - xi.transpose()).cwiseAbs().maxCoeff() > 1e-14)
    throw ContractError("xi matrix must be symmetric");
  if (xi.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw ContractError("xi diagonal must be zero (no self coupling)");
  if (gamma10.size() != 0 && gamma10.size() != n_spins)
    throw ContractError("gamma10 must be empty or one rate per spin");
  if (gamma10.size() > 0 && gamma10.minCoeff() < 0.0)
    throw ContractError("gamma10 rates must be nonnegative");
}

bool NvEnsembleParams::adiabatic_ok() const {
  if (!g || !delta) return true;  // nothing to check without the raw numbers
  return std::abs(*delta) >= 10.0 * std::abs(*g);
}

namespace {

// sigma_+^i sigma_-^j + sigma_-^i sigma_+^j on the n-qubit space.
ComplexMatrix flip_flop(const HilbertStructure& s, Index i, Index j) {
  const ComplexMatrix sp = linalg::sigma_minus().adjoint();  // |1><0|
  const ComplexMatrix sm = linalg::sigma_minus();
  const ComplexMatrix a = embed(sp, s, i) * embed(sm, s, j);
  return a + a.adjoint();
}

}  // namespace

ComplexMatrix nv_pairwise_hamiltonian(const NvEnsembleParams& p) {
  p.validate();
  const HilbertStructure s = qubits(p.n_spins);
  ComplexMatrix h = ComplexMatrix::Zero(s.total_dim(), s.total_dim());
  for (Index i = 0; i < p.n_spins; ++i)
    for (Index j = i + 1; j < p.n_spins; ++j) {
      const double xi = p.xi(i, j);
      if (xi != 0.0) h += 4.0 * xi * flip_flop(s, i, j);
    }
  return h;
}

ComplexMatrix nv_collective_hamiltonian(const NvEnsembleParams& p) {
  p.validate();
  double xi = 0.0;
  bool first = true;
  for (Index i = 0; i < p.n_spins; ++i)
    for (Index j = i + 1; j < p.n_spins; ++j) {
      if (first) {
        xi = p.xi(i, j);
        first = false;
      } else if (std::abs(p.xi(i, j) - xi) > 1e-14 * std::max(1.0, std::abs(xi))) {
        throw ContractError("collective form requires uniform xi");
      }
    }
  const HilbertStructure s = qubits(p.n_spins);
  const Index dim = s.total_dim();
  ComplexMatrix jx = ComplexMatrix::Zero(dim, dim), jy = jx, jz = jx;
  for (Index i = 0; i < p.n_spins; ++i) {
    jx += embed(0.5 * linalg::sigma_x(), s, i);
    jy += embed(0.5 * linalg::sigma_y(), s, i);
    jz += embed(0.5 * linalg::sigma_z(), s, i);
  }
  const ComplexMatrix j2 = jx * jx + jy * jy + jz * jz;
  return 4.0 * xi * (j2 - jz * jz) -
         2.0 * xi * static_cast<double>(p.n_spins) * ComplexMatrix::Identity(dim, dim);
}

ComplexMatrix annihilation(Index dim) {
  if (dim < 2) throw ContractError("annihilation: mode dimension must be >= 2");
  ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
  for (Index n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

std::vector<LindbladChannel> nv_dissipators(const NvEnsembleParams& p,
                                            const HilbertStructure& structure,
                                            bool include_bus) {
  p.validate();
  structure.validate();
  const Index expected = include_bus ? p.n_spins + 1 : p.n_spins;
  if (structure.factors() != expected)
    throw ContractError(include_bus
                            ? "nv_dissipators: include_bus needs a structure with one bus factor "
                              "after the spins"
                            : "nv_dissipators: structure must have one factor per spin");
  for (Index i = 0; i < p.n_spins; ++i)
    if (structure.dims[static_cast<size_t>(i)] != 2)
      throw ContractError("nv_dissipators: spin factors must be qubits");
  if (include_bus && structure.dims.back() < 2)
    throw ContractError("nv_dissipators: bus factor must have dimension >= 2");

  std::vector<LindbladChannel> out;
  for (Index i = 0; i < p.n_spins; ++i) {
    const double rate = p.gamma10.size() > 0 ? p.gamma10(i) : 0.0;
    if (rate > 0.0) out.push_back({embed(linalg::sigma_minus(), structure, i), rate});
  }
  if (include_bus && p.kappa && *p.kappa > 0.0) {
    const Index bus_dim = structure.dims.back();
    out.push_back({embed(annihilation(bus_dim), structure, structure.factors() - 1), *p.kappa});
  }
  return out;
}

namespace {

long long binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (Index i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// Number of spin-j irreducible blocks in the n-fold qubit product.
long long j_degeneracy(Index n, double j) {
  const Index k = static_cast<Index>(std::llround(n / 2.0 - j));
  return binomial(n, k) - binomial(n, k - 1);
}

}  // namespace

LevelTable enumerate_levels(Index n_spins, double xi) {
  if (n_spins < 2) throw ContractError("enumerate_levels: need at least 2 spins");
  if (xi == 0.0) throw ContractError("enumerate_levels: xi must be nonzero");
  if ((Index{1} << n_spins) > kMaxDim)
    throw ContractError("enumerate_levels: dimension exceeds dense-storage cap");

  LevelTable table;
  table.n_spins = n_spins;

  // Work in exact integer units of xi: E/xi = (2j)(2j+2) - (2m)^2 - 2n.
  std::map<long long, Index> distinct;  // energy key -> total multiplicity
  const Index two_j_max = n_spins;
  for (Index two_j = two_j_max % 2; two_j <= two_j_max; two_j += 2) {
    const double j = two_j / 2.0;
    const long long deg_j = j_degeneracy(n_spins, j);
    if (deg_j <= 0) continue;
    for (Index two_m = two_j % 2; two_m <= two_j; two_m += 2) {
      const double m_abs = two_m / 2.0;
      const long long key = two_j * (two_j + 2) - two_m * two_m - 2 * n_spins;
      const Index mult = static_cast<Index>(deg_j) * (two_m > 0 ? 2 : 1);
      table.levels.push_back({j, m_abs, xi * static_cast<double>(key), mult});
      distinct[key] += mult;
    }
  }

  Index total = 0;
  for (const Level& lv : table.levels) total += lv.multiplicity;
  if (total != (Index{1} << n_spins))
    throw Error("enumerate_levels: multiplicities do not sum to 2^n");

  table.distinct_energy_count = static_cast<Index>(distinct.size());
  std::vector<long long> keys;
  keys.reserve(distinct.size());
  for (const auto& [k, mult] : distinct) keys.push_back(k);
  // Positive |E_h - E_k| values; |xi| folds a possible sign of the coupling.
  std::map<long long, char> gaps;
  for (size_t a = 0; a < keys.size(); ++a)
    for (size_t b = a + 1; b < keys.size(); ++b) gaps[keys[b] - keys[a]] = 1;
  for (const auto& [g, tag] : gaps)
    table.transition_energies.push_back(std::abs(xi) * static_cast<double>(g));
  std::sort(table.transition_energies.begin(), table.transition_energies.end());
  return table;
}

}  // namespace prepsy::models
