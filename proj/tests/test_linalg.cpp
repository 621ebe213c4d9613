#include <doctest.h>

#include <random>

#include "prepsy/linalg.hpp"

using namespace prepsy;
using namespace prepsy::linalg;

namespace {

ComplexMatrix random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(dist(gen), dist(gen));
  return m;
}

ComplexMatrix random_hermitian(Index n, unsigned seed) {
  const ComplexMatrix m = random_matrix(n, n, seed);
  return 0.5 * (m + m.adjoint()).eval();
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("pauli algebra") {
  const ComplexMatrix x = sigma_x(), y = sigma_y(), z = sigma_z();
  const Complex i(0, 1);
  CHECK(max_abs(x * y - i * z) == doctest::Approx(0.0));
  CHECK(max_abs(y * z - i * x) == doctest::Approx(0.0));
  CHECK(max_abs(z * x - i * y) == doctest::Approx(0.0));
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(pauli(a).trace()) == doctest::Approx(0.0));
    CHECK(max_abs(pauli(a) * pauli(a) - identity(2)) == doctest::Approx(0.0));
    CHECK(is_hermitian(pauli(a)));
  }
  CHECK(max_abs(sigma_minus() - ComplexMatrix{{0, 1}, {0, 0}}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(pauli(3), ContractError);
}

TEST_CASE("kron obeys the row-major index formula") {
  const ComplexMatrix a = random_matrix(2, 3, 11);
  const ComplexMatrix b = random_matrix(3, 2, 12);
  const ComplexMatrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  REQUIRE(k.cols() == 6);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index p = 0; p < 3; ++p)
        for (Index q = 0; q < 2; ++q)
          CHECK(std::abs(k(i * 3 + p, j * 2 + q) - a(i, j) * b(p, q)) < 1e-15);
}

TEST_CASE("kron of vectors matches matrix kron on projectors") {
  const ComplexVector u = random_matrix(2, 1, 21).col(0).eval();
  const ComplexVector v = random_matrix(3, 1, 22).col(0).eval();
  const ComplexVector w = kron(u, v);
  const ComplexMatrix lhs = w * w.adjoint();
  const ComplexMatrix rhs =
      kron(ComplexMatrix(u * u.adjoint()), ComplexMatrix(v * v.adjoint()));
  CHECK(max_abs(lhs - rhs) < 1e-14);
}

TEST_CASE("embed places an operator on the requested factor") {
  const HilbertStructure s = qubits(3);
  const ComplexMatrix z = sigma_z();
  const ComplexMatrix expected = kron(identity(2), kron(z, identity(2)));
  CHECK(max_abs(embed(z, s, 1) - expected) == doctest::Approx(0.0));
  CHECK(max_abs(embed(z, s, 0) - kron(z, identity(4))) == doctest::Approx(0.0));
  CHECK(max_abs(embed(z, s, 2) - kron(identity(4), z)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(embed(z, s, 3), ContractError);
  CHECK_THROWS_AS(embed(identity(3), s, 1), ContractError);
}

TEST_CASE("partial trace of a product factorizes") {
  const ComplexMatrix a = random_hermitian(2, 31);
  const ComplexMatrix b = random_hermitian(3, 32);
  const HilbertStructure s({2, 3});
  const ComplexMatrix ab = kron(a, b);
  CHECK(max_abs(partial_trace(ab, s, {0}) - b.trace() * a) < 1e-14);
  CHECK(max_abs(partial_trace(ab, s, {1}) - a.trace() * b) < 1e-14);
  const ComplexMatrix full = partial_trace(ab, s, {0, 1});
  CHECK(max_abs(full - ab) == doctest::Approx(0.0));
  const ComplexMatrix scalar = partial_trace(ab, s, {});
  REQUIRE(scalar.rows() == 1);
  CHECK(std::abs(scalar(0, 0) - ab.trace()) < 1e-13);
}

TEST_CASE("partial trace over the middle factor of three") {
  const ComplexMatrix a = random_hermitian(2, 41);
  const ComplexMatrix b = random_hermitian(2, 42);
  const ComplexMatrix c = random_hermitian(3, 43);
  const HilbertStructure s({2, 2, 3});
  const ComplexMatrix abc = kron(a, kron(b, c));
  const ComplexMatrix kept = partial_trace(abc, s, {0, 2});
  CHECK(max_abs(kept - b.trace() * kron(a, c)) < 1e-13);
  CHECK_THROWS_AS(partial_trace(abc, s, {2, 0}), ContractError);   // not ascending
  CHECK_THROWS_AS(partial_trace(abc, s, {0, 0}), ContractError);   // duplicate
}

TEST_CASE("partial trace preserves trace and hermiticity") {
  const ComplexMatrix m = random_hermitian(12, 51);
  const HilbertStructure s({2, 2, 3});
  for (const std::vector<Index>& keep : {std::vector<Index>{0}, {1}, {2}, {0, 1}, {1, 2}}) {
    const ComplexMatrix r = partial_trace(m, s, keep);
    CHECK(std::abs(r.trace() - m.trace()) < 1e-12);
    CHECK(is_hermitian(r, 1e-12));
  }
}

TEST_CASE("hermitian eigensolver against the 2x2 closed form") {
  // Oracle: [[1, 2-i], [2+i, -1]] has eigenvalues +-sqrt(1 + |2+i|^2) = +-sqrt(6).
  ComplexMatrix m(2, 2);
  m << Complex(1, 0), Complex(2, -1), Complex(2, 1), Complex(-1, 0);
  const EigResult eig = herm_eig(m);
  const double root = std::sqrt(6.0);
  CHECK(eig.values(0) == doctest::Approx(-root).epsilon(1e-12));
  CHECK(eig.values(1) == doctest::Approx(root).epsilon(1e-12));
}

TEST_CASE("hermitian eigensolver against the tridiagonal 3x3 closed form") {
  // Oracle: tridiagonal (2 on diagonal, 1 off) has eigenvalues 2 + 2 cos(k pi / 4).
  ComplexMatrix m(3, 3);
  m << 2, 1, 0, 1, 2, 1, 0, 1, 2;
  const EigResult eig = herm_eig(m);
  CHECK(eig.values(0) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
  CHECK(eig.values(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(eig.values(2) == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("herm_eig reconstructs and rejects") {
  const ComplexMatrix m = random_hermitian(6, 61);
  const EigResult eig = herm_eig(m);
  const ComplexMatrix rebuilt =
      eig.vectors * eig.values.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  CHECK(max_abs(rebuilt - m) < 1e-12);
  CHECK(max_abs(eig.vectors.adjoint() * eig.vectors - identity(6)) < 1e-12);
  for (Index i = 1; i < 6; ++i) CHECK(eig.values(i - 1) <= eig.values(i));
  ComplexMatrix bad = m;
  bad(0, 1) += Complex(0.1, 0.1);
  CHECK_THROWS_AS(herm_eig(bad), ContractError);
}

TEST_CASE("matrix exponential of a Pauli rotation") {
  // Oracle: exp(-i theta sigma_x) = cos(theta) I - i sin(theta) sigma_x.
  const double theta = 0.7;
  const ComplexMatrix u = expm_herm_factor(sigma_x(), Complex(0, -theta));
  const ComplexMatrix expected =
      std::cos(theta) * identity(2) - Complex(0, 1) * std::sin(theta) * sigma_x();
  CHECK(max_abs(u - expected) < 1e-14);
  CHECK(max_abs(u * u.adjoint() - identity(2)) < 1e-14);
  CHECK(max_abs(expm_herm_factor(random_hermitian(4, 71), Complex(0, 0)) - identity(4)) <
        1e-13);
}

TEST_CASE("commutators") {
  CHECK(max_abs(commutator(sigma_x(), sigma_y()) - Complex(0, 2) * sigma_z()) < 1e-15);
  CHECK(max_abs(anticommutator(sigma_x(), sigma_x()) - 2.0 * identity(2)) < 1e-15);
  CHECK(max_abs(anticommutator(sigma_x(), sigma_y())) == doctest::Approx(0.0));
}

}  // TEST_SUITE
