#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <complex>
#include <random>

#include "qkdmm/block_operator.hpp"
#include "qkdmm/fock.hpp"

using namespace qkdmm;

namespace {

Eigen::MatrixXcd random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = std::complex<double>(g(rng), g(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
  return q;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = g(rng);
  return a;
}

}  // namespace

TEST_CASE("sector dimensions match the stars-and-bars count") {
  CHECK(fock::sector_dimension(4, 0) == 1);
  CHECK(fock::sector_dimension(4, 1) == 4);
  CHECK(fock::sector_dimension(4, 2) == 10);
  CHECK(fock::sector_dimension(8, 2) == 36);
  CHECK(fock::sector_dimension(8, 3) == 120);
  CHECK(fock::sector_dimension(8, 6) == 1716);
  CHECK(fock::sector_dimension(1, 5) == 1);
  CHECK(fock::binomial_u64(10, 5) == 252);
  CHECK(fock::composition_count(0, 0) == 1);
  CHECK(fock::composition_count(3, 0) == 0);
  CHECK(fock::composition_count(-1, 2) == 0);
}

TEST_CASE("sector enumeration is descending lexicographic and rank inverts it") {
  fock::SectorBasis basis(3, 2);
  REQUIRE(basis.dim() == 6);
  CHECK(basis.state(0) == fock::OccVec{2, 0, 0});
  CHECK(basis.state(1) == fock::OccVec{1, 1, 0});
  CHECK(basis.state(2) == fock::OccVec{1, 0, 1});
  CHECK(basis.state(3) == fock::OccVec{0, 2, 0});
  CHECK(basis.state(4) == fock::OccVec{0, 1, 1});
  CHECK(basis.state(5) == fock::OccVec{0, 0, 2});

  // One-photon sector lists modes in natural order.
  fock::SectorBasis one(4, 1);
  for (int m = 0; m < 4; ++m) {
    fock::OccVec e(4, 0);
    e[m] = 1;
    CHECK(one.rank(e) == m);
  }

  for (int modes : {2, 4, 5})
    for (int n : {0, 1, 3, 4}) {
      fock::SectorBasis b(modes, n);
      REQUIRE(b.dim() == fock::sector_dimension(modes, n));
      for (int i = 0; i < b.dim(); ++i) CHECK(b.rank(b.state(i)) == i);
    }

  CHECK_THROWS_AS(basis.rank(fock::OccVec{1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(basis.rank(fock::OccVec{3, -1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(basis.rank(fock::OccVec{2, 0}), std::invalid_argument);
}

TEST_CASE("mode layout indexing") {
  fock::ModeLayout layout{2};
  CHECK(layout.total_modes() == 4);
  CHECK(layout.index(0, 0) == 0);
  CHECK(layout.index(1, 1) == 3);
  CHECK_THROWS_AS(layout.index(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(layout.index(0, 2), std::invalid_argument);
}

TEST_CASE("balanced splitter amplitudes on one and two photons") {
  Eigen::MatrixXd t(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  t << s, s, s, -s;

  Eigen::MatrixXd t1 = fock::sym_power<double>(t, 1);
  CHECK((t1 - t).cwiseAbs().maxCoeff() < 1e-14);

  // Two photons into the first input: amplitudes (a^2, sqrt(2) a c, c^2) on
  // outputs ordered (0,2),(1,1),(2,0).
  Eigen::MatrixXd t2 = fock::sym_power<double>(t, 2);
  fock::SectorBasis b(2, 2);
  const int col = b.rank({2, 0});
  CHECK(t2(b.rank({2, 0}), col) == Catch::Approx(0.5).margin(1e-14));
  CHECK(t2(b.rank({1, 1}), col) == Catch::Approx(s).margin(1e-14));
  CHECK(t2(b.rank({0, 2}), col) == Catch::Approx(0.5).margin(1e-14));

  // One photon in each input interferes: the (1,1) output amplitude vanishes.
  const int col11 = b.rank({1, 1});
  CHECK(std::abs(t2(b.rank({1, 1}), col11)) < 1e-14);
  CHECK(t2(b.rank({2, 0}), col11) == Catch::Approx(s).margin(1e-14));
  CHECK(t2(b.rank({0, 2}), col11) == Catch::Approx(-s).margin(1e-14));
}

TEST_CASE("sym_power is multiplicative and adjoint-compatible on general maps") {
  std::mt19937_64 rng(7101);
  for (int n : {2, 3}) {
    Eigen::MatrixXd a = random_matrix(4, 4, rng);
    Eigen::MatrixXd b = random_matrix(4, 4, rng);
    Eigen::MatrixXd lhs = fock::sym_power<double>(Eigen::MatrixXd(a * b), n);
    Eigen::MatrixXd rhs = fock::sym_power<double>(a, n) * fock::sym_power<double>(b, n);
    const double scale = rhs.cwiseAbs().maxCoeff();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * scale);

    Eigen::MatrixXd at = fock::sym_power<double>(Eigen::MatrixXd(a.transpose()), n);
    Eigen::MatrixXd ta = fock::sym_power<double>(a, n).transpose();
    CHECK((at - ta).cwiseAbs().maxCoeff() < 1e-12 * at.cwiseAbs().maxCoeff());
  }

  // Rectangular map composed with a square one.
  Eigen::MatrixXd wide = random_matrix(5, 3, rng);
  Eigen::MatrixXd sq = random_matrix(3, 3, rng);
  Eigen::MatrixXd lhs = fock::sym_power<double>(Eigen::MatrixXd(wide * sq), 3);
  Eigen::MatrixXd rhs = fock::sym_power<double>(wide, 3) * fock::sym_power<double>(sq, 3);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("lifting a unitary stays unitary; non-isometries are rejected") {
  std::mt19937_64 rng(4242);
  Eigen::MatrixXcd u = random_unitary(4, rng);
  for (int n : {2, 3}) {
    Eigen::MatrixXcd un = fock::lift_mode_map(u, n);
    const int d = fock::sector_dimension(4, n);
    REQUIRE(un.rows() == d);
    Eigen::MatrixXcd gram = un.adjoint() * un;
    CHECK((gram - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-11);
  }
  CHECK_THROWS_AS(fock::lift_mode_map(2.0 * Eigen::MatrixXcd::Identity(3, 3), 2),
                  std::invalid_argument);
}

TEST_CASE("sym_power edge cases") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd s0 = fock::sym_power<double>(a, 0);
  REQUIRE(s0.rows() == 1);
  CHECK(s0(0, 0) == 1.0);
  CHECK_THROWS_AS(fock::sym_power<double>(a, -1), std::invalid_argument);

  // Sym of identity is identity in every sector.
  Eigen::MatrixXd s3 = fock::sym_power<double>(a, 3);
  CHECK((s3 - Eigen::MatrixXd::Identity(s3.rows(), s3.cols())).cwiseAbs().maxCoeff() < 1e-14);

  // Sym of a diagonal map is diagonal with monomial entries.
  Eigen::MatrixXd d = Eigen::Vector3d(0.5, 0.25, 1.0).asDiagonal();
  Eigen::MatrixXd d2 = fock::sym_power<double>(d, 2);
  fock::SectorBasis b(3, 2);
  for (int i = 0; i < b.dim(); ++i) {
    double expect = 1.0;
    for (int m = 0; m < 3; ++m) expect *= std::pow(d(m, m), b.state(i)[m]);
    CHECK(d2(i, i) == Catch::Approx(expect).margin(1e-14));
    for (int j = 0; j < b.dim(); ++j)
      if (i != j) CHECK(std::abs(d2(i, j)) < 1e-14);
  }
}

TEST_CASE("alice_kron shapes and trace factorization") {
  std::mt19937_64 rng(99);
  Eigen::Matrix2d a;
  a << 0.7, 0.2, 0.2, -0.1;
  Eigen::MatrixXd b = random_matrix(5, 5, rng);
  b = (0.5 * (b + b.transpose())).eval();
  Eigen::MatrixXd k = fock::alice_kron<double>(a, b);
  REQUIRE(k.rows() == 10);
  CHECK(k.trace() == Catch::Approx(a.trace() * b.trace()).margin(1e-12));
  CHECK((k.block(0, 0, 5, 5) - a(0, 0) * b).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((k.block(5, 0, 5, 5) - a(1, 0) * b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("block operators: algebra, pairing, extremal eigenvalue") {
  op::BlockOperator x(op::Scope::bob), y(op::Scope::bob);
  Eigen::Matrix2d m2;
  m2 << 1.0, 0.25, 0.25, 0.5;
  x.set_sector(1, m2);
  x.set_sector(2, Eigen::MatrixXd::Identity(3, 3));
  y.set_sector(1, Eigen::Matrix2d::Identity());

  op::BlockOperator s = x + y;
  CHECK(s.sector(1)(0, 0) == Catch::Approx(2.0));
  CHECK(s.sector(2)(0, 0) == Catch::Approx(1.0));
  CHECK(s.trace() == Catch::Approx(x.trace() + y.trace()));
  CHECK(x.inner(y) == Catch::Approx(1.5));

  op::BlockOperator z = 2.0 * x;
  CHECK(z.trace() == Catch::Approx(2.0 * x.trace()));

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m2, Eigen::EigenvaluesOnly);
  CHECK(x.min_eigenvalue() == Catch::Approx(std::min(es.eigenvalues().minCoeff(), 1.0)));

  CHECK_THROWS_AS(x.sector(5), std::out_of_range);
  Eigen::MatrixXd skew(2, 2);
  skew << 0, 1, -1, 0;
  op::BlockOperator bad(op::Scope::bob);
  CHECK_THROWS_AS(bad.set_sector(0, skew), std::invalid_argument);

  op::BlockOperator j(op::Scope::joint);
  CHECK_THROWS_AS(x.inner(j), std::invalid_argument);
}

TEST_CASE("block operators: flags and joint lift") {
  op::BlockOperator bob(op::Scope::bob);
  bob.set_sector(1, Eigen::Matrix2d::Identity());
  Eigen::VectorXd flags(2);
  flags << 0.25, -0.5;
  bob.set_flag_diag(flags);
  CHECK(bob.flag_count() == 2);
  CHECK(bob.trace() == Catch::Approx(2.0 - 0.25));
  CHECK(bob.min_eigenvalue() == Catch::Approx(-0.5));

  Eigen::Matrix2d a;
  a << 0.5, 0.0, 0.0, 0.25;
  op::BlockOperator lifted = op::alice_tensor(a, bob);
  REQUIRE(lifted.joint());
  REQUIRE(lifted.flag_count() == 2);
  CHECK(lifted.sector(1).rows() == 4);
  CHECK(lifted.flag_alice()[0](0, 0) == Catch::Approx(0.125));
  CHECK(lifted.flag_alice()[1](1, 1) == Catch::Approx(-0.125));
  CHECK(lifted.trace() == Catch::Approx(a.trace() * bob.trace()).margin(1e-12));

  CHECK_THROWS_AS(op::alice_tensor(a, lifted), std::invalid_argument);
  CHECK_THROWS_AS(lifted.set_flag_diag(flags), std::invalid_argument);
}
