#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "qkdmm/conic.hpp"

using qkdmm::conic::BlockVec;
using qkdmm::conic::Prepared;
using qkdmm::conic::Problem;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return 0.5 * (m + m.transpose()).eval();
}

Eigen::MatrixXd random_density(int n, std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::MatrixXd rho = a * a.transpose();
  return rho / rho.trace();
}

Problem trace_only_problem(const std::vector<int>& dims) {
  Problem p;
  p.dims = dims;
  p.eq_ops.push_back(BlockVec::identity(dims));
  p.eq_rhs = Eigen::VectorXd::Ones(1);
  p.eq_psd = {false};
  p.ineq_rhs = Eigen::VectorXd(0);
  return p;
}

double feasibility_violation(const Problem& p, const BlockVec& sigma) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.eq_ops.size(); ++i)
    worst = std::max(worst, std::abs(p.eq_ops[i].dot(sigma) - p.eq_rhs(i)));
  for (std::size_t k = 0; k < p.ineq_ops.size(); ++k)
    worst = std::max(worst, std::max(0.0, p.ineq_rhs(k) - p.ineq_ops[k].dot(sigma)));
  worst = std::max(worst, std::max(0.0, -sigma.min_eigenvalue()));
  return worst;
}

}  // namespace

TEST_CASE("trace-normalized minimum equals smallest eigenvalue") {
  std::mt19937 rng(7101);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<int> dims = {2 + trial % 3, 3, 1};
    Problem p = trace_only_problem(dims);
    BlockVec c;
    double lam = std::numeric_limits<double>::infinity();
    for (int d : dims) {
      c.m.push_back(random_symmetric(d, rng, 1.0 + trial));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.m.back(),
                                                        Eigen::EigenvaluesOnly);
      lam = std::min(lam, es.eigenvalues().minCoeff());
    }
    Prepared prep = qkdmm::conic::prepare(p);
    REQUIRE(prep.ok);
    auto res = qkdmm::conic::minimize(prep, c);
    REQUIRE(res.status == "ok");
    REQUIRE(res.value == Catch::Approx(lam).margin(1e-7 * (1.0 + std::abs(lam))));
    REQUIRE(res.cert <= res.value + 1e-9);
    REQUIRE(res.cert >= lam - 1e-6 * (1.0 + std::abs(lam)));
    REQUIRE(feasibility_violation(p, res.sigma) < 1e-8);
  }
}

TEST_CASE("identity objective gives one, negated projector gives minus one") {
  std::vector<int> dims = {3, 2};
  Problem p = trace_only_problem(dims);

  BlockVec c_id = BlockVec::identity(dims);
  auto res_id = qkdmm::conic::minimize(qkdmm::conic::prepare(p), c_id);
  REQUIRE(res_id.value == Catch::Approx(1.0).margin(1e-8));
  REQUIRE(res_id.cert == Catch::Approx(1.0).margin(1e-7));

  BlockVec c_proj = BlockVec::zero(dims);
  c_proj.m[0](0, 0) = -1.0;
  c_proj.m[0](1, 1) = -1.0;
  auto res_proj = qkdmm::conic::minimize(qkdmm::conic::prepare(p), c_proj);
  REQUIRE(res_proj.value == Catch::Approx(-1.0).margin(1e-8));
  REQUIRE(res_proj.cert == Catch::Approx(-1.0).margin(1e-7));
}

TEST_CASE("equality-constrained instances built around a known feasible point") {
  std::mt19937 rng(7102);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> dims = {3, 4};
    Problem p = trace_only_problem(dims);

    BlockVec sigma0;
    for (int d : dims) sigma0.m.push_back(random_density(d, rng));
    double w0 = 0.3 + 0.4 * std::uniform_real_distribution<double>(0, 1)(rng);
    sigma0.m[0] *= w0;
    sigma0.m[1] *= 1.0 - w0;

    for (int extra = 0; extra < 3; ++extra) {
      BlockVec g;
      for (int d : dims) g.m.push_back(random_symmetric(d, rng));
      double rhs = g.dot(sigma0);
      p.eq_ops.push_back(g);
      p.eq_rhs.conservativeResize(p.eq_rhs.size() + 1);
      p.eq_rhs(p.eq_rhs.size() - 1) = rhs;
      p.eq_psd.push_back(false);
    }

    BlockVec c;
    for (int d : dims) c.m.push_back(random_symmetric(d, rng, 2.0));

    Prepared prep = qkdmm::conic::prepare(p);
    REQUIRE(prep.ok);
    auto res = qkdmm::conic::minimize(prep, c);
    REQUIRE(res.status == "ok");
    REQUIRE(res.value <= c.dot(sigma0) + 1e-7);
    REQUIRE(res.cert <= res.value + 1e-9);
    REQUIRE(res.cert <= c.dot(sigma0) + 1e-9);
    REQUIRE(res.gap < 1e-6 * (1.0 + std::abs(res.value)));
    REQUIRE(feasibility_violation(p, res.sigma) < 1e-7);
  }
}

TEST_CASE("diagonal instance with one coverage inequality matches the linear program") {
  // With diagonal objective and a diagonal projector, the matrix problem
  // collapses to: min c.p subject to p >= 0, sum p = 1, sum_{i in S} p_i >= b.
  auto lp_value = [](const std::vector<double>& c, const std::vector<int>& in_s,
                     double b) {
    double best_in = std::numeric_limits<double>::infinity();
    double best_all = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (in_s[i]) best_in = std::min(best_in, c[i]);
      best_all = std::min(best_all, c[i]);
    }
    if (best_all == best_in) return best_all;
    return b * best_in + (1.0 - b) * best_all;
  };

  std::vector<int> dims = {4};
  std::vector<double> cd = {0.9, -0.4, 0.3, 1.7};
  std::vector<int> in_s = {1, 0, 1, 0};  // cheapest entry lies outside S
  const double b = 0.35;

  Problem p = trace_only_problem(dims);
  BlockVec proj = BlockVec::zero(dims);
  for (int i = 0; i < 4; ++i) proj.m[0](i, i) = in_s[i];
  p.ineq_ops.push_back(proj);
  p.ineq_rhs = Eigen::VectorXd::Constant(1, b);

  BlockVec c = BlockVec::zero(dims);
  for (int i = 0; i < 4; ++i) c.m[0](i, i) = cd[i];

  auto res = qkdmm::conic::minimize(qkdmm::conic::prepare(p), c);
  REQUIRE(res.status == "ok");
  REQUIRE(res.value == Catch::Approx(lp_value(cd, in_s, b)).margin(1e-7));
  REQUIRE(res.cert <= res.value + 1e-9);
  REQUIRE(res.gap < 1e-6);

  // Inactive inequality: the cheapest entry already lies inside S.
  std::vector<int> in_s2 = {0, 1, 1, 0};
  BlockVec proj2 = BlockVec::zero(dims);
  for (int i = 0; i < 4; ++i) proj2.m[0](i, i) = in_s2[i];
  p.ineq_ops[0] = proj2;
  auto res2 = qkdmm::conic::minimize(qkdmm::conic::prepare(p), c);
  REQUIRE(res2.value == Catch::Approx(lp_value(cd, in_s2, b)).margin(1e-7));
}

TEST_CASE("two-block family cross-checked against a pure-state grid search") {
  // Fixed weights per block plus one generic inequality keep the per-block
  // optimizers rank one, so a grid over pure states brackets the true value.
  std::vector<int> dims = {2, 2};
  const double w1 = 0.55, w2 = 0.45, b = 0.30;

  Problem p = trace_only_problem(dims);
  BlockVec block_weight = BlockVec::zero(dims);
  block_weight.m[0].setIdentity();
  p.eq_ops.push_back(block_weight);
  p.eq_rhs.conservativeResize(2);
  p.eq_rhs(1) = w1;
  p.eq_psd.push_back(false);

  BlockVec pi = BlockVec::zero(dims);
  pi.m[0] << 0.8, 0.3, 0.3, 0.2;
  pi.m[1] << 0.5, -0.2, -0.2, 0.6;
  p.ineq_ops.push_back(pi);
  p.ineq_rhs = Eigen::VectorXd::Constant(1, b);

  BlockVec c = BlockVec::zero(dims);
  c.m[0] << 1.1, 0.4, 0.4, -0.7;
  c.m[1] << 0.2, -0.9, -0.9, 0.5;

  auto res = qkdmm::conic::minimize(qkdmm::conic::prepare(p), c);
  REQUIRE(res.status == "ok");
  REQUIRE(res.gap < 1e-6);

  const int steps = 100;  // 10^4 grid points
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps; ++j) {
      const double t1 = M_PI * i / steps, t2 = M_PI * j / steps;
      Eigen::Vector2d v1(std::cos(t1), std::sin(t1)), v2(std::cos(t2), std::sin(t2));
      Eigen::Matrix2d r1 = w1 * v1 * v1.transpose();
      Eigen::Matrix2d r2 = w2 * v2 * v2.transpose();
      const double cover = (pi.m[0].array() * r1.array()).sum() +
                           (pi.m[1].array() * r2.array()).sum();
      if (cover < b) continue;
      grid_min = std::min(grid_min, (c.m[0].array() * r1.array()).sum() +
                                        (c.m[1].array() * r2.array()).sum());
    }
  REQUIRE(std::isfinite(grid_min));
  REQUIRE(res.value <= grid_min + 1e-8);   // the grid points are all feasible
  REQUIRE(res.value >= grid_min - 0.05);   // grid resolution bracket
  REQUIRE(res.cert <= grid_min + 1e-8);
}

TEST_CASE("zero-probability rows cut the variable down to their joint kernel") {
  std::vector<int> dims = {3};
  Problem p = trace_only_problem(dims);

  BlockVec kill = BlockVec::zero(dims);
  kill.m[0](0, 0) = 1.0;
  p.eq_ops.push_back(kill);
  p.eq_rhs.conservativeResize(2);
  p.eq_rhs(1) = 0.0;
  p.eq_psd.push_back(true);

  Prepared prep = qkdmm::conic::prepare(p);
  REQUIRE(prep.ok);
  REQUIRE(prep.dims == std::vector<int>{2});

  BlockVec c = BlockVec::zero(dims);
  c.m[0] << 5.0, 1.0, 2.0, 1.0, 0.4, -0.3, 2.0, -0.3, 0.9;
  auto res = qkdmm::conic::minimize(prep, c);
  REQUIRE(res.status == "ok");

  Eigen::Matrix2d sub = c.m[0].block(1, 1, 2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sub, Eigen::EigenvaluesOnly);
  REQUIRE(res.value == Catch::Approx(es.eigenvalues().minCoeff()).margin(1e-8));
  REQUIRE(std::abs(res.sigma.m[0](0, 0)) < 1e-12);
  REQUIRE(res.sigma.m[0].rows() == 3);  // lifted back to the original space

  SECTION("face pinned to a single pure state") {
    Eigen::Vector3d psi(0.6, 0.0, 0.8);
    BlockVec pin = BlockVec::zero(dims);
    pin.m[0] = Eigen::Matrix3d::Identity() - psi * psi.transpose();
    Problem q = trace_only_problem(dims);
    q.eq_ops.push_back(pin);
    q.eq_rhs.conservativeResize(2);
    q.eq_rhs(1) = 0.0;
    q.eq_psd.push_back(true);
    Prepared qp = qkdmm::conic::prepare(q);
    REQUIRE(qp.ok);
    REQUIRE(qp.dims == std::vector<int>{1});
    auto qres = qkdmm::conic::minimize(qp, c);
    const double expect = psi.dot(c.m[0] * psi);
    REQUIRE(qres.value == Catch::Approx(expect).margin(1e-9));
    REQUIRE(qres.cert == Catch::Approx(expect).margin(1e-7));
  }
}

TEST_CASE("dependent equality rows are pruned, inconsistent ones are flagged") {
  std::vector<int> dims = {3};
  std::mt19937 rng(7103);
  BlockVec g;
  g.m.push_back(random_symmetric(3, rng));

  Problem p = trace_only_problem(dims);
  p.eq_ops.push_back(g);
  p.eq_ops.push_back(g);  // exact duplicate
  p.eq_rhs.conservativeResize(3);
  p.eq_rhs(1) = 0.4;
  p.eq_rhs(2) = 0.4;
  p.eq_psd.insert(p.eq_psd.end(), {false, false});

  Prepared prep = qkdmm::conic::prepare(p);
  REQUIRE(prep.ok);
  REQUIRE(prep.kept_eq == std::vector<int>{0, 1});

  p.eq_rhs(2) = 0.7;  // same row, different value
  Prepared bad = qkdmm::conic::prepare(p);
  REQUIRE_FALSE(bad.ok);
  REQUIRE(bad.message.find("inconsistent") != std::string::npos);

  Problem tr2 = trace_only_problem(dims);
  tr2.eq_ops.push_back(tr2.eq_ops[0]);
  tr2.eq_rhs.conservativeResize(2);
  tr2.eq_rhs(1) = 2.0;
  tr2.eq_psd.push_back(false);
  REQUIRE_FALSE(qkdmm::conic::prepare(tr2).ok);
}

TEST_CASE("inequalities that vanish on the face but demand weight are rejected") {
  std::vector<int> dims = {2};
  Problem p = trace_only_problem(dims);
  BlockVec kill = BlockVec::zero(dims);
  kill.m[0](0, 0) = 1.0;
  p.eq_ops.push_back(kill);
  p.eq_rhs.conservativeResize(2);
  p.eq_rhs(1) = 0.0;
  p.eq_psd.push_back(true);

  BlockVec pi = BlockVec::zero(dims);
  pi.m[0](0, 0) = 1.0;  // supported only on the removed direction
  p.ineq_ops.push_back(pi);
  p.ineq_rhs = Eigen::VectorXd::Constant(1, 0.2);

  Prepared prep = qkdmm::conic::prepare(p);
  REQUIRE_FALSE(prep.ok);
  REQUIRE(prep.message.find("vanished") != std::string::npos);
}

TEST_CASE("certificate stays below every feasible value under active inequalities") {
  std::mt19937 rng(7104);
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<int> dims = {3, 2};
    Problem p = trace_only_problem(dims);

    BlockVec sigma0;
    for (int d : dims) sigma0.m.push_back(random_density(d, rng));
    sigma0.m[0] *= 0.6;
    sigma0.m[1] *= 0.4;

    BlockVec g;
    for (int d : dims) g.m.push_back(random_symmetric(d, rng));
    p.eq_ops.push_back(g);
    p.eq_rhs.conservativeResize(2);
    p.eq_rhs(1) = g.dot(sigma0);
    p.eq_psd.push_back(false);

    // Inequality tight at sigma0 so the optimum pushes against it.
    BlockVec pi;
    for (int d : dims) {
      Eigen::MatrixXd a = random_symmetric(d, rng);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
      pi.m.push_back(es.eigenvectors() *
                     es.eigenvalues().cwiseAbs().asDiagonal() *
                     es.eigenvectors().transpose());
    }
    p.ineq_ops.push_back(pi);
    p.ineq_rhs = Eigen::VectorXd::Constant(1, pi.dot(sigma0));

    BlockVec c;
    for (int d : dims) c.m.push_back(random_symmetric(d, rng));

    auto res = qkdmm::conic::minimize(qkdmm::conic::prepare(p), c);
    REQUIRE(res.status == "ok");
    REQUIRE(res.cert <= c.dot(sigma0) + 1e-9);
    REQUIRE(res.cert <= res.value + 1e-9);
    REQUIRE(res.gap < 1e-5 * (1.0 + std::abs(res.value)));
  }
}
