#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qkdmm/block_operator.hpp"
#include "qkdmm/channel.hpp"
#include "qkdmm/conic.hpp"
#include "qkdmm/detector.hpp"
#include "qkdmm/fock.hpp"
#include "qkdmm/photon_bounds.hpp"
#include "qkdmm/squasher.hpp"

namespace qkdmm::keyrate {

// Certified lower bound on the asymptotic secret fraction. The objective is
// the conditional-entropy term f(rho) = D(G(rho) || Z(G(rho))), minimized
// over all states compatible with the observation table (and, in flagged
// mode, with the photon-number weight bounds). Frank-Wolfe iterations drive
// the primal down while every iterate yields the rigorous bound
//   beta = f(rho) - <grad f(rho), rho> + min_sigma <grad f(rho), sigma>,
// whose inner minimum is itself certified by the conic solver's dual. The
// reported key rate subtracts the error-correction leakage
//   leak = p_pass * f_ec * h(e_sift).

inline double binary_entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

namespace detail {

inline Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

inline Eigen::MatrixXd log2_floor(const Eigen::MatrixXd& m, double eps) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::ArrayXd lam = es.eigenvalues().array().max(eps);
  Eigen::VectorXd l = (lam.log() / std::log(2.0)).matrix();
  return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
}

// sum_i lam_i * log2(max(lam_i, eps)) over the spectrum of a symmetric block
inline double plogp_floor(const Eigen::MatrixXd& m, double eps) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    s += lam * std::log2(std::max(lam, eps));
  }
  return s;
}

}  // namespace detail

// Assembled minimization instance. Blocks [0, joint_blocks) are the photon
// sectors (Alice qubit tensored with Bob's sector), the remainder are the
// 2x2 Alice-conditional flag blocks. kraus[b] is empty when the key map
// sends block b to zero (non-kept flags; sectors with no kept click weight
// still carry their Kraus factor, which may vanish numerically).
struct KeyRateProblem {
  conic::Problem constraints;
  conic::BlockVec start;
  std::vector<Eigen::MatrixXd> kraus;
  int joint_blocks = 0;
  int flag_blocks = 0;
  double p_pass = 0.0;
  double e_sift = 0.0;
};

namespace detail {

// value of f at rho; gradient written to *grad when non-null
inline double objective_impl(const KeyRateProblem& kp, const conic::BlockVec& rho,
                             double eps, conic::BlockVec* grad) {
  double value = 0.0;
  if (grad) *grad = conic::BlockVec::zero(kp.constraints.dims);
  for (std::size_t b = 0; b < kp.kraus.size(); ++b) {
    const Eigen::MatrixXd& k = kp.kraus[b];
    if (k.rows() == 0) continue;
    Eigen::MatrixXd g = k * rho.m[b] * k.transpose();
    g = 0.5 * (g + g.transpose()).eval();
    const int d = static_cast<int>(g.rows()) / 2;
    value += plogp_floor(g, eps);
    for (int a = 0; a < 2; ++a)
      value -= plogp_floor(g.block(a * d, a * d, d, d), eps);
    if (grad) {
      // log of the pinched state is block diagonal, so subtracting the
      // per-quadrant logs on the diagonal quadrants forms log(g) - log(z)
      Eigen::MatrixXd l = log2_floor(g, eps);
      for (int a = 0; a < 2; ++a)
        l.block(a * d, a * d, d, d) -=
            log2_floor(g.block(a * d, a * d, d, d), eps);
      Eigen::MatrixXd gb = k.transpose() * l * k;
      grad->m[b] = 0.5 * (gb + gb.transpose());
    }
  }
  return value;
}

}  // namespace detail

inline double objective(const KeyRateProblem& kp, const conic::BlockVec& rho,
                        double eps) {
  return detail::objective_impl(kp, rho, eps, nullptr);
}

inline std::pair<double, conic::BlockVec> objective_with_gradient(
    const KeyRateProblem& kp, const conic::BlockVec& rho, double eps) {
  conic::BlockVec grad;
  double v = detail::objective_impl(kp, rho, eps, &grad);
  return {v, std::move(grad)};
}

namespace detail {

// Shared constraint assembly. sector_ops[y][n] are Bob's outcome operators
// per kept sector, flag_of_outcome[y] >= 0 places an indicator on that flag
// block. kept_outcomes lists outcomes whose click pattern enters the key.
struct AssemblyInput {
  std::vector<int> bob_dims;                 // per kept sector
  std::vector<std::vector<Eigen::MatrixXd>> sector_ops;
  std::vector<int> flag_of_outcome;          // -1 when there is no flag block
  int flag_count = 0;
  std::vector<int> kept_outcomes;
  std::vector<Eigen::MatrixXd> keep_sector_ops;  // M_keep restricted per sector
};

inline KeyRateProblem assemble(const detector::ReceiverSpec& spec,
                               const AssemblyInput& in,
                               const Eigen::MatrixXd& p_table) {
  KeyRateProblem kp;
  kp.joint_blocks = static_cast<int>(in.bob_dims.size());
  kp.flag_blocks = in.flag_count;

  std::vector<int>& dims = kp.constraints.dims;
  for (int d : in.bob_dims) dims.push_back(2 * d);
  for (int j = 0; j < in.flag_count; ++j) dims.push_back(2);

  kp.constraints.eq_ops.push_back(conic::BlockVec::identity(dims));
  std::vector<double> rhs = {1.0};
  kp.constraints.eq_psd = {false};

  const detector::AlicePovm alice = detector::build_alice_povm();
  const int outcomes = static_cast<int>(in.sector_ops.size());
  for (int x = 0; x < 4; ++x) {
    const Eigen::Matrix2d ax = alice.element(x);
    for (int y = 0; y < outcomes; ++y) {
      conic::BlockVec row = conic::BlockVec::zero(dims);
      for (int n = 0; n < kp.joint_blocks; ++n)
        row.m[n] = fock::alice_kron<double>(ax, in.sector_ops[y][n]);
      if (in.flag_of_outcome[y] >= 0)
        row.m[kp.joint_blocks + in.flag_of_outcome[y]] = ax;
      kp.constraints.eq_ops.push_back(std::move(row));
      rhs.push_back(p_table(x, y));
      kp.constraints.eq_psd.push_back(true);
    }
  }
  kp.constraints.eq_rhs =
      Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));

  // Kraus factors: (1/sqrt2) I_A (x) sqrt(M_keep,n) on sectors, (1/sqrt2) I
  // on kept flags, empty elsewhere.
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  for (int n = 0; n < kp.joint_blocks; ++n) {
    Eigen::MatrixXd root = detail::sqrt_psd(in.keep_sector_ops[n]);
    kp.kraus.push_back(inv_rt2 *
                       fock::alice_kron<double>(Eigen::Matrix2d::Identity(), root));
  }
  std::vector<bool> kept_flag(in.flag_count, false);
  for (int y : in.kept_outcomes)
    if (in.flag_of_outcome[y] >= 0) kept_flag[in.flag_of_outcome[y]] = true;
  for (int j = 0; j < in.flag_count; ++j)
    kp.kraus.push_back(kept_flag[j]
                           ? Eigen::MatrixXd(inv_rt2 * Eigen::MatrixXd::Identity(2, 2))
                           : Eigen::MatrixXd());

  kp.constraints.ineq_rhs = Eigen::VectorXd(0);
  (void)spec;
  return kp;
}

}  // namespace detail

// Flagged analysis: sectors up to flag_k plus one flag per fine outcome,
// observation rows from the squashed measurement, and photon-number weight
// constraints Tr(P_j sigma) >= b_j for each representable j.
inline KeyRateProblem build_flag_problem(const detector::ReceiverSpec& spec,
                                         int flag_k,
                                         const channel::SimulationResult& sim,
                                         const bounds::PhotonBounds& pb) {
  const squash::SquashedSpace space = squash::SquashedSpace::make(spec, flag_k);
  const int build_to = std::max(flag_k, sim.state.max_sector());
  const detector::PovmSet povm = detector::build_bob_povm(spec, build_to);
  const std::vector<op::BlockOperator> squashed = squash::squash_povm(povm, space);

  detail::AssemblyInput in;
  for (int n = 0; n <= flag_k; ++n)
    in.bob_dims.push_back(
        fock::sector_dimension(spec.layout.total_modes(), n));
  const int outcomes = static_cast<int>(povm.elements.size());
  in.sector_ops.resize(outcomes);
  in.flag_of_outcome.resize(outcomes);
  in.flag_count = outcomes;
  for (int y = 0; y < outcomes; ++y) {
    for (int n = 0; n <= flag_k; ++n)
      in.sector_ops[y].push_back(squashed[y].sector(n));
    in.flag_of_outcome[y] = y;
  }

  const auto grouped = detector::grouped_elements(povm);
  for (int n = 0; n <= flag_k; ++n)
    in.keep_sector_ops.push_back(grouped.m_keep.sector(n));
  if (spec.scheme == detector::Scheme::active) {
    in.kept_outcomes = {povm.index_of("Z10"), povm.index_of("Z01"),
                        povm.index_of("Z11")};
  } else {
    in.kept_outcomes = {povm.index_of("1000"), povm.index_of("0100"),
                        povm.index_of("1100")};
  }

  KeyRateProblem kp = detail::assemble(spec, in, sim.stats.p_table);

  // Photon-number weight constraints representable at this cut. A vacuous
  // bound is dropped; a saturated one (b_j = 1, exactly attained statistics)
  // pins the complement to zero weight and is stated as a PSD equality so
  // facial reduction absorbs it instead of leaving an interior-free slack.
  std::vector<double> hrhs;
  for (int j = 1; j <= std::min(flag_k, 2); ++j) {
    const double bj = j == 1 ? pb.b1 : pb.b2;
    if (bj <= 0.0) continue;
    if (bj >= 1.0) {
      conic::BlockVec comp = conic::BlockVec::zero(kp.constraints.dims);
      for (int n = j + 1; n <= flag_k; ++n)
        comp.m[n] = Eigen::MatrixXd::Identity(kp.constraints.dims[n],
                                              kp.constraints.dims[n]);
      for (int f = 0; f < kp.flag_blocks; ++f)
        comp.m[kp.joint_blocks + f] = Eigen::Matrix2d::Identity();
      kp.constraints.eq_ops.push_back(std::move(comp));
      kp.constraints.eq_rhs.conservativeResize(kp.constraints.eq_rhs.size() + 1);
      kp.constraints.eq_rhs(kp.constraints.eq_rhs.size() - 1) = 0.0;
      kp.constraints.eq_psd.push_back(true);
      continue;
    }
    conic::BlockVec pi = conic::BlockVec::zero(kp.constraints.dims);
    for (int n = 0; n <= j; ++n)
      pi.m[n] = Eigen::MatrixXd::Identity(kp.constraints.dims[n],
                                          kp.constraints.dims[n]);
    kp.constraints.ineq_ops.push_back(std::move(pi));
    hrhs.push_back(bj);
  }
  kp.constraints.ineq_rhs =
      hrhs.empty() ? Eigen::VectorXd(0)
                   : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                         hrhs.data(), static_cast<Eigen::Index>(hrhs.size())));

  // Feasible start: the squashed simulated state.
  const op::BlockOperator rho0 = squash::squash_state(sim.state, povm, space);
  kp.start = conic::BlockVec::zero(kp.constraints.dims);
  for (int n = 0; n <= flag_k; ++n)
    if (rho0.has_sector(n)) kp.start.m[n] = rho0.sector(n);
  for (int j = 0; j < kp.flag_blocks; ++j)
    kp.start.m[kp.joint_blocks + j] = rho0.flag_alice()[static_cast<std::size_t>(j)];

  kp.p_pass = sim.stats.p_pass;
  kp.e_sift = sim.stats.e_sift;
  return kp;
}

// Cut-off analysis: the state is assumed to live entirely in photon sectors
// 0..2; no flags and no weight constraints.
inline KeyRateProblem build_cutoff_problem(const detector::ReceiverSpec& spec,
                                           const channel::SimulationResult& sim) {
  const int top = 2;
  const detector::PovmSet povm = detector::build_bob_povm(spec, top);

  detail::AssemblyInput in;
  for (int n = 0; n <= top; ++n)
    in.bob_dims.push_back(fock::sector_dimension(spec.layout.total_modes(), n));
  const int outcomes = static_cast<int>(povm.elements.size());
  in.sector_ops.resize(outcomes);
  in.flag_of_outcome.assign(outcomes, -1);
  in.flag_count = 0;
  for (int y = 0; y < outcomes; ++y)
    for (int n = 0; n <= top; ++n)
      in.sector_ops[y].push_back(povm.elements[y].sector(n));

  const auto grouped = detector::grouped_elements(povm);
  for (int n = 0; n <= top; ++n)
    in.keep_sector_ops.push_back(grouped.m_keep.sector(n));

  KeyRateProblem kp = detail::assemble(spec, in, sim.stats.p_table);

  kp.start = conic::BlockVec::zero(kp.constraints.dims);
  for (int n = 0; n <= top; ++n)
    if (sim.state.has_sector(n)) kp.start.m[n] = sim.state.sector(n);

  kp.p_pass = sim.stats.p_pass;
  kp.e_sift = sim.stats.e_sift;
  return kp;
}

struct KeyRateOptions {
  int fw_max_iter = 1500;
  double fw_gap_tol = 1e-5;
  // Relative part of the stopping rule: accept once the duality gap drops
  // below min(fw_gap_tol, fw_gap_rel * |beta|), floored at 1e-9. Keeps small-
  // scale instances (long-distance points) proportionally tight.
  double fw_gap_rel = 2e-3;
  double conic_tol = 1e-8;
  int conic_max_iter = 200;
  double epsilon = 1e-12;
  double f_ec = 1.0;
};

struct KeyRateResult {
  double primal = std::numeric_limits<double>::infinity();
  double beta = 0.0;
  double leak_ec = 0.0;
  double key_rate_lb = 0.0;
  double fw_gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  double epsilon = 0.0;
  std::string status = "not_run";
};

namespace detail {

// Minimize f over the convex hull of the collected atoms by projected
// gradient on the simplex weights; returns the improved weights. Used to
// polish Frank-Wolfe iterates, which converge slowly on their own when the
// optimum hugs the positive-semidefinite boundary.
inline void correct_weights(const KeyRateProblem& kp,
                            const std::vector<conic::BlockVec>& atoms,
                            std::vector<double>& weights, double eps,
                            int rounds = 40) {
  const std::size_t n = atoms.size();
  if (n < 2) return;
  auto mix = [&](const std::vector<double>& w) {
    conic::BlockVec acc = conic::BlockVec::zero(kp.constraints.dims);
    for (std::size_t i = 0; i < n; ++i) acc.axpy(w[i], atoms[i]);
    return acc;
  };
  auto project_simplex = [](std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, tau = 0.0;
    int k = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      cum += u[j];
      const double t = (cum - 1.0) / static_cast<double>(j + 1);
      if (u[j] - t > 0.0) {
        tau = t;
        k = static_cast<int>(j + 1);
      }
    }
    (void)k;
    for (double& x : v) x = std::max(0.0, x - tau);
    return v;
  };

  double step = 1.0;
  conic::BlockVec rho = mix(weights);
  auto [fcur, grad] = objective_with_gradient(kp, rho, eps);
  for (int round = 0; round < rounds; ++round) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = grad.dot(atoms[i]);
    bool moved = false;
    for (int bt = 0; bt < 20; ++bt) {
      std::vector<double> w2(n);
      for (std::size_t i = 0; i < n; ++i) w2[i] = weights[i] - step * g[i];
      w2 = project_simplex(std::move(w2));
      conic::BlockVec rho2 = mix(w2);
      const double f2 = objective(kp, rho2, eps);
      if (f2 < fcur - 1e-15) {
        weights = std::move(w2);
        rho = std::move(rho2);
        fcur = f2;
        step *= 1.3;
        moved = true;
        break;
      }
      step *= 0.25;
    }
    if (!moved) break;
    auto fg = objective_with_gradient(kp, rho, eps);
    grad = std::move(fg.second);
  }
}

// Exact line search for convex phi on [0,1] by golden section.
inline std::pair<double, double> golden_section(
    const std::function<double(double)>& phi, double phi0, int evals = 30) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = phi(x1), f2 = phi(x2);
  for (int i = 0; i < evals - 2; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = phi(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = phi(x2);
    }
  }
  double xb = f1 <= f2 ? x1 : x2, fb = std::min(f1, f2);
  if (phi0 <= fb) return {0.0, phi0};
  // convexity: the right endpoint may win when the minimizer sits at 1
  double f_end = phi(1.0);
  if (f_end < fb) return {1.0, f_end};
  return {xb, fb};
}

}  // namespace detail

inline KeyRateResult solve(const KeyRateProblem& kp,
                           const KeyRateOptions& opt = {}) {
  KeyRateResult out;
  out.epsilon = opt.epsilon;

  conic::Prepared prep = conic::prepare(kp.constraints);
  if (!prep.ok) {
    out.status = "solver_failure: " + prep.message;
    return out;
  }

  // Pairwise Frank-Wolfe over the atoms produced by the linear subproblems:
  // each step moves weight from the currently worst-aligned active atom onto
  // the fresh minimizer, which avoids the zig-zag stalls of the plain method.
  std::vector<conic::BlockVec> atoms = {kp.start};
  std::vector<double> weights = {1.0};
  conic::BlockVec rho = kp.start;
  double best_beta = -std::numeric_limits<double>::infinity();
  double best_f = std::numeric_limits<double>::infinity();
  conic::BlockVec best_rho = rho;
  int stall = 0;
  bool converged = false;

  auto resync = [&] {
    conic::BlockVec acc = conic::BlockVec::zero(kp.constraints.dims);
    for (std::size_t i = 0; i < atoms.size(); ++i) acc.axpy(weights[i], atoms[i]);
    rho = acc;
  };

  for (int it = 0; it < opt.fw_max_iter; ++it) {
    auto [fval, grad] = objective_with_gradient(kp, rho, opt.epsilon);
    if (!std::isfinite(fval)) {
      out.status = "solver_failure: objective not finite";
      return out;
    }
    conic::SubproblemResult sub =
        conic::minimize(prep, grad, opt.conic_tol, opt.conic_max_iter);
    if (sub.status.rfind("infeasible", 0) == 0 || !std::isfinite(sub.cert)) {
      out.status = "solver_failure: " + sub.status;
      return out;
    }

    const double gdotr = grad.dot(rho);
    const double beta_it = fval - gdotr + sub.cert;
    if (beta_it > best_beta) {
      best_beta = beta_it;
      best_rho = rho;
    }
    best_f = std::min(best_f, fval);
    // Duality gap between the best primal value seen and the best certified
    // bound. Monotone, and never larger than the instantaneous linearized gap.
    out.fw_gap = best_f - best_beta;
    out.iterations = it + 1;
    const double stop_tol = std::max(
        1e-9, std::min(opt.fw_gap_tol, opt.fw_gap_rel * std::abs(best_beta)));
    if (out.fw_gap < stop_tol) {
      converged = true;
      break;
    }

    // Away atom: the active atom most aligned with the gradient.
    std::size_t away = 0;
    double away_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      const double s = grad.dot(atoms[i]);
      if (s > away_score) {
        away_score = s;
        away = i;
      }
    }

    conic::BlockVec dir = sub.sigma;
    dir.axpy(-1.0, atoms[away]);
    const double gamma_max = weights[away];
    auto phi = [&](double t) {
      conic::BlockVec q = rho;
      q.axpy(t * gamma_max, dir);
      return objective(kp, q, opt.epsilon);
    };
    auto [frac, fstep] = detail::golden_section(phi, fval);
    double gamma = frac * gamma_max;

    bool moved = false;
    if (gamma > 0.0 && fstep < fval - 1e-15) {
      weights[away] -= gamma;
      atoms.push_back(sub.sigma);
      weights.push_back(gamma);
      rho.axpy(gamma, dir);
      moved = true;
    } else {
      // Pairwise move blocked; fall back to a plain step toward sigma.
      conic::BlockVec fw_dir = sub.sigma;
      fw_dir.axpy(-1.0, rho);
      auto phi_fw = [&](double t) {
        conic::BlockVec q = rho;
        q.axpy(t, fw_dir);
        return objective(kp, q, opt.epsilon);
      };
      auto [step, f_fw] = detail::golden_section(phi_fw, fval);
      if (step > 0.0 && f_fw < fval - 1e-15) {
        for (double& w : weights) w *= 1.0 - step;
        atoms.push_back(sub.sigma);
        weights.push_back(step);
        rho.axpy(step, fw_dir);
        moved = true;
      }
    }

    // Periodically (and whenever a step stalls) re-balance the weights over
    // all collected atoms, which sidesteps the slow tail of plain steps.
    if (!moved || it % 8 == 7) {
      if (!moved) {
        atoms.push_back(sub.sigma);
        weights.push_back(0.0);
      }
      detail::correct_weights(kp, atoms, weights, opt.epsilon);
      resync();
      if (!moved) {
        if (++stall >= 3) break;
      } else {
        stall = 0;
      }
    } else {
      stall = 0;
    }

    for (std::size_t i = atoms.size(); i-- > 0;) {
      if (weights[i] < 1e-14 && atoms.size() > 1) {
        atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(i));
        weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
    if (it % 25 == 24) resync();
  }

  // Re-certify the best iterate at a 10x coarser floor; report the smaller
  // bound and flag disagreement beyond tolerance.
  auto [f10, g10] = objective_with_gradient(kp, best_rho, 10.0 * opt.epsilon);
  conic::SubproblemResult sub10 =
      conic::minimize(prep, g10, opt.conic_tol, opt.conic_max_iter);
  double beta10 = std::numeric_limits<double>::infinity();
  if (sub10.status.rfind("infeasible", 0) != 0 && std::isfinite(sub10.cert))
    beta10 = f10 - g10.dot(best_rho) + sub10.cert;

  out.primal = best_f;
  out.beta = std::min(best_beta, beta10);
  out.leak_ec = kp.p_pass * opt.f_ec * binary_entropy(kp.e_sift);
  out.key_rate_lb = out.beta - out.leak_ec;

  if (std::isfinite(beta10) && std::abs(best_beta - beta10) > 1e-6)
    out.status = "eps_mismatch";
  else if (!converged)
    out.status = "max_iter";
  else
    out.status = "ok";
  return out;
}

}  // namespace qkdmm::keyrate
