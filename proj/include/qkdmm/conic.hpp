#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace qkdmm::conic {

// Dense primal-dual interior-point solver for linear objectives over
// block-diagonal PSD variables with trace-linear equality and inequality
// constraints:
//
//   min <C, X>  s.t.  <G_i, X> = g_i,  <P_k, X> >= h_k,  X >= 0 blockwise.
//
// Inequalities are folded into equality form with 1x1 slack blocks, and the
// Newton systems use the XZ (HKM) linearization with a symmetrized Schur
// complement and Mehrotra predictor-corrector steps.
//
// Two pre-solve passes make degenerate instances tractable and keep the dual
// certificate meaningful:
//   - facial reduction: an equality <G,X> = 0 with PSD G forces the feasible
//     support into ker(G); all operators are conjugated onto that face, so
//     problems whose feasible set has empty interior (exactly attained
//     statistics) become strictly feasible;
//   - rank pruning: linearly dependent equality rows are removed by an
//     incremental orthogonalization with an explicit consistency check.
//
// The reported certificate never depends on solver convergence: for any
// multipliers y and w >= 0, since every feasible X has unit trace,
//   min <C,X>  >=  g'y + h'w + lambda_min(C - sum_i y_i G_i - sum_k w_k P_k),
// evaluated here with exact eigenvalue computations on the face.

struct BlockVec {
  std::vector<Eigen::MatrixXd> m;

  static BlockVec zero(const std::vector<int>& dims) {
    BlockVec v;
    v.m.reserve(dims.size());
    for (int d : dims) v.m.push_back(Eigen::MatrixXd::Zero(d, d));
    return v;
  }
  static BlockVec identity(const std::vector<int>& dims, double scale = 1.0) {
    BlockVec v;
    v.m.reserve(dims.size());
    for (int d : dims) v.m.push_back(scale * Eigen::MatrixXd::Identity(d, d));
    return v;
  }

  int total_dim() const {
    int n = 0;
    for (const auto& b : m) n += static_cast<int>(b.rows());
    return n;
  }
  double dot(const BlockVec& o) const {
    double s = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i].size()) s += (m[i].array() * o.m[i].array()).sum();
    return s;
  }
  double trace() const {
    double s = 0;
    for (const auto& b : m) s += b.trace();
    return s;
  }
  double max_abs() const {
    double s = 0;
    for (const auto& b : m)
      if (b.size()) s = std::max(s, b.cwiseAbs().maxCoeff());
    return s;
  }
  BlockVec& axpy(double a, const BlockVec& o) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += a * o.m[i];
    return *this;
  }
  BlockVec& scale(double a) {
    for (auto& b : m) b *= a;
    return *this;
  }
  void symmetrize() {
    for (auto& b : m) b = 0.5 * (b + b.transpose()).eval();
  }
  double min_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : m) {
      if (b.rows() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
  }
};

struct Problem {
  std::vector<int> dims;
  std::vector<BlockVec> eq_ops;
  Eigen::VectorXd eq_rhs;
  std::vector<bool> eq_psd;  // marks rows eligible for facial reduction
  std::vector<BlockVec> ineq_ops;
  Eigen::VectorXd ineq_rhs;

  void check_shapes() const {
    if (eq_rhs.size() != static_cast<Eigen::Index>(eq_ops.size()) ||
        ineq_rhs.size() != static_cast<Eigen::Index>(ineq_ops.size()) ||
        eq_psd.size() != eq_ops.size())
      throw std::invalid_argument("conic::Problem: constraint shape mismatch");
  }
};

namespace detail {

inline Eigen::VectorXd svec(const BlockVec& v) {
  int n = 0;
  for (const auto& b : v.m) n += static_cast<int>(b.rows() * (b.rows() + 1) / 2);
  Eigen::VectorXd out(n);
  const double rt2 = std::sqrt(2.0);
  int p = 0;
  for (const auto& b : v.m)
    for (int i = 0; i < b.rows(); ++i)
      for (int j = i; j < b.cols(); ++j) out(p++) = i == j ? b(i, j) : rt2 * b(i, j);
  return out;
}

}  // namespace detail

struct Prepared {
  std::vector<int> orig_dims;
  std::vector<Eigen::MatrixXd> basis;  // per block: orig_dim x face_dim
  std::vector<int> dims;               // face dims
  std::vector<BlockVec> eq_ops;        // reduced, pruned
  Eigen::VectorXd eq_rhs;
  std::vector<int> kept_eq;            // original row index per kept row
  std::vector<BlockVec> ineq_ops;      // reduced (rows kept 1:1)
  Eigen::VectorXd ineq_rhs;
  bool ok = true;
  std::string message = "ok";
};

// Conjugate every operator onto the face, drop zero-rhs PSD rows, prune
// dependent equality rows (keeping earlier rows; put the trace row first).
inline Prepared prepare(const Problem& p, double zero_rhs_tol = 1e-14,
                        double rank_tol = 1e-10) {
  p.check_shapes();
  Prepared out;
  out.orig_dims = p.dims;

  // Accumulate the facial certificate F = sum of PSD rows with zero rhs.
  BlockVec f = BlockVec::zero(p.dims);
  std::vector<bool> is_zero_row(p.eq_ops.size(), false);
  for (std::size_t i = 0; i < p.eq_ops.size(); ++i)
    if (p.eq_psd[i] && std::abs(p.eq_rhs(static_cast<Eigen::Index>(i))) <= zero_rhs_tol) {
      is_zero_row[i] = true;
      f.axpy(1.0, p.eq_ops[i]);
    }

  for (std::size_t b = 0; b < p.dims.size(); ++b) {
    const Eigen::MatrixXd& fb = f.m[b];
    if (fb.rows() == 0) {
      out.basis.push_back(Eigen::MatrixXd::Zero(0, 0));
      out.dims.push_back(0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fb);
    const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    int kdim = 0;
    while (kdim < fb.rows() && es.eigenvalues()(kdim) <= tol) ++kdim;
    out.basis.push_back(es.eigenvectors().leftCols(kdim));
    out.dims.push_back(kdim);
  }

  auto reduce = [&](const BlockVec& v) {
    BlockVec r;
    r.m.reserve(v.m.size());
    for (std::size_t b = 0; b < v.m.size(); ++b) {
      Eigen::MatrixXd rb = out.basis[b].transpose() * v.m[b] * out.basis[b];
      r.m.push_back(0.5 * (rb + rb.transpose()));
    }
    return r;
  };

  // Incremental orthogonalization in row order with rhs consistency checks.
  std::vector<Eigen::VectorXd> ortho;
  std::vector<double> ortho_rhs;
  for (std::size_t i = 0; i < p.eq_ops.size(); ++i) {
    if (is_zero_row[i]) continue;
    BlockVec red = reduce(p.eq_ops[i]);
    Eigen::VectorXd v = detail::svec(red);
    const double scale = std::max(1.0, v.norm());
    double rhs_pred = 0.0;
    for (std::size_t q = 0; q < ortho.size(); ++q) {
      const double a = ortho[q].dot(v);
      v -= a * ortho[q];
      rhs_pred += a * ortho_rhs[q];
    }
    if (v.norm() > rank_tol * scale) {
      const double nrm = v.norm();
      ortho.push_back(v / nrm);
      ortho_rhs.push_back((p.eq_rhs(static_cast<Eigen::Index>(i)) - rhs_pred) / nrm);
      out.eq_ops.push_back(std::move(red));
      out.kept_eq.push_back(static_cast<int>(i));
    } else if (std::abs(p.eq_rhs(static_cast<Eigen::Index>(i)) - rhs_pred) > 1e-8) {
      out.ok = false;
      out.message = "equality row " + std::to_string(i) +
                    " is linearly dependent with inconsistent right-hand side";
      return out;
    }
  }
  out.eq_rhs.resize(static_cast<Eigen::Index>(out.eq_ops.size()));
  for (std::size_t i = 0; i < out.kept_eq.size(); ++i)
    out.eq_rhs(static_cast<Eigen::Index>(i)) = p.eq_rhs(out.kept_eq[i]);

  for (std::size_t k = 0; k < p.ineq_ops.size(); ++k) {
    out.ineq_ops.push_back(reduce(p.ineq_ops[k]));
    if (out.ineq_ops.back().max_abs() < 1e-14 &&
        p.ineq_rhs(static_cast<Eigen::Index>(k)) > 1e-12) {
      out.ok = false;
      out.message = "inequality row " + std::to_string(k) +
                    " vanished on the face but demands a positive value";
      return out;
    }
  }
  out.ineq_rhs = p.ineq_rhs;

  if (out.eq_ops.empty()) {
    out.ok = false;
    out.message = "no independent equality constraints remain";
  }
  return out;
}

struct SubproblemResult {
  BlockVec sigma;     // minimizer lifted back to the original blocks
  double value = 0;   // <C, sigma>
  double cert = -std::numeric_limits<double>::infinity();  // rigorous lower bound
  double gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::string status = "not_run";
};

namespace detail {

struct IpmState {
  BlockVec x, z;
  Eigen::VectorXd y;
};

// Largest alpha with X + alpha dX staying PSD, via the generalized spectrum.
inline double max_step(const BlockVec& x, const BlockVec& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < x.m.size(); ++b) {
    const int d = static_cast<int>(x.m[b].rows());
    if (d == 0) continue;
    if (d == 1) {
      if (dx.m[b](0, 0) < 0) alpha = std::min(alpha, -x.m[b](0, 0) / dx.m[b](0, 0));
      continue;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(dx.m[b], x.m[b],
                                                                 Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < 0) alpha = std::min(alpha, -1.0 / lo);
  }
  return alpha;
}

}  // namespace detail

namespace detail {

inline bool is_pd(const BlockVec& v) {
  for (const auto& b : v.m) {
    if (b.rows() == 0) continue;
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

}  // namespace detail

// Interior-point solve of min <C,sigma> over the prepared face. The result is
// lifted back to the original block structure, and cert is the certified
// lower bound computed from the final multipliers on the face.
inline SubproblemResult minimize(const Prepared& prep, const BlockVec& c_full,
                                 double tol = 1e-8, int max_iter = 200) {
  SubproblemResult res;
  if (!prep.ok) {
    res.status = "infeasible: " + prep.message;
    return res;
  }

  // Reduce the objective onto the face and fold inequalities into slack
  // blocks: rows [0, m_eq) are equalities, [m_eq, m_all) carry P_k - s_k = h_k.
  const int m_eq = static_cast<int>(prep.eq_ops.size());
  const int m_ineq = static_cast<int>(prep.ineq_ops.size());
  const int m_all = m_eq + m_ineq;
  std::vector<int> dims = prep.dims;
  for (int k = 0; k < m_ineq; ++k) dims.push_back(1);
  const std::size_t nb_face = prep.dims.size();

  auto widen = [&](const BlockVec& v) {
    BlockVec w = v;
    for (int k = 0; k < m_ineq; ++k) w.m.push_back(Eigen::MatrixXd::Zero(1, 1));
    return w;
  };

  BlockVec c_face;
  for (std::size_t b = 0; b < nb_face; ++b) {
    Eigen::MatrixXd rb = prep.basis[b].transpose() * c_full.m[b] * prep.basis[b];
    c_face.m.push_back(0.5 * (rb + rb.transpose()));
  }
  const double c_scale = std::max(1.0, c_face.max_abs());
  BlockVec c = widen(c_face);
  c.scale(1.0 / c_scale);

  std::vector<BlockVec> ops;
  ops.reserve(m_all);
  Eigen::VectorXd rhs(m_all);
  for (int i = 0; i < m_eq; ++i) {
    ops.push_back(widen(prep.eq_ops[i]));
    rhs(i) = prep.eq_rhs(i);
  }
  for (int k = 0; k < m_ineq; ++k) {
    BlockVec row = widen(prep.ineq_ops[k]);
    row.m[nb_face + k](0, 0) = -1.0;
    ops.push_back(std::move(row));
    rhs(m_eq + k) = prep.ineq_rhs(k);
  }

  const int n = BlockVec::zero(dims).total_dim();
  if (n == 0) {
    res.status = "infeasible: empty face";
    return res;
  }

  detail::IpmState s;
  s.x = BlockVec::identity(dims);
  s.z = BlockVec::identity(dims);
  s.y = Eigen::VectorXd::Zero(m_all);

  auto apply_A = [&](const BlockVec& v) {
    Eigen::VectorXd out(m_all);
    for (int i = 0; i < m_all; ++i) out(i) = ops[i].dot(v);
    return out;
  };
  auto apply_At = [&](const Eigen::VectorXd& y) {
    BlockVec out = BlockVec::zero(dims);
    for (int i = 0; i < m_all; ++i) out.axpy(y(i), ops[i]);
    return out;
  };

  const double rhs_scale = 1.0 + rhs.cwiseAbs().maxCoeff();
  double best_score = std::numeric_limits<double>::infinity();
  detail::IpmState best = s;
  res.status = "max_iter";
  int no_progress = 0;

  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd rp = rhs - apply_A(s.x);
    BlockVec rd = c;
    rd.axpy(-1.0, apply_At(s.y));
    rd.axpy(-1.0, s.z);
    const double mu = s.x.dot(s.z) / n;

    const double pinf = rp.cwiseAbs().maxCoeff() / rhs_scale;
    const double dinf = rd.max_abs() / (1.0 + c.max_abs());
    const double pobj = c.dot(s.x), dobj = rhs.dot(s.y);
    const double rgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double score = std::max({pinf, dinf, rgap});
    if (score < best_score) {
      best_score = score;
      best = s;
      no_progress = 0;
    } else if (++no_progress >= 15) {
      res.status = "stalled";
      break;
    }
    if (pinf < tol && dinf < tol && rgap < tol) {
      res.status = "ok";
      res.iterations = iter;
      best = s;
      break;
    }

    // Per-block inverses of Z.
    BlockVec zi = BlockVec::zero(dims);
    bool bad = false;
    for (std::size_t b = 0; b < dims.size(); ++b) {
      if (dims[b] == 0) continue;
      Eigen::LLT<Eigen::MatrixXd> llt(s.z.m[b]);
      if (llt.info() != Eigen::Success) {
        bad = true;
        break;
      }
      zi.m[b] = llt.solve(Eigen::MatrixXd::Identity(dims[b], dims[b]));
    }
    if (bad) {
      res.status = "stalled";
      break;
    }

    // Symmetrized HKM Schur complement, factored once per iteration.
    std::vector<BlockVec> wleft(m_all), wright(m_all);
    for (int j = 0; j < m_all; ++j) {
      wleft[j] = BlockVec::zero(dims);
      wright[j] = BlockVec::zero(dims);
      for (std::size_t b = 0; b < dims.size(); ++b) {
        if (dims[b] == 0) continue;
        wleft[j].m[b] = s.x.m[b] * ops[j].m[b] * zi.m[b];
        wright[j].m[b] = zi.m[b] * ops[j].m[b] * s.x.m[b];
      }
    }
    Eigen::MatrixXd schur(m_all, m_all);
    for (int i = 0; i < m_all; ++i)
      for (int j = 0; j < m_all; ++j)
        schur(i, j) = 0.5 * (ops[i].dot(wleft[j]) + ops[i].dot(wright[j]));
    Eigen::LDLT<Eigen::MatrixXd> fact(schur);
    if (fact.info() != Eigen::Success) {
      res.status = "stalled";
      break;
    }

    auto solve_direction = [&](double sigma_mu, const BlockVec* corr)
        -> std::tuple<BlockVec, Eigen::VectorXd, BlockVec> {
      // center term T = sigma_mu Zi - X - sym(corr Zi)
      BlockVec t = zi;
      t.scale(sigma_mu);
      t.axpy(-1.0, s.x);
      if (corr) {
        for (std::size_t b = 0; b < dims.size(); ++b) {
          if (dims[b] == 0) continue;
          Eigen::MatrixXd e = corr->m[b] * zi.m[b];
          t.m[b] -= 0.5 * (e + e.transpose());
        }
      }
      BlockVec xrdzi = BlockVec::zero(dims);
      for (std::size_t b = 0; b < dims.size(); ++b) {
        if (dims[b] == 0) continue;
        Eigen::MatrixXd e = s.x.m[b] * rd.m[b] * zi.m[b];
        xrdzi.m[b] = 0.5 * (e + e.transpose());
      }
      Eigen::VectorXd rhs_y = rp - apply_A(t) + apply_A(xrdzi);
      Eigen::VectorXd dy = fact.solve(rhs_y);
      BlockVec dz = rd;
      dz.axpy(-1.0, apply_At(dy));
      BlockVec dx = t;
      for (std::size_t b = 0; b < dims.size(); ++b) {
        if (dims[b] == 0) continue;
        Eigen::MatrixXd e = s.x.m[b] * dz.m[b] * zi.m[b];
        dx.m[b] -= 0.5 * (e + e.transpose());
      }
      return {dx, dy, dz};
    };

    auto [dxa, dya, dza] = solve_direction(0.0, nullptr);
    const double ap_aff = std::min(1.0, 0.98 * detail::max_step(s.x, dxa));
    const double ad_aff = std::min(1.0, 0.98 * detail::max_step(s.z, dza));
    BlockVec xa = s.x;
    xa.axpy(ap_aff, dxa);
    BlockVec za = s.z;
    za.axpy(ad_aff, dza);
    const double mu_aff = xa.dot(za) / n;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    BlockVec corr = BlockVec::zero(dims);
    for (std::size_t b = 0; b < dims.size(); ++b) {
      if (dims[b] == 0) continue;
      corr.m[b] = dxa.m[b] * dza.m[b];
    }
    auto [dx, dy, dz] = solve_direction(sigma * mu, &corr);

    // Fraction-to-boundary step, halved until both factors stay positive
    // definite (the generalized eigenvalue bound can be optimistic when the
    // iterate is nearly singular).
    double ap = std::min(1.0, 0.98 * detail::max_step(s.x, dx));
    double ad = std::min(1.0, 0.98 * detail::max_step(s.z, dz));
    BlockVec xn = s.x, zn = s.z;
    xn.axpy(ap, dx);
    zn.axpy(ad, dz);
    for (int halve = 0; halve < 40 && !(detail::is_pd(xn) && detail::is_pd(zn));
         ++halve) {
      ap *= 0.5;
      ad *= 0.5;
      xn = s.x;
      zn = s.z;
      xn.axpy(ap, dx);
      zn.axpy(ad, dz);
    }
    if (!(detail::is_pd(xn) && detail::is_pd(zn))) {
      res.status = "stalled";
      break;
    }
    s.x = xn;
    s.z = zn;
    s.y += ad * dy;
    s.x.symmetrize();
    s.z.symmetrize();
    res.iterations = iter + 1;

    bool nan = !std::isfinite(s.x.max_abs()) || !std::isfinite(s.z.max_abs()) ||
               !s.y.allFinite();
    if (nan) {
      s = best;
      res.status = "numerical";
      break;
    }
  }

  const detail::IpmState& fin = best;

  // Lift the primal iterate back to the original blocks.
  res.sigma.m.clear();
  for (std::size_t b = 0; b < prep.orig_dims.size(); ++b) {
    if (prep.dims[b] == 0) {
      res.sigma.m.push_back(
          Eigen::MatrixXd::Zero(prep.orig_dims[b], prep.orig_dims[b]));
      continue;
    }
    Eigen::MatrixXd lifted = prep.basis[b] * fin.x.m[b] * prep.basis[b].transpose();
    res.sigma.m.push_back(0.5 * (lifted + lifted.transpose()));
  }
  double value = 0;
  for (std::size_t b = 0; b < nb_face; ++b)
    if (c_face.m[b].size())
      value += (c_face.m[b].array() * fin.x.m[b].array()).sum();
  res.value = value;

  // Certified lower bound from the (unscaled) multipliers: every feasible
  // point has unit trace, so lambda_min of the dual slack absorbs residual
  // dual infeasibility into a valid shift. Inequality multipliers must be
  // nonnegative; clamp tiny negative values from finite termination.
  Eigen::VectorXd y = c_scale * fin.y;
  BlockVec slack = c_face;
  double cert = 0;
  for (int i = 0; i < m_eq; ++i) {
    slack.axpy(-y(i), prep.eq_ops[i]);
    cert += prep.eq_rhs(i) * y(i);
  }
  for (int k = 0; k < m_ineq; ++k) {
    const double w = std::max(0.0, y(m_eq + k));
    slack.axpy(-w, prep.ineq_ops[k]);
    cert += prep.ineq_rhs(k) * w;
  }
  double lam = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nb_face; ++b) {
    if (slack.m[b].rows() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(slack.m[b],
                                                      Eigen::EigenvaluesOnly);
    lam = std::min(lam, es.eigenvalues().minCoeff());
  }
  res.cert = std::isfinite(lam) ? cert + lam
                                : -std::numeric_limits<double>::infinity();
  res.gap = res.value - res.cert;
  return res;
}

}  // namespace qkdmm::conic
