#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qkdmm/block_operator.hpp"
#include "qkdmm/detector.hpp"
#include "qkdmm/fock.hpp"

namespace qkdmm::channel {

// Quantum-optical toy channel generating the observed statistics: a
// source-replaced polarization qubit pair, depolarization with probability
// omega on the transmitted side, single-photon transmission t, and an
// intercept-resend branch with probability r in which the adversary injects
// the isotropic two-photon state at the channel entrance. Every photon that
// travels to the receiver, resent ones included, traverses the lossy channel,
// so all click statistics depend on the efficiencies only through the
// products t*eta. The signal occupies exactly one spatial-temporal mode,
// mixed uniformly over the M modes. Support is exact on sectors 0..2.

struct ChannelParams {
  double omega = 0.0;  // depolarizing probability
  double t = 1.0;      // single-photon transmission
  double r = 0.0;      // intercept-resend probability
  int m_resend = 2;

  void validate() const {
    if (omega < 0 || omega > 1 || t < 0 || t > 1 || r < 0 || r > 1)
      throw std::invalid_argument("ChannelParams: probabilities must lie in [0,1]");
    if (m_resend != 2)
      throw std::invalid_argument("ChannelParams: only two-photon resend is supported");
  }
};

inline double distance_to_transmission(double km) {
  if (km < 0) throw std::invalid_argument("distance_to_transmission: negative distance");
  return std::pow(10.0, -km / 50.0);
}

// Isotropic m-photon polarization state: the uniform mixture over linear
// polarization angles, in the m-photon two-mode sector basis.
inline Eigen::MatrixXd resend_state(int m) {
  if (m == 1) return 0.5 * Eigen::Matrix2d::Identity();
  if (m == 2) {
    Eigen::Matrix3d rho;  // basis |2H>, |HV>, |2V>
    rho << 3.0 / 8.0, 0.0, 1.0 / 8.0,
           0.0, 1.0 / 4.0, 0.0,
           1.0 / 8.0, 0.0, 3.0 / 8.0;
    return rho;
  }
  throw std::invalid_argument("resend_state: only one or two photons supported");
}

struct ObservedStats {
  std::vector<std::string> alice_labels{"H", "V", "D", "A"};
  std::vector<std::string> bob_labels;
  Eigen::MatrixXd p_table;  // alice outcomes x bob outcomes
  double d_obs = std::numeric_limits<double>::quiet_NaN();
  double e_obs = std::numeric_limits<double>::quiet_NaN();
  double c_obs = std::numeric_limits<double>::quiet_NaN();
  double p_pass = 0.0;
  double e_sift = 0.0;
  double p_det = 0.0;
};

struct SimulationResult {
  ObservedStats stats;
  op::BlockOperator state{op::Scope::joint};  // ground truth, sectors 0..2
};

namespace detail {

// Joint sector-1 block: correlated depolarized qubit pairs plus the
// uncorrelated single survivor of a lost resent pair, mixed over modes.
inline Eigen::MatrixXd one_photon_block(const detector::ReceiverSpec& spec,
                                        const ChannelParams& p) {
  const int M = spec.layout.spatial_modes;
  const int tm = spec.layout.total_modes();
  const double w_dep = (1.0 - p.r) * p.t / M;
  const double w_mix = p.r * 2.0 * p.t * (1.0 - p.t) / M;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * tm, 2 * tm);
  for (int m = 0; m < M; ++m) {
    const int h = spec.layout.index(m, 0), v = spec.layout.index(m, 1);
    // maximally entangled piece (|H_A H_m> + |V_A V_m>)/sqrt(2)
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(2 * tm);
    phi(0 * tm + h) = 1.0 / std::sqrt(2.0);
    phi(1 * tm + v) = 1.0 / std::sqrt(2.0);
    block += w_dep * (1.0 - p.omega) * (phi * phi.transpose());
    for (int a = 0; a < 2; ++a)
      for (int pol : {h, v}) {
        block(a * tm + pol, a * tm + pol) += w_dep * p.omega / 4.0;
        block(a * tm + pol, a * tm + pol) += w_mix / 4.0;
      }
  }
  return block;
}

// Joint sector-2 block: surviving resent pairs, uncorrelated with Alice.
inline Eigen::MatrixXd two_photon_block(const detector::ReceiverSpec& spec,
                                        const ChannelParams& p) {
  const int M = spec.layout.spatial_modes;
  const int tm = spec.layout.total_modes();
  const fock::SectorBasis basis(tm, 2);
  const Eigen::MatrixXd rho2 = resend_state(2);
  Eigen::MatrixXd bob = Eigen::MatrixXd::Zero(basis.dim(), basis.dim());
  const double w = p.r * p.t * p.t / M;
  for (int m = 0; m < M; ++m) {
    int idx[3];
    for (int j = 0; j < 3; ++j) {  // local occupations (2,0), (1,1), (0,2)
      fock::OccVec occ(tm, 0);
      occ[spec.layout.index(m, 0)] = 2 - j;
      occ[spec.layout.index(m, 1)] = j;
      idx[j] = basis.rank(occ);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) bob(idx[a], idx[b]) += w * rho2(a, b);
  }
  return fock::alice_kron<double>(0.5 * Eigen::Matrix2d::Identity(), bob);
}

}  // namespace detail

inline SimulationResult simulate(const detector::ReceiverSpec& spec, const ChannelParams& p) {
  spec.validate();
  p.validate();
  const int M = spec.layout.spatial_modes;

  SimulationResult out;
  const double w0 = (1.0 - p.r) * (1.0 - p.t) + p.r * (1.0 - p.t) * (1.0 - p.t);
  out.state.set_sector(0, 0.5 * w0 * Eigen::Matrix2d::Identity());
  out.state.set_sector(1, detail::one_photon_block(spec, p));
  out.state.set_sector(2, detail::two_photon_block(spec, p));

  const auto alice = detector::build_alice_povm();
  const auto povm = detector::build_bob_povm(spec, 2);
  auto& stats = out.stats;
  stats.bob_labels = povm.labels;
  stats.p_table.resize(4, povm.outcome_count());
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < povm.outcome_count(); ++y)
      stats.p_table(x, y) =
          out.state.inner(op::alice_tensor(alice.element(x), povm.elements[y]));

  const auto kinds = detector::default_bound_kinds(spec.scheme);
  const auto fops = detector::build_bound_operators(spec, 2, kinds);
  using detector::BoundKind;
  if (spec.scheme == detector::Scheme::active) {
    stats.d_obs = out.state.inner(
        op::alice_tensor(Eigen::Matrix2d::Identity(), fops.at(BoundKind::double_click)));
    stats.e_obs = out.state.inner(fops.at(BoundKind::effective_error));
  } else {
    stats.c_obs = out.state.inner(
        op::alice_tensor(Eigen::Matrix2d::Identity(), fops.at(BoundKind::cross_click)));
  }

  const bool active = spec.scheme == detector::Scheme::active;
  const int yh = povm.index_of(active ? "Z10" : "1000");
  const int yv = povm.index_of(active ? "Z01" : "0100");
  const int yhv = povm.index_of(active ? "Z11" : "1100");
  double pass = 0.0;
  for (int x : {0, 1})
    for (int y : {yh, yv, yhv}) pass += stats.p_table(x, y);
  stats.p_pass = pass;
  const double err = stats.p_table(0, yv) + stats.p_table(1, yh) +
                     0.5 * (stats.p_table(0, yhv) + stats.p_table(1, yhv));
  stats.e_sift = pass > 0 ? err / pass : 0.0;
  const double p_key_bob = active ? spec.basis_prob : 0.5;
  stats.p_det = pass / (0.5 * p_key_bob);
  return out;
}

}  // namespace qkdmm::channel
