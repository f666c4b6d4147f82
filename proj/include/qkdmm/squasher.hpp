#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "qkdmm/block_operator.hpp"
#include "qkdmm/detector.hpp"
#include "qkdmm/fock.hpp"

namespace qkdmm::squash {

// Flag-state squasher. The infinite-dimensional receiver space is replaced by
// the photon-number sectors 0..k plus one flag dimension per click pattern.
// Squashed measurement operators keep their low-sector blocks and pick up the
// indicator of their own flag; squashing a state copies the low sectors and
// routes the high-sector weight into the flags through the true measurement:
//
//   sigma_flag(y) = Tr_B[(1 (x) M_{y,n>k}) rho_{n>k}]  (2x2 per flag, joint),
//
// which preserves every observable probability, Tr(rho M_y) =
// Tr(squash(rho) M~_y), by construction.

struct SquashedSpace {
  detector::ReceiverSpec spec;
  int k = 2;
  std::vector<int> sector_dims;  // receiver-side dims for sectors 0..k

  static SquashedSpace make(const detector::ReceiverSpec& spec, int k) {
    spec.validate();
    if (k < 1) throw std::invalid_argument("SquashedSpace: cut k >= 1 required");
    SquashedSpace s;
    s.spec = spec;
    s.k = k;
    for (int n = 0; n <= k; ++n)
      s.sector_dims.push_back(fock::sector_dimension(spec.layout.total_modes(), n));
    return s;
  }

  int flag_count() const { return spec.scheme == detector::Scheme::active ? 8 : 16; }
  int bob_dim() const {
    int d = flag_count();
    for (int v : sector_dims) d += v;
    return d;
  }
  int joint_dim() const { return 2 * bob_dim(); }
};

// Squashed measurement operators, one per click pattern, in PovmSet order.
inline std::vector<op::BlockOperator> squash_povm(const detector::PovmSet& povm,
                                                  const SquashedSpace& space) {
  if (povm.max_sector < space.k)
    throw std::invalid_argument("squash_povm: need POVM sectors up to the cut");
  const int J = space.flag_count();
  if (povm.outcome_count() != J)
    throw std::invalid_argument("squash_povm: outcome count does not match flag count");
  std::vector<op::BlockOperator> out;
  out.reserve(J);
  for (int y = 0; y < J; ++y) {
    op::BlockOperator m(op::Scope::bob);
    for (int n = 0; n <= space.k; ++n) m.set_sector(n, povm.elements[y].sector(n));
    Eigen::VectorXd flag = Eigen::VectorXd::Zero(J);
    flag(y) = 1.0;
    m.set_flag_diag(flag);
    out.push_back(std::move(m));
  }
  return out;
}

// Squash a joint state. Sectors above the cut feed the flags through the
// measurement; the POVM must cover every populated sector.
inline op::BlockOperator squash_state(const op::BlockOperator& state,
                                      const detector::PovmSet& povm,
                                      const SquashedSpace& space) {
  if (!state.joint()) throw std::invalid_argument("squash_state: joint state required");
  const int J = space.flag_count();
  std::vector<Eigen::Matrix2d> flags(J, Eigen::Matrix2d::Zero());
  op::BlockOperator out(op::Scope::joint);
  for (const auto& [n, block] : state.sectors()) {
    if (n <= space.k) {
      out.set_sector(n, block);
      continue;
    }
    if (povm.max_sector < n)
      throw std::invalid_argument("squash_state: POVM sectors end before the state does");
    const int d = static_cast<int>(block.rows()) / 2;
    for (int y = 0; y < J; ++y) {
      const Eigen::MatrixXd& m = povm.elements[y].sector(n);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          flags[y](a, b) += (m.array() * block.block(a * d, b * d, d, d).array()).sum();
    }
  }
  for (int n = 0; n <= space.k; ++n)
    if (!out.has_sector(n))
      out.set_sector(n, Eigen::MatrixXd::Zero(2 * space.sector_dims[n], 2 * space.sector_dims[n]));
  out.set_flag_alice(std::move(flags));
  return out;
}

// Projector onto joint sectors 0..j of the squashed space (flags excluded).
inline op::BlockOperator projector_upto(const SquashedSpace& space, int j) {
  if (j < 0 || j > space.k)
    throw std::invalid_argument("projector_upto: level outside the squashed sectors");
  op::BlockOperator p(op::Scope::bob);
  for (int n = 0; n <= space.k; ++n) {
    const int d = space.sector_dims[n];
    p.set_sector(n, n <= j ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d))
                           : Eigen::MatrixXd(Eigen::MatrixXd::Zero(d, d)));
  }
  p.set_flag_diag(Eigen::VectorXd::Zero(space.flag_count()));
  return p;
}

// Identity on the squashed receiver space, flags included.
inline op::BlockOperator squashed_identity(const SquashedSpace& space) {
  op::BlockOperator p(op::Scope::bob);
  for (int n = 0; n <= space.k; ++n) {
    const int d = space.sector_dims[n];
    p.set_sector(n, Eigen::MatrixXd::Identity(d, d));
  }
  p.set_flag_diag(Eigen::VectorXd::Ones(space.flag_count()));
  return p;
}

}  // namespace qkdmm::squash
