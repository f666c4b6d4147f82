#pragma once

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qkdmm/block_operator.hpp"
#include "qkdmm/fock.hpp"

namespace qkdmm::detector {

// Threshold-detector receiver models with per-detector, per-mode efficiencies.
//
// Two receivers are supported. The active receiver rotates the polarization
// (identity for the key basis, 45 degrees for the test basis) ahead of a PBS
// feeding two detectors; the basis choice carries probability p / 1-p. The
// passive receiver splits every signal 50/50 between both polarization
// analyses, feeding four detectors, no random choice.
//
// Construction rests on one identity: the no-click operator for a detector
// subset S is Sym^n(V^T X_S V), where V is the receiver's mode map and X_S the
// diagonal of per-path survival factors (1 - eta on paths feeding S, 1
// elsewhere). Exact click-pattern elements follow by inclusion-exclusion over
// subsets of the clicked detectors. This is algebraically the lifted
// rotated-diagonal construction, but it never materializes the enlarged
// output-mode sectors, which keeps four-detector operators cheap at high
// photon number.

enum class Scheme { active, passive };

struct ReceiverSpec {
  Scheme scheme = Scheme::active;
  fock::ModeLayout layout{};
  Eigen::MatrixXd eta;      // detectors x spatial modes
  double basis_prob = 0.5;  // active key-basis probability

  int detector_count() const { return scheme == Scheme::active ? 2 : 4; }

  void validate() const {
    if (layout.spatial_modes < 1)
      throw std::invalid_argument("ReceiverSpec: at least one spatial mode");
    if (eta.rows() != detector_count() || eta.cols() != layout.spatial_modes)
      throw std::invalid_argument("ReceiverSpec: eta must be detectors x spatial modes");
    if ((eta.array() < 0.0).any() || (eta.array() > 1.0).any())
      throw std::invalid_argument("ReceiverSpec: eta entries must lie in [0,1]");
    if (scheme == Scheme::active && (basis_prob <= 0.0 || basis_prob >= 1.0))
      throw std::invalid_argument("ReceiverSpec: basis_prob must lie in (0,1)");
  }
};

// Alice's qubit measurements; unweighted projectors/operators H, V, D, A.
// The source emits each basis with probability 1/2, so the POVM elements are
// half these operators.
struct AlicePovm {
  std::array<Eigen::Matrix2d, 4> ops;
  static constexpr std::array<const char*, 4> labels{"H", "V", "D", "A"};
  const Eigen::Matrix2d& unweighted(int x) const { return ops.at(x); }
  Eigen::Matrix2d element(int x) const { return 0.5 * ops.at(x); }
};

inline AlicePovm build_alice_povm() {
  AlicePovm a;
  a.ops[0] << 1, 0, 0, 0;
  a.ops[1] << 0, 0, 0, 1;
  a.ops[2] << 0.5, 0.5, 0.5, 0.5;
  a.ops[3] << 0.5, -0.5, -0.5, 0.5;
  return a;
}

namespace detail {

// Per-spatial-mode polarization rotation feeding the active PBS paths.
inline Eigen::MatrixXd active_rotation(const ReceiverSpec& spec, int basis) {
  const int tm = spec.layout.total_modes();
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(tm, tm);
  if (basis == 1) {
    const double s = 1.0 / std::sqrt(2.0);
    for (int m = 0; m < spec.layout.spatial_modes; ++m) {
      r(2 * m, 2 * m) = s;
      r(2 * m, 2 * m + 1) = s;
      r(2 * m + 1, 2 * m) = s;
      r(2 * m + 1, 2 * m + 1) = -s;
    }
  }
  return r;
}

// Mode-space no-click map V^T X_S V for detector subset mask (bit d set = no
// click demanded of detector d).
inline Eigen::MatrixXd survival_mode_map(const ReceiverSpec& spec, int basis, unsigned mask) {
  const int M = spec.layout.spatial_modes;
  const int tm = spec.layout.total_modes();
  Eigen::MatrixXd g(tm, tm);
  if (spec.scheme == Scheme::active) {
    Eigen::VectorXd x(tm);
    for (int m = 0; m < M; ++m)
      for (int d = 0; d < 2; ++d)
        x(2 * m + d) = (mask >> d & 1u) ? 1.0 - spec.eta(d, m) : 1.0;
    const Eigen::MatrixXd r = active_rotation(spec, basis);
    g = r.transpose() * x.asDiagonal() * r;
  } else {
    g.setZero();
    for (int m = 0; m < M; ++m) {
      double xs[4];
      for (int d = 0; d < 4; ++d) xs[d] = (mask >> d & 1u) ? 1.0 - spec.eta(d, m) : 1.0;
      g(2 * m, 2 * m) = 0.5 * xs[0] + 0.25 * xs[2] + 0.25 * xs[3];
      g(2 * m + 1, 2 * m + 1) = 0.5 * xs[1] + 0.25 * xs[2] + 0.25 * xs[3];
      g(2 * m, 2 * m + 1) = g(2 * m + 1, 2 * m) = 0.25 * xs[2] - 0.25 * xs[3];
    }
  }
  return g;
}

// Cache of Sym^n(survival map) per (basis, subset) within one sector.
class SubsetSyms {
 public:
  SubsetSyms(const ReceiverSpec& spec, int n) : spec_(spec), n_(n) {}

  const Eigen::MatrixXd& get(int basis, unsigned mask) {
    auto key = std::make_pair(basis, mask);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Eigen::MatrixXd e = fock::sym_power<double>(survival_mode_map(spec_, basis, mask), n_);
    return cache_.emplace(key, std::move(e)).first->second;
  }

  // Exact-pattern click operator by inclusion-exclusion over clicked subsets.
  Eigen::MatrixXd pattern(int basis, unsigned clicked, unsigned all_mask) {
    const unsigned idle = all_mask & ~clicked;
    const int dim = fock::sector_dimension(spec_.layout.total_modes(), n_);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
    unsigned s = clicked;
    while (true) {  // iterate submasks of clicked, including 0
      const int sign = (std::popcount(s) % 2 == 0) ? 1 : -1;
      out += sign * get(basis, s | idle);
      if (s == 0) break;
      s = (s - 1) & clicked;
    }
    return out;
  }

 private:
  const ReceiverSpec& spec_;
  int n_;
  std::map<std::pair<int, unsigned>, Eigen::MatrixXd> cache_;
};

}  // namespace detail

struct PovmSet {
  ReceiverSpec spec;
  int max_sector = 0;
  std::vector<std::string> labels;
  std::vector<op::BlockOperator> elements;

  int outcome_count() const { return static_cast<int>(elements.size()); }
  int index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i);
    throw std::out_of_range("PovmSet: unknown outcome label");
  }
};

// Active outcome order: (Z,00),(Z,10),(Z,01),(Z,11),(X,00),(X,10),(X,01),(X,11).
// Passive outcome order: patterns (c_H,c_V,c_D,c_A) by the binary index
// 8 c_H + 4 c_V + 2 c_D + c_A.
inline PovmSet build_bob_povm(const ReceiverSpec& spec, int max_sector) {
  spec.validate();
  if (max_sector < 0) throw std::invalid_argument("build_bob_povm: max_sector >= 0");
  PovmSet povm;
  povm.spec = spec;
  povm.max_sector = max_sector;

  if (spec.scheme == Scheme::active) {
    const std::array<std::pair<int, int>, 4> pats{{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
    for (int basis = 0; basis < 2; ++basis)
      for (auto [c1, c2] : pats) {
        povm.labels.push_back(std::string(basis == 0 ? "Z" : "X") + std::to_string(c1) +
                              std::to_string(c2));
        povm.elements.emplace_back(op::Scope::bob);
      }
    for (int n = 0; n <= max_sector; ++n) {
      detail::SubsetSyms syms(spec, n);
      int idx = 0;
      for (int basis = 0; basis < 2; ++basis) {
        const double pb = basis == 0 ? spec.basis_prob : 1.0 - spec.basis_prob;
        for (auto [c1, c2] : pats) {
          const unsigned clicked = static_cast<unsigned>(c1) | (static_cast<unsigned>(c2) << 1);
          povm.elements[idx].set_sector(n, pb * syms.pattern(basis, clicked, 0b11u));
          ++idx;
        }
      }
    }
  } else {
    for (int i = 0; i < 16; ++i) {
      std::string lab(4, '0');
      for (int d = 0; d < 4; ++d)
        if (i >> (3 - d) & 1) lab[d] = '1';
      povm.labels.push_back(lab);
      povm.elements.emplace_back(op::Scope::bob);
    }
    for (int n = 0; n <= max_sector; ++n) {
      detail::SubsetSyms syms(spec, n);
      for (int i = 0; i < 16; ++i) {
        // label index uses H as the high bit; detector bitmask uses bit d.
        unsigned clicked = 0;
        for (int d = 0; d < 4; ++d)
          if (i >> (3 - d) & 1) clicked |= 1u << d;
        povm.elements[i].set_sector(n, syms.pattern(0, clicked, 0b1111u));
      }
    }
  }
  return povm;
}

// Post-selection groups: kept single-detector key outcomes, kept double click,
// the test-basis double click, and (passive only) the cross-group click sum.
struct GroupedElements {
  op::BlockOperator m_h{op::Scope::bob};
  op::BlockOperator m_v{op::Scope::bob};
  op::BlockOperator m_hv{op::Scope::bob};
  op::BlockOperator m_da{op::Scope::bob};
  op::BlockOperator m_keep{op::Scope::bob};
  std::optional<op::BlockOperator> m_cc;
};

inline bool passive_cross_click(int label_index) {
  const bool hv = (label_index & 0b1100) != 0;
  const bool da = (label_index & 0b0011) != 0;
  return hv && da;
}

inline GroupedElements grouped_elements(const PovmSet& povm) {
  GroupedElements g;
  if (povm.spec.scheme == Scheme::active) {
    g.m_h = povm.elements[povm.index_of("Z10")];
    g.m_v = povm.elements[povm.index_of("Z01")];
    g.m_hv = povm.elements[povm.index_of("Z11")];
    g.m_da = povm.elements[povm.index_of("X11")];
  } else {
    g.m_h = povm.elements[povm.index_of("1000")];
    g.m_v = povm.elements[povm.index_of("0100")];
    g.m_hv = povm.elements[povm.index_of("1100")];
    g.m_da = povm.elements[povm.index_of("0011")];
    op::BlockOperator cc(op::Scope::bob);
    for (int n = 0; n <= povm.max_sector; ++n) {
      const int dim = povm.elements[0].sector(n).rows();
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
      for (int i = 0; i < 16; ++i)
        if (passive_cross_click(i)) acc += povm.elements[i].sector(n);
      cc.set_sector(n, acc);
    }
    g.m_cc = std::move(cc);
  }
  g.m_keep = g.m_h + g.m_v + g.m_hv;
  return g;
}

enum class BoundKind { double_click, effective_error, cross_click };

namespace detail {

// Basis-conditional click operators (active: basis-probability stripped) on a
// single sector, composed for the bound operators.
struct ConditionalClicks {
  Eigen::MatrixXd h, v, hv, d, a, da;
};

inline ConditionalClicks conditional_clicks_sector(const ReceiverSpec& spec, int n) {
  ConditionalClicks c;
  SubsetSyms syms(spec, n);
  if (spec.scheme == Scheme::active) {
    c.h = syms.pattern(0, 0b01u, 0b11u);
    c.v = syms.pattern(0, 0b10u, 0b11u);
    c.hv = syms.pattern(0, 0b11u, 0b11u);
    c.d = syms.pattern(1, 0b01u, 0b11u);
    c.a = syms.pattern(1, 0b10u, 0b11u);
    c.da = syms.pattern(1, 0b11u, 0b11u);
  } else {
    c.h = syms.pattern(0, 0b0001u, 0b1111u);
    c.v = syms.pattern(0, 0b0010u, 0b1111u);
    c.hv = syms.pattern(0, 0b0011u, 0b1111u);
    c.d = syms.pattern(0, 0b0100u, 0b1111u);
    c.a = syms.pattern(0, 0b1000u, 0b1111u);
    c.da = syms.pattern(0, 0b1100u, 0b1111u);
  }
  return c;
}

}  // namespace detail

// Single-sector bound operator. double_click and cross_click act on the
// receiver alone (their Alice part is the identity); effective_error is joint.
inline op::BlockOperator bound_operator_sector(const ReceiverSpec& spec, BoundKind kind, int n) {
  spec.validate();
  if (kind == BoundKind::cross_click) {
    if (spec.scheme != Scheme::passive)
      throw std::invalid_argument("bound_operator_sector: cross_click requires passive scheme");
    detail::SubsetSyms syms(spec, n);
    const int dim = fock::sector_dimension(spec.layout.total_modes(), n);
    // 1 - P(no click in HV group) - P(no click in DA group) + P(no click at all)
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(dim, dim) - syms.get(0, 0b0011u) -
                        syms.get(0, 0b1100u) + syms.get(0, 0b1111u);
    op::BlockOperator out(op::Scope::bob);
    out.set_sector(n, f);
    return out;
  }

  const auto c = detail::conditional_clicks_sector(spec, n);
  if (kind == BoundKind::double_click) {
    op::BlockOperator out(op::Scope::bob);
    out.set_sector(n, 0.5 * c.hv + 0.5 * c.da);
    return out;
  }

  const AlicePovm alice = build_alice_povm();
  op::BlockOperator zh(op::Scope::bob), zv(op::Scope::bob), xd(op::Scope::bob),
      xa(op::Scope::bob);
  zh.set_sector(n, c.v + 0.5 * c.hv);
  zv.set_sector(n, c.h + 0.5 * c.hv);
  xd.set_sector(n, c.a + 0.5 * c.da);
  xa.set_sector(n, c.d + 0.5 * c.da);
  op::BlockOperator f = op::alice_tensor(0.5 * alice.unweighted(0), zh);
  f += op::alice_tensor(0.5 * alice.unweighted(1), zv);
  f += op::alice_tensor(0.5 * alice.unweighted(2), xd);
  f += op::alice_tensor(0.5 * alice.unweighted(3), xa);
  return f;
}

struct BoundOperators {
  std::map<BoundKind, op::BlockOperator> ops;
  const op::BlockOperator& at(BoundKind k) const {
    auto it = ops.find(k);
    if (it == ops.end()) throw std::out_of_range("BoundOperators: kind not built");
    return it->second;
  }
};

inline std::set<BoundKind> default_bound_kinds(Scheme scheme) {
  if (scheme == Scheme::active)
    return {BoundKind::double_click, BoundKind::effective_error};
  return {BoundKind::cross_click};
}

// Bound operators with sectors 1..max_sector (sector 0 carries no clicks).
inline BoundOperators build_bound_operators(const ReceiverSpec& spec, int max_sector,
                                            std::set<BoundKind> kinds = {}) {
  if (kinds.empty()) kinds = default_bound_kinds(spec.scheme);
  BoundOperators out;
  for (BoundKind k : kinds) {
    op::BlockOperator acc(k == BoundKind::effective_error ? op::Scope::joint : op::Scope::bob);
    for (int n = 1; n <= max_sector; ++n) {
      op::BlockOperator one = bound_operator_sector(spec, k, n);
      acc.set_sector(n, one.sector(n));
    }
    out.ops.emplace(k, std::move(acc));
  }
  return out;
}

}  // namespace qkdmm::detector
