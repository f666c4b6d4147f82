#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qkdmm/fock.hpp"

namespace qkdmm::op {

// Operators and states in this pipeline are block-diagonal across photon-number
// sectors, optionally extended by flag dimensions (one per discarded outcome).
// Scope distinguishes receiver-only operators from joint Alice x receiver ones;
// per sector the block dimension is dim_n or 2*dim_n accordingly. Flag parts
// are diagonal in the flag index: a scalar per flag for receiver scope, a 2x2
// Alice coefficient per flag for joint scope. All storage is real symmetric.

enum class Scope { bob, joint };

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m, double tol = 1e-12) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("BlockOperator: non-square block");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * scale)
    throw std::invalid_argument("BlockOperator: block is not symmetric");
  return 0.5 * (m + m.transpose());
}

class BlockOperator {
 public:
  explicit BlockOperator(Scope scope = Scope::bob) : scope_(scope) {}

  Scope scope() const { return scope_; }
  bool joint() const { return scope_ == Scope::joint; }

  void set_sector(int n, const Eigen::MatrixXd& block) {
    sectors_[n] = symmetrized(block);
  }
  bool has_sector(int n) const { return sectors_.count(n) != 0; }
  const Eigen::MatrixXd& sector(int n) const {
    auto it = sectors_.find(n);
    if (it == sectors_.end())
      throw std::out_of_range("BlockOperator: sector not present");
    return it->second;
  }
  const std::map<int, Eigen::MatrixXd>& sectors() const { return sectors_; }
  int max_sector() const { return sectors_.empty() ? -1 : sectors_.rbegin()->first; }

  int flag_count() const {
    return joint() ? static_cast<int>(flag_alice_.size()) : static_cast<int>(flag_diag_.size());
  }
  void set_flag_diag(const Eigen::VectorXd& d) {
    if (joint()) throw std::invalid_argument("BlockOperator: scalar flags need bob scope");
    flag_diag_ = d;
  }
  const Eigen::VectorXd& flag_diag() const { return flag_diag_; }
  void set_flag_alice(std::vector<Eigen::Matrix2d> blocks) {
    if (!joint()) throw std::invalid_argument("BlockOperator: 2x2 flags need joint scope");
    for (auto& b : blocks) b = 0.5 * (b + b.transpose()).eval();
    flag_alice_ = std::move(blocks);
  }
  const std::vector<Eigen::Matrix2d>& flag_alice() const { return flag_alice_; }

  BlockOperator& operator+=(const BlockOperator& other) {
    require_same_shape(other);
    for (const auto& [n, b] : other.sectors_) {
      auto it = sectors_.find(n);
      if (it == sectors_.end())
        sectors_[n] = b;
      else
        it->second += b;
    }
    if (other.flag_diag_.size()) {
      if (!flag_diag_.size())
        flag_diag_ = other.flag_diag_;
      else
        flag_diag_ += other.flag_diag_;
    }
    if (!other.flag_alice_.empty()) {
      if (flag_alice_.empty())
        flag_alice_ = other.flag_alice_;
      else
        for (std::size_t y = 0; y < flag_alice_.size(); ++y) flag_alice_[y] += other.flag_alice_[y];
    }
    return *this;
  }

  BlockOperator& operator*=(double s) {
    for (auto& [n, b] : sectors_) b *= s;
    flag_diag_ *= s;
    for (auto& f : flag_alice_) f *= s;
    return *this;
  }

  friend BlockOperator operator+(BlockOperator a, const BlockOperator& b) { return a += b; }
  friend BlockOperator operator*(double s, BlockOperator a) { return a *= s; }

  double trace() const {
    double t = 0;
    for (const auto& [n, b] : sectors_) t += b.trace();
    t += flag_diag_.sum();
    for (const auto& f : flag_alice_) t += f.trace();
    return t;
  }

  // Hilbert-Schmidt pairing; missing sectors on either side count as zero.
  double inner(const BlockOperator& other) const {
    if (scope_ != other.scope_)
      throw std::invalid_argument("BlockOperator::inner: scope mismatch");
    double t = 0;
    for (const auto& [n, b] : sectors_) {
      auto it = other.sectors_.find(n);
      if (it != other.sectors_.end()) t += (b.array() * it->second.array()).sum();
    }
    if (flag_diag_.size() && other.flag_diag_.size())
      t += flag_diag_.dot(other.flag_diag_);
    if (!flag_alice_.empty() && !other.flag_alice_.empty())
      for (std::size_t y = 0; y < flag_alice_.size(); ++y)
        t += (flag_alice_[y].array() * other.flag_alice_[y].array()).sum();
    return t;
  }

  double min_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    for (const auto& [n, b] : sectors_) {
      es.compute(b, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    if (flag_diag_.size()) lo = std::min(lo, flag_diag_.minCoeff());
    for (const auto& f : flag_alice_) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> e2(f, Eigen::EigenvaluesOnly);
      lo = std::min(lo, e2.eigenvalues().minCoeff());
    }
    return lo;
  }

 private:
  void require_same_shape(const BlockOperator& other) const {
    if (scope_ != other.scope_)
      throw std::invalid_argument("BlockOperator: scope mismatch");
    if (flag_count() && other.flag_count() && flag_count() != other.flag_count())
      throw std::invalid_argument("BlockOperator: flag count mismatch");
  }

  Scope scope_;
  std::map<int, Eigen::MatrixXd> sectors_;
  Eigen::VectorXd flag_diag_;
  std::vector<Eigen::Matrix2d> flag_alice_;
};

// Joint operator a (x) B, including a * v_y on any flag dimensions.
inline BlockOperator alice_tensor(const Eigen::Matrix2d& a, const BlockOperator& bob) {
  if (bob.joint()) throw std::invalid_argument("alice_tensor: operand already joint");
  BlockOperator out(Scope::joint);
  for (const auto& [n, b] : bob.sectors())
    out.set_sector(n, fock::alice_kron<double>(a, b));
  if (bob.flag_diag().size()) {
    std::vector<Eigen::Matrix2d> flags(bob.flag_diag().size());
    for (int y = 0; y < bob.flag_diag().size(); ++y) flags[y] = bob.flag_diag()(y) * a;
    out.set_flag_alice(std::move(flags));
  }
  return out;
}

}  // namespace qkdmm::op
