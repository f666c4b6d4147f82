#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qkdmm::fock {

// Occupation-number combinatorics for photon-number sectors, and the action
// induced on a sector by a linear mode map.
//
// A sector basis is the set of occupation vectors (k_0,...,k_{m-1}) with
// sum n, in descending lexicographic order, so the one-photon sector lists
// modes in their natural order; the dimension is C(n+m-1, n).
// A mode map T (out_modes x in_modes) substitutes creation operators,
// a_j^dag -> sum_i T_ij b_i^dag; on the n-photon sector this induces the
// n-th symmetric power Sym^n(T). Two identities carried by that construction
// are load-bearing downstream: Sym^n(A B) = Sym^n(A) Sym^n(B) for arbitrary
// matrices, and Sym^n(A)^dag = Sym^n(A^dag).

using OccVec = std::vector<int>;

inline std::uint64_t binomial_u64(int a, int b) {
  if (b < 0 || b > a) return 0;
  b = std::min(b, a - b);
  std::uint64_t r = 1;
  for (int i = 1; i <= b; ++i) r = r * static_cast<std::uint64_t>(a - b + i) / i;
  return r;
}

// Weak compositions of s into p ordered parts.
inline std::uint64_t composition_count(int s, int p) {
  if (s < 0) return 0;
  if (p == 0) return s == 0 ? 1 : 0;
  return binomial_u64(s + p - 1, p - 1);
}

inline int sector_dimension(int modes, int photons) {
  return static_cast<int>(binomial_u64(photons + modes - 1, photons));
}

// Receiver mode bookkeeping: M spatial-temporal modes, 2 polarizations each,
// canonical mode index 2m + p with p = 0 (H), 1 (V).
struct ModeLayout {
  int spatial_modes = 1;
  static constexpr int polarizations = 2;
  int total_modes() const { return polarizations * spatial_modes; }
  int index(int m, int p) const {
    if (m < 0 || m >= spatial_modes || p < 0 || p >= polarizations)
      throw std::invalid_argument("ModeLayout::index: mode out of range");
    return polarizations * m + p;
  }
};

class SectorBasis {
 public:
  SectorBasis(int modes, int photons) : modes_(modes), photons_(photons) {
    if (modes < 1 || photons < 0)
      throw std::invalid_argument("SectorBasis: modes >= 1 and photons >= 0 required");
    OccVec occ(modes, 0);
    emit(occ, 0, photons);
    sqrt_fact_.resize(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
      double s = 1.0;
      for (int k : states_[i])
        for (int j = 2; j <= k; ++j) s *= j;
      sqrt_fact_[i] = std::sqrt(s);
    }
  }

  int modes() const { return modes_; }
  int photons() const { return photons_; }
  int dim() const { return static_cast<int>(states_.size()); }
  const OccVec& state(int idx) const { return states_.at(idx); }
  const std::vector<OccVec>& states() const { return states_; }

  // sqrt(prod_i k_i!) for basis state idx; normalization between monomials in
  // creation operators and unit basis vectors.
  double sqrt_occ_factorial(int idx) const { return sqrt_fact_.at(idx); }

  // Descending-lexicographic rank, computed combinatorially.
  int rank(const OccVec& occ) const {
    if (static_cast<int>(occ.size()) != modes_)
      throw std::invalid_argument("SectorBasis::rank: wrong number of modes");
    int total = 0;
    for (int k : occ) {
      if (k < 0) throw std::invalid_argument("SectorBasis::rank: negative occupation");
      total += k;
    }
    if (total != photons_)
      throw std::invalid_argument("SectorBasis::rank: photon count mismatch");
    std::uint64_t r = 0;
    int remaining = photons_;
    for (int i = 0; i < modes_; ++i) {
      for (int k = 0; k < remaining - occ[i]; ++k)
        r += composition_count(k, modes_ - i - 1);
      remaining -= occ[i];
    }
    return static_cast<int>(r);
  }

 private:
  void emit(OccVec& occ, int pos, int left) {
    if (pos == modes_ - 1) {
      occ[pos] = left;
      states_.push_back(occ);
      return;
    }
    for (int v = left; v >= 0; --v) {
      occ[pos] = v;
      emit(occ, pos + 1, left - v);
    }
    occ[pos] = 0;
  }

  int modes_;
  int photons_;
  std::vector<OccVec> states_;
  std::vector<double> sqrt_fact_;
};

inline SectorBasis enumerate_sector(int modes, int photons) {
  return SectorBasis(modes, photons);
}

namespace detail {

// Index tables for adding one photon in mode i: level s state q -> level s+1.
inline std::vector<Eigen::MatrixXi> raise_tables(const std::vector<SectorBasis>& levels) {
  std::vector<Eigen::MatrixXi> raise(levels.size() - 1);
  const int modes = levels[0].modes();
  for (std::size_t s = 0; s + 1 < levels.size(); ++s) {
    raise[s].resize(levels[s].dim(), modes);
    for (int q = 0; q < levels[s].dim(); ++q) {
      OccVec occ = levels[s].state(q);
      for (int i = 0; i < modes; ++i) {
        ++occ[i];
        raise[s](q, i) = levels[s + 1].rank(occ);
        --occ[i];
      }
    }
  }
  return raise;
}

}  // namespace detail

// Matrix of Sym^n(T) on sector bases: rows SectorBasis(out_modes, n), columns
// SectorBasis(in_modes, n). Entry = <P| prod_j (sum_i T_ij b_i^dag)^{K_j} |0>
// * sqrt(prod P_i!) / sqrt(prod K_j!), evaluated by multiplying out the
// creation-operator polynomial one photon at a time.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sym_power(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& T, int n) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int out_modes = static_cast<int>(T.rows());
  const int in_modes = static_cast<int>(T.cols());
  if (out_modes < 1 || in_modes < 1)
    throw std::invalid_argument("sym_power: empty mode map");
  if (n < 0) throw std::invalid_argument("sym_power: negative photon number");
  if (n == 0) return Mat::Ones(1, 1);

  std::vector<SectorBasis> out_levels;
  out_levels.reserve(n + 1);
  for (int s = 0; s <= n; ++s) out_levels.emplace_back(out_modes, s);
  const auto raise = detail::raise_tables(out_levels);
  const SectorBasis in_basis(in_modes, n);

  Mat result(out_levels[n].dim(), in_basis.dim());
  std::vector<Scalar> cur, next;
  for (int col = 0; col < in_basis.dim(); ++col) {
    const OccVec& K = in_basis.state(col);
    cur.assign(1, Scalar(1));
    int level = 0;
    for (int j = 0; j < in_modes; ++j) {
      for (int rep = 0; rep < K[j]; ++rep) {
        next.assign(out_levels[level + 1].dim(), Scalar(0));
        for (int q = 0; q < out_levels[level].dim(); ++q) {
          const Scalar c = cur[q];
          if (c == Scalar(0)) continue;
          for (int i = 0; i < out_modes; ++i) {
            const Scalar t = T(i, j);
            if (t != Scalar(0)) next[raise[level](q, i)] += t * c;
          }
        }
        cur.swap(next);
        ++level;
      }
    }
    const double inv_in = 1.0 / in_basis.sqrt_occ_factorial(col);
    for (int row = 0; row < out_levels[n].dim(); ++row)
      result(row, col) = cur[row] * Scalar(out_levels[n].sqrt_occ_factorial(row) * inv_in);
  }
  return result;
}

// Lift of an isometric mode map to the n-photon sector. Rejects non-isometries;
// use sym_power directly for general (e.g. survival-weighted) mode matrices.
inline Eigen::MatrixXcd lift_mode_map(const Eigen::MatrixXcd& T, int n) {
  const Eigen::MatrixXcd gram = T.adjoint() * T;
  const double dev = (gram - Eigen::MatrixXcd::Identity(T.cols(), T.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-10)
    throw std::invalid_argument("lift_mode_map: mode map is not an isometry");
  return sym_power<std::complex<double>>(T, n);
}

// Alice (2x2) tensor sector operator, Alice-major ordering: joint index a*d + b.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> alice_kron(
    const Eigen::Matrix<Scalar, 2, 2>& a,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& b) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int d = static_cast<int>(b.rows());
  Mat out(2 * d, 2 * b.cols());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block(i * d, j * b.cols(), d, b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace qkdmm::fock
