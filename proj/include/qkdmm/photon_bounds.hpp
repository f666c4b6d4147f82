#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qkdmm/block_operator.hpp"
#include "qkdmm/detector.hpp"

namespace qkdmm::bounds {

// Observation-driven photon-number bounds. Each bound operator F restricted to
// the n-photon sector has a minimum expectation over states, which is simply
// its smallest eigenvalue (the feasible set is all unit-trace PSD operators).
// If the per-sector minima grow with n, an observed rate caps the weight the
// state can carry above a sector, yielding lower bounds b_j on the weight in
// sectors 0..j. The growth is verified numerically per specification, never
// assumed.

// Minimum of Tr(rho F^(n)) over unit-trace PSD rho, clamped at zero (the
// operators are positive semidefinite; negatives are numerical noise).
inline double min_sector_rate(const op::BlockOperator& f, int n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.sector(n), Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().minCoeff());
}

struct SectorMinima {
  detector::Scheme scheme = detector::Scheme::active;
  int n_max = 0;
  std::map<detector::BoundKind, std::vector<double>> minima;  // [kind][n-1], n = 1..n_max

  double at(detector::BoundKind kind, int n) const {
    auto it = minima.find(kind);
    if (it == minima.end()) throw std::out_of_range("SectorMinima: kind not computed");
    if (n < 1 || n > n_max) throw std::out_of_range("SectorMinima: sector out of range");
    return it->second[static_cast<std::size_t>(n - 1)];
  }
  bool has(detector::BoundKind kind) const { return minima.count(kind) != 0; }
};

inline SectorMinima compute_minima(const detector::ReceiverSpec& spec, int n_max,
                                   std::set<detector::BoundKind> kinds = {}) {
  spec.validate();
  if (n_max < 1) throw std::invalid_argument("compute_minima: n_max >= 1 required");
  if (kinds.empty()) kinds = detector::default_bound_kinds(spec.scheme);
  SectorMinima out;
  out.scheme = spec.scheme;
  out.n_max = n_max;
  for (auto kind : kinds) {
    std::vector<double> v;
    v.reserve(n_max);
    for (int n = 1; n <= n_max; ++n)
      v.push_back(min_sector_rate(detector::bound_operator_sector(spec, kind, n), n));
    out.minima.emplace(kind, std::move(v));
  }
  return out;
}

// Relations checked: the n >= 3 minima must not dip below the n = 3 value for
// every kind; additionally the effective-error and cross-click minima at
// n >= 2 must not dip below their two-sector floor.
struct MonotonicityReport {
  bool all_ok = true;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      all_ok = false;
      failures.push_back(what);
    }
  }
};

inline MonotonicityReport verify_monotonicity(const SectorMinima& m, double slack = 1e-9) {
  if (m.n_max < 3)
    throw std::invalid_argument("verify_monotonicity: minima up to n >= 3 required");
  MonotonicityReport rep;
  using detector::BoundKind;

  auto floor3 = [&](BoundKind kind, const char* name) {
    const double anchor = m.at(kind, 3);
    for (int n = 3; n <= m.n_max; ++n)
      rep.require(m.at(kind, n) >= anchor - slack,
                  std::string(name) + " dips below its n=3 value at n=" + std::to_string(n));
  };
  auto floor2 = [&](BoundKind kind, const char* name) {
    const double anchor = std::min(m.at(kind, 2), m.at(kind, 3));
    for (int n = 2; n <= m.n_max; ++n)
      rep.require(m.at(kind, n) >= anchor - slack,
                  std::string(name) + " dips below its two-sector floor at n=" + std::to_string(n));
  };

  if (m.scheme == detector::Scheme::active) {
    floor3(BoundKind::double_click, "double-click minimum");
    floor3(BoundKind::effective_error, "effective-error minimum");
    floor2(BoundKind::effective_error, "effective-error minimum");
  } else {
    floor3(BoundKind::cross_click, "cross-click minimum");
    floor2(BoundKind::cross_click, "cross-click minimum");
  }
  return rep;
}

struct PhotonBounds {
  double b1 = 0.0;  // certified lower bound on the weight of sectors 0..1
  double b2 = 0.0;  // certified lower bound on the weight of sectors 0..2
  double d_obs = std::numeric_limits<double>::quiet_NaN();
  double e_obs = std::numeric_limits<double>::quiet_NaN();
  double c_obs = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Observed rate over a sector minimum; a vanishing minimum means the
// observable carries no information about that tail (ratio +inf).
inline double info_ratio(double obs, double denom) {
  if (denom < 1e-12) return std::numeric_limits<double>::infinity();
  return obs / denom;
}

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace detail

inline PhotonBounds bounds_active(double d_obs, double e_obs, const SectorMinima& m) {
  if (d_obs < -1e-9 || e_obs < -1e-9)
    throw std::invalid_argument("bounds_active: observed rates must be nonnegative");
  d_obs = std::max(0.0, d_obs);  // tolerate cancellation noise in exact zeros
  e_obs = std::max(0.0, e_obs);
  using detector::BoundKind;
  PhotonBounds out;
  out.d_obs = d_obs;
  out.e_obs = e_obs;
  const double d3 = m.at(BoundKind::double_click, 3);
  const double e3 = m.at(BoundKind::effective_error, 3);
  const double e_floor = std::min(m.at(BoundKind::effective_error, 2), e3);
  out.b2 = detail::clamp01(
      1.0 - std::min(detail::info_ratio(d_obs, d3), detail::info_ratio(e_obs, e3)));
  out.b1 = detail::clamp01(1.0 - detail::info_ratio(e_obs, e_floor));
  out.b1 = std::min(out.b1, out.b2);
  return out;
}

inline PhotonBounds bounds_passive(double c_obs, const SectorMinima& m) {
  if (c_obs < -1e-9)
    throw std::invalid_argument("bounds_passive: observed rate must be nonnegative");
  c_obs = std::max(0.0, c_obs);  // tolerate cancellation noise in exact zeros
  using detector::BoundKind;
  PhotonBounds out;
  out.c_obs = c_obs;
  const double c3 = m.at(BoundKind::cross_click, 3);
  const double c2 = m.at(BoundKind::cross_click, 2);
  out.b2 = detail::clamp01(1.0 - detail::info_ratio(c_obs, c3));
  out.b1 = detail::clamp01(1.0 - detail::info_ratio(c_obs, c2));
  out.b1 = std::min(out.b1, out.b2);
  return out;
}

}  // namespace qkdmm::bounds
