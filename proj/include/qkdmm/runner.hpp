// Command implementations behind the CLI: verification report, simulation and
// photon-bound JSON dumps, single key-rate solves, and parameter sweeps with
// a thread pool. Everything is deterministic for a fixed config, including
// sweep output under any worker count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qkdmm/channel.hpp"
#include "qkdmm/config.hpp"
#include "qkdmm/detector.hpp"
#include "qkdmm/keyrate.hpp"
#include "qkdmm/photon_bounds.hpp"
#include "qkdmm/squasher.hpp"

namespace qkdmm::runner {

using json = nlohmann::ordered_json;

// exit codes: 0 ok, 1 config error, 2 verification failure, 3 solver failure
struct CommandOutcome {
  int exit_code = 0;
  std::string text;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

inline keyrate::KeyRateOptions options_for(const config::AnalysisSpec& a) {
  keyrate::KeyRateOptions opt;
  opt.fw_max_iter = a.fw_max_iter;
  opt.fw_gap_tol = a.fw_gap_tol;
  opt.fw_gap_rel = a.fw_gap_rel;
  opt.conic_tol = a.conic_tol;
  opt.epsilon = a.epsilon;
  return opt;
}

inline const char* kind_name(detector::BoundKind k) {
  switch (k) {
    case detector::BoundKind::double_click: return "double_click";
    case detector::BoundKind::effective_error: return "effective_error";
    case detector::BoundKind::cross_click: return "cross_click";
  }
  return "unknown";
}

// Random unit-trace joint state over sectors 0..max_n (verification helper;
// seeded deterministically by the caller).
inline op::BlockOperator random_joint_state(const detector::ReceiverSpec& spec, int max_n,
                                            std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  op::BlockOperator state(op::Scope::joint);
  double tr = 0.0;
  for (int n = 0; n <= max_n; ++n) {
    const int d = 2 * fock::sector_dimension(spec.layout.total_modes(), n);
    Eigen::MatrixXd r(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) r(i, j) = g(rng);
    state.set_sector(n, Eigen::MatrixXd(r * r.transpose()));
    tr += state.sector(n).trace();
  }
  op::BlockOperator scaled(op::Scope::joint);
  for (const auto& [n, b] : state.sectors()) scaled.set_sector(n, b / tr);
  return scaled;
}

inline json stats_json(const channel::ObservedStats& st) {
  json table = json::object();
  for (std::size_t a = 0; a < st.alice_labels.size(); ++a) {
    json row = json::object();
    for (std::size_t b = 0; b < st.bob_labels.size(); ++b)
      row[st.bob_labels[b]] = st.p_table(static_cast<Eigen::Index>(a),
                                         static_cast<Eigen::Index>(b));
    table[st.alice_labels[a]] = row;
  }
  json out = json::object();
  out["p_table"] = table;
  out["d_obs"] = st.d_obs;
  out["e_obs"] = st.e_obs;
  out["c_obs"] = st.c_obs;
  out["p_pass"] = st.p_pass;
  out["e_sift"] = st.e_sift;
  out["p_det"] = st.p_det;
  return out;
}

inline json keyrate_json(const keyrate::KeyRateResult& kr) {
  json out = json::object();
  out["beta"] = kr.beta;
  out["leak_ec"] = kr.leak_ec;
  out["key_rate_lb"] = kr.key_rate_lb;
  out["fw_gap"] = kr.fw_gap;
  out["iterations"] = kr.iterations;
  out["epsilon"] = kr.epsilon;
  out["status"] = kr.status;
  return out;
}

struct BoundsOutcome {
  bounds::SectorMinima minima;
  bounds::MonotonicityReport mono;
  bounds::PhotonBounds pb;
};

// Certified photon bounds for the configured scenario. Requires sector
// minima up to n = 3; the monotonicity verdict is the working assumption the
// bounds rest on, so callers must check it before using pb.
inline BoundsOutcome certified_bounds(const detector::ReceiverSpec& spec,
                                      const channel::ObservedStats& st,
                                      int n_max_bounds) {
  if (n_max_bounds < 3)
    throw config::ConfigError(
        "config: analysis.n_max_bounds must be at least 3 to certify photon bounds");
  BoundsOutcome out;
  out.minima = bounds::compute_minima(spec, n_max_bounds);
  out.mono = bounds::verify_monotonicity(out.minima);
  out.pb = spec.scheme == detector::Scheme::active
               ? bounds::bounds_active(st.d_obs, st.e_obs, out.minima)
               : bounds::bounds_passive(st.c_obs, out.minima);
  return out;
}

struct PointResult {
  std::optional<double> b1, b2;
  keyrate::KeyRateResult kr;
  std::string status = "not_run";
};

// Full per-point pipeline: simulate, certify photon bounds (flag mode), and
// solve. Throws ConfigError only for configuration-level problems; solver and
// verification troubles land in the status string.
inline PointResult run_point(const config::ScenarioConfig& cfg) {
  PointResult out;
  const detector::ReceiverSpec spec = config::receiver_for(cfg);
  const channel::ChannelParams params = config::channel_for(cfg);
  const channel::SimulationResult sim = channel::simulate(spec, params);

  keyrate::KeyRateProblem kp;
  if (cfg.analysis.mode == config::AnalysisMode::flag) {
    const BoundsOutcome bo = certified_bounds(spec, sim.stats, cfg.analysis.n_max_bounds);
    if (!bo.mono.all_ok) {
      out.status = "monotonicity_failed";
      return out;
    }
    out.b1 = bo.pb.b1;
    out.b2 = bo.pb.b2;
    kp = keyrate::build_flag_problem(spec, cfg.analysis.flag_k, sim, bo.pb);
  } else {
    kp = keyrate::build_cutoff_problem(spec, sim);
  }
  out.kr = keyrate::solve(kp, options_for(cfg.analysis));
  out.status = out.kr.status;
  return out;
}

inline int worker_count(int points) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  int n = std::min<int>(static_cast<int>(hw), points);
  if (const char* env = std::getenv("QKDMM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1)
      n = std::min<int>(static_cast<int>(std::min<long>(v, 256)), points);
  }
  return std::max(1, n);
}

}  // namespace detail

inline double sweep_value(const config::SweepSpec& sw, int i) {
  if (sw.steps == 1) return sw.from;
  return sw.from + (sw.to - sw.from) * static_cast<double>(i) /
                       static_cast<double>(sw.steps - 1);
}

// A sweep point is an ordinary single-point config with the swept parameter
// substituted in.
inline config::ScenarioConfig sweep_point(const config::ScenarioConfig& base, double v) {
  config::ScenarioConfig cfg = base;
  if (!base.sweep) throw config::ConfigError("config: sweep block required");
  switch (base.sweep->parameter) {
    case config::SweepParameter::eta2:
      cfg.mismatch.eta2 = v;
      break;
    case config::SweepParameter::distance_km:
      cfg.sim.t.reset();
      cfg.sim.t_eta.reset();
      cfg.sim.distance_km = v;
      break;
    case config::SweepParameter::eta_all: {
      const double t = *base.sim.t_eta / v;
      if (t > 1.0)
        throw config::ConfigError("config: t_eta/eta exceeds 1 at eta = " + detail::fmt(v));
      cfg.mismatch.eta1 = v;
      cfg.mismatch.eta2 = v;
      cfg.sim.t_eta.reset();
      cfg.sim.t = t;
      break;
    }
  }
  cfg.sweep.reset();
  return cfg;
}

inline CommandOutcome cmd_simulate(const config::ScenarioConfig& cfg) {
  const detector::ReceiverSpec spec = config::receiver_for(cfg);
  const channel::SimulationResult sim = channel::simulate(spec, config::channel_for(cfg));
  return {0, detail::stats_json(sim.stats).dump(2) + "\n"};
}

inline CommandOutcome cmd_bounds(const config::ScenarioConfig& cfg) {
  const detector::ReceiverSpec spec = config::receiver_for(cfg);
  const channel::SimulationResult sim = channel::simulate(spec, config::channel_for(cfg));
  const detail::BoundsOutcome bo =
      detail::certified_bounds(spec, sim.stats, cfg.analysis.n_max_bounds);

  json out = json::object();
  out["b1"] = bo.pb.b1;
  out["b2"] = bo.pb.b2;
  out["d_obs"] = sim.stats.d_obs;
  out["e_obs"] = sim.stats.e_obs;
  out["c_obs"] = sim.stats.c_obs;
  json minima = json::object();
  for (const auto& [kind, values] : bo.minima.minima) minima[detail::kind_name(kind)] = values;
  out["minima"] = minima;
  out["monotonicity_ok"] = bo.mono.all_ok;
  out["monotonicity_failures"] = bo.mono.failures;
  return {bo.mono.all_ok ? 0 : 2, out.dump(2) + "\n"};
}

inline CommandOutcome cmd_keyrate(const config::ScenarioConfig& cfg) {
  const detail::PointResult pr = detail::run_point(cfg);
  if (pr.status == "monotonicity_failed") {
    json err = json::object();
    err["error"] = "photon-bound monotonicity check failed; run the verify command";
    return {2, err.dump(2) + "\n"};
  }
  const bool solver_failed = pr.kr.status.rfind("solver_failure", 0) == 0;
  return {solver_failed ? 3 : 0, detail::keyrate_json(pr.kr).dump(2) + "\n"};
}

inline CommandOutcome cmd_verify(const config::ScenarioConfig& cfg) {
  const detector::ReceiverSpec spec = config::receiver_for(cfg);
  json report = json::object();
  bool passed = true;

  // POVM structure: completeness and positivity over sectors 0..3.
  {
    const int top = 3;
    const detector::PovmSet povm = detector::build_bob_povm(spec, top);
    double completeness = 0.0;
    double min_eig = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= top; ++n) {
      const int dim = fock::sector_dimension(spec.layout.total_modes(), n);
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
      for (const auto& el : povm.elements) {
        sum += el.sector(n);
        const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                              el.sector(n), Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .minCoeff();
        min_eig = std::min(min_eig, lo);
      }
      completeness = std::max(
          completeness, (sum - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff());
    }
    const bool ok = completeness < 1e-10 && min_eig > -1e-12;
    passed = passed && ok;
    json j = json::object();
    j["sectors_checked"] = top;
    j["max_completeness_deviation"] = completeness;
    j["min_eigenvalue"] = min_eig;
    j["passed"] = ok;
    report["povm"] = j;
  }

  // Squashing identity: Tr(rho M_y) is preserved for random block-diagonal
  // states reaching two sectors past the cut.
  {
    const int k = cfg.analysis.flag_k;
    const int top = k + 2;
    const detector::PovmSet povm = detector::build_bob_povm(spec, top);
    const squash::SquashedSpace space = squash::SquashedSpace::make(spec, k);
    const auto squashed_povm = squash::squash_povm(povm, space);
    const auto alice = detector::build_alice_povm();
    std::mt19937_64 rng(0x51d2f7a1c3e5b897ull);
    double worst = 0.0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
      const auto state = detail::random_joint_state(spec, top, rng);
      const auto squashed = squash::squash_state(state, povm, space);
      for (int x = 0; x < 4; ++x)
        for (int y = 0; y < povm.outcome_count(); ++y) {
          const auto full = op::alice_tensor(alice.element(x), povm.elements[y]);
          const auto red = op::alice_tensor(alice.element(x), squashed_povm[y]);
          worst = std::max(worst, std::abs(state.inner(full) - squashed.inner(red)));
        }
    }
    const bool ok = worst < 1e-10;
    passed = passed && ok;
    json j = json::object();
    j["trials"] = trials;
    j["max_probability_deviation"] = worst;
    j["flag_k"] = k;
    j["passed"] = ok;
    report["squashing"] = j;
  }

  // Sector-minima monotonicity (the working assumption behind the photon
  // bounds); needs at least three sectors to say anything.
  {
    json j = json::object();
    if (cfg.analysis.n_max_bounds < 3) {
      j["status"] = "insufficient range";
      j["n_max_bounds"] = cfg.analysis.n_max_bounds;
    } else {
      const auto minima = bounds::compute_minima(spec, cfg.analysis.n_max_bounds);
      const auto mono = bounds::verify_monotonicity(minima);
      j["status"] = mono.all_ok ? "ok" : "failed";
      j["n_max_bounds"] = cfg.analysis.n_max_bounds;
      j["failures"] = mono.failures;
      passed = passed && mono.all_ok;
    }
    report["monotonicity"] = j;
  }

  report["passed"] = passed;
  return {passed ? 0 : 2, report.dump(2) + "\n"};
}

inline CommandOutcome cmd_sweep(const config::ScenarioConfig& cfg) {
  if (!cfg.sweep) throw config::ConfigError("config: the sweep command needs a sweep block");
  const int points = cfg.sweep->steps;

  struct Row {
    double value = 0.0;
    detail::PointResult pr;
  };
  std::vector<Row> rows(static_cast<std::size_t>(points));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next.fetch_add(1)) < points;) {
      Row& row = rows[static_cast<std::size_t>(i)];
      row.value = sweep_value(*cfg.sweep, i);
      try {
        row.pr = detail::run_point(sweep_point(cfg, row.value));
      } catch (const config::ConfigError& e) {
        row.pr.status = std::string("config_error: ") + e.what();
      } catch (const std::exception& e) {
        row.pr.status = std::string("error: ") + e.what();
      }
    }
  };
  const int workers = detail::worker_count(points);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::string csv =
      "param_value,b1,b2,beta,leak_ec,key_rate_lb,key_rate_lb_clamped,fw_gap,status\n";
  int ok_rows = 0;
  for (const Row& row : rows) {
    csv += detail::fmt(row.value);
    if (row.pr.status == "ok") {
      ++ok_rows;
      csv += ',';
      if (row.pr.b1) csv += detail::fmt(*row.pr.b1);
      csv += ',';
      if (row.pr.b2) csv += detail::fmt(*row.pr.b2);
      const keyrate::KeyRateResult& kr = row.pr.kr;
      csv += ',' + detail::fmt(kr.beta) + ',' + detail::fmt(kr.leak_ec) + ',' +
             detail::fmt(kr.key_rate_lb) + ',' + detail::fmt(std::max(0.0, kr.key_rate_lb)) +
             ',' + detail::fmt(kr.fw_gap) + ",ok\n";
    } else {
      csv += ",,,,,,,," + detail::csv_safe(row.pr.status) + "\n";
    }
  }
  return {ok_rows > 0 ? 0 : 3, csv};
}

inline CommandOutcome run_command(const std::string& name, const config::ScenarioConfig& cfg) {
  if (name == "verify") return cmd_verify(cfg);
  if (name == "simulate") return cmd_simulate(cfg);
  if (name == "bounds") return cmd_bounds(cfg);
  if (name == "keyrate") return cmd_keyrate(cfg);
  if (name == "sweep") return cmd_sweep(cfg);
  throw config::ConfigError("config: unknown command \"" + name + "\"");
}

}  // namespace qkdmm::runner
