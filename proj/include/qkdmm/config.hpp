// Scenario configuration: a single JSON document describing the receiver,
// the simulated channel, the analysis knobs, and an optional parameter sweep.
// Parsing is strict: unknown keys, wrong types, and out-of-range values are
// rejected with a descriptive ConfigError so a typo never runs silently.
#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "../../vendor/json.hpp"
#include "qkdmm/channel.hpp"
#include "qkdmm/detector.hpp"

namespace qkdmm::config {

using json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MismatchSpec {
  double eta1 = 1.0;
  double eta2 = 1.0;
  bool mode_dependent = false;
};

struct SimSpec {
  double omega = 0.0;
  double r = 0.0;
  std::optional<double> t;
  std::optional<double> distance_km;
  std::optional<double> t_eta;  // fixed t*eta product, eta_all sweeps only
  int m_resend = 2;
};

enum class AnalysisMode { flag, cutoff };

struct AnalysisSpec {
  AnalysisMode mode = AnalysisMode::flag;
  int flag_k = 2;
  int n_max_bounds = 4;
  int fw_max_iter = 1500;
  double fw_gap_tol = 1e-5;
  double fw_gap_rel = 2e-3;
  double conic_tol = 1e-8;
  double epsilon = 1e-12;
};

enum class SweepParameter { eta2, distance_km, eta_all };

struct SweepSpec {
  SweepParameter parameter = SweepParameter::eta2;
  double from = 0.0;
  double to = 0.0;
  int steps = 1;  // number of grid points, endpoints inclusive
};

struct ScenarioConfig {
  detector::Scheme scheme = detector::Scheme::active;
  int spatial_modes = 1;
  MismatchSpec mismatch;
  SimSpec sim;
  AnalysisSpec analysis;
  std::optional<SweepSpec> sweep;
  std::optional<double> basis_prob;  // active scheme only
};

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw ConfigError("config: " + what); }

inline const json& member(const json& obj, const char* key, const char* ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string(ctx) + ": missing required key \"" + key + "\"");
  return *it;
}

inline void expect_object(const json& v, const char* ctx) {
  if (!v.is_object()) fail(std::string(ctx) + ": expected a JSON object");
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const char* ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(std::string(ctx) + ": unknown key \"" + it.key() + "\"");
  }
}

inline double as_number(const json& v, const char* ctx) {
  if (!v.is_number()) fail(std::string(ctx) + ": expected a number");
  return v.get<double>();
}

inline int as_int(const json& v, const char* ctx) {
  if (!v.is_number_integer()) fail(std::string(ctx) + ": expected an integer");
  return v.get<int>();
}

inline bool as_bool(const json& v, const char* ctx) {
  if (!v.is_boolean()) fail(std::string(ctx) + ": expected a boolean");
  return v.get<bool>();
}

inline std::string as_string(const json& v, const char* ctx) {
  if (!v.is_string()) fail(std::string(ctx) + ": expected a string");
  return v.get<std::string>();
}

inline double number_in(const json& obj, const char* key, const char* ctx, double lo,
                        double hi) {
  const double v = as_number(member(obj, key, ctx), key);
  if (!(v >= lo && v <= hi)) {
    std::ostringstream os;
    os << ctx << "." << key << " = " << v << " outside [" << lo << ", " << hi << "]";
    fail(os.str());
  }
  return v;
}

}  // namespace detail

inline ScenarioConfig parse_config(const json& root) {
  using namespace detail;
  expect_object(root, "top level");
  reject_unknown(root,
                 {"scheme", "M", "mismatch", "sim", "analysis", "sweep", "basis_prob"},
                 "top level");

  ScenarioConfig cfg;

  const std::string scheme = as_string(member(root, "scheme", "top level"), "scheme");
  if (scheme == "active")
    cfg.scheme = detector::Scheme::active;
  else if (scheme == "passive")
    cfg.scheme = detector::Scheme::passive;
  else
    fail("scheme must be \"active\" or \"passive\", got \"" + scheme + "\"");

  cfg.spatial_modes = as_int(member(root, "M", "top level"), "M");
  const bool active = cfg.scheme == detector::Scheme::active;
  if (active && cfg.spatial_modes != 1 && cfg.spatial_modes != 2)
    fail("active scheme supports M = 1 or 2");
  if (!active && cfg.spatial_modes != 1 && cfg.spatial_modes != 4)
    fail("passive scheme supports M = 1 or 4");

  {
    const json& m = member(root, "mismatch", "top level");
    expect_object(m, "mismatch");
    reject_unknown(m, {"eta1", "eta2", "mode_dependent"}, "mismatch");
    cfg.mismatch.eta1 = number_in(m, "eta1", "mismatch", 0.0, 1.0);
    cfg.mismatch.eta2 = number_in(m, "eta2", "mismatch", 0.0, 1.0);
    if (cfg.mismatch.eta2 > cfg.mismatch.eta1)
      fail("mismatch requires eta2 <= eta1");
    if (m.contains("mode_dependent"))
      cfg.mismatch.mode_dependent = as_bool(m["mode_dependent"], "mode_dependent");
    const int detectors = active ? 2 : 4;
    if (cfg.mismatch.mode_dependent && cfg.spatial_modes != detectors)
      fail("mode_dependent mismatch requires M equal to the detector count (" +
           std::to_string(detectors) + ")");
  }

  {
    const json& s = member(root, "sim", "top level");
    expect_object(s, "sim");
    reject_unknown(s, {"omega", "r", "t", "distance_km", "t_eta", "m_resend"}, "sim");
    cfg.sim.omega = number_in(s, "omega", "sim", 0.0, 1.0);
    cfg.sim.r = number_in(s, "r", "sim", 0.0, 1.0);
    if (s.contains("t")) cfg.sim.t = number_in(s, "t", "sim", 0.0, 1.0);
    if (s.contains("distance_km")) {
      const double km = as_number(s["distance_km"], "distance_km");
      if (km < 0) fail("sim.distance_km must be nonnegative");
      cfg.sim.distance_km = km;
    }
    if (s.contains("t_eta")) {
      const double te = as_number(s["t_eta"], "t_eta");
      if (!(te > 0.0 && te <= 1.0)) fail("sim.t_eta must lie in (0, 1]");
      cfg.sim.t_eta = te;
    }
    if (s.contains("m_resend")) {
      cfg.sim.m_resend = as_int(s["m_resend"], "m_resend");
      if (cfg.sim.m_resend != 2) fail("sim.m_resend: only the two-photon resend is supported");
    }
  }

  {
    const json& a = member(root, "analysis", "top level");
    expect_object(a, "analysis");
    reject_unknown(a,
                   {"mode", "flag_k", "n_max_bounds", "fw_max_iter", "fw_gap_tol",
                    "fw_gap_rel", "conic_tol", "epsilon"},
                   "analysis");
    if (a.contains("mode")) {
      const std::string mode = as_string(a["mode"], "mode");
      if (mode == "flag")
        cfg.analysis.mode = AnalysisMode::flag;
      else if (mode == "cutoff")
        cfg.analysis.mode = AnalysisMode::cutoff;
      else
        fail("analysis.mode must be \"flag\" or \"cutoff\", got \"" + mode + "\"");
    }
    if (a.contains("flag_k")) {
      cfg.analysis.flag_k = as_int(a["flag_k"], "flag_k");
      if (cfg.analysis.flag_k != 1 && cfg.analysis.flag_k != 2)
        fail("analysis.flag_k must be 1 or 2");
    }
    if (a.contains("n_max_bounds")) {
      cfg.analysis.n_max_bounds = as_int(a["n_max_bounds"], "n_max_bounds");
      if (cfg.analysis.n_max_bounds < 2) fail("analysis.n_max_bounds must be at least 2");
    }
    if (a.contains("fw_max_iter")) {
      cfg.analysis.fw_max_iter = as_int(a["fw_max_iter"], "fw_max_iter");
      if (cfg.analysis.fw_max_iter < 1) fail("analysis.fw_max_iter must be positive");
    }
    if (a.contains("fw_gap_tol")) {
      cfg.analysis.fw_gap_tol = as_number(a["fw_gap_tol"], "fw_gap_tol");
      if (!(cfg.analysis.fw_gap_tol > 0)) fail("analysis.fw_gap_tol must be positive");
    }
    if (a.contains("fw_gap_rel")) {
      cfg.analysis.fw_gap_rel = as_number(a["fw_gap_rel"], "fw_gap_rel");
      if (!(cfg.analysis.fw_gap_rel > 0)) fail("analysis.fw_gap_rel must be positive");
    }
    if (a.contains("conic_tol")) {
      cfg.analysis.conic_tol = as_number(a["conic_tol"], "conic_tol");
      if (!(cfg.analysis.conic_tol > 0)) fail("analysis.conic_tol must be positive");
    }
    if (a.contains("epsilon")) {
      cfg.analysis.epsilon = as_number(a["epsilon"], "epsilon");
      if (!(cfg.analysis.epsilon > 0)) fail("analysis.epsilon must be positive");
    }
  }

  if (root.contains("sweep")) {
    const json& w = root["sweep"];
    expect_object(w, "sweep");
    reject_unknown(w, {"parameter", "from", "to", "steps"}, "sweep");
    SweepSpec sw;
    const std::string par = as_string(member(w, "parameter", "sweep"), "parameter");
    if (par == "eta2")
      sw.parameter = SweepParameter::eta2;
    else if (par == "distance_km")
      sw.parameter = SweepParameter::distance_km;
    else if (par == "eta_all")
      sw.parameter = SweepParameter::eta_all;
    else
      fail("sweep.parameter must be \"eta2\", \"distance_km\", or \"eta_all\"");
    sw.from = as_number(member(w, "from", "sweep"), "from");
    sw.to = as_number(member(w, "to", "sweep"), "to");
    sw.steps = as_int(member(w, "steps", "sweep"), "steps");
    if (sw.steps < 1) fail("sweep.steps must be at least 1");
    const double lo = std::min(sw.from, sw.to);
    const double hi = std::max(sw.from, sw.to);
    switch (sw.parameter) {
      case SweepParameter::eta2:
        if (lo < 0.0) fail("sweep over eta2: values must be nonnegative");
        if (hi > cfg.mismatch.eta1) fail("sweep over eta2: values must stay below eta1");
        break;
      case SweepParameter::distance_km:
        if (lo < 0.0) fail("sweep over distance_km: values must be nonnegative");
        break;
      case SweepParameter::eta_all:
        if (!(lo > 0.0) || hi > 1.0) fail("sweep over eta_all: values must lie in (0, 1]");
        break;
    }
    cfg.sweep = sw;
  }

  if (root.contains("basis_prob")) {
    if (!active) fail("basis_prob applies to the active scheme only");
    const double p = as_number(root["basis_prob"], "basis_prob");
    if (!(p > 0.0 && p < 1.0)) fail("basis_prob must lie in (0, 1)");
    cfg.basis_prob = p;
  }

  // Channel-transmission bookkeeping: exactly one way of fixing t must be in
  // play, and eta_all sweeps fix the product t*eta instead of t itself.
  const bool sweeps_distance =
      cfg.sweep && cfg.sweep->parameter == SweepParameter::distance_km;
  const bool sweeps_eta_all = cfg.sweep && cfg.sweep->parameter == SweepParameter::eta_all;
  const int given = int(cfg.sim.t.has_value()) + int(cfg.sim.distance_km.has_value()) +
                    int(cfg.sim.t_eta.has_value());
  if (sweeps_distance) {
    if (given != 0)
      fail("sweep over distance_km sets the transmission per point; remove sim.t, "
           "sim.distance_km, and sim.t_eta");
  } else if (sweeps_eta_all) {
    if (!cfg.sim.t_eta || given != 1)
      fail("sweep over eta_all requires sim.t_eta (fixed t*eta product) and no sim.t or "
           "sim.distance_km");
    const double lo = std::min(cfg.sweep->from, cfg.sweep->to);
    if (*cfg.sim.t_eta > lo)
      fail("sweep over eta_all: t_eta/eta exceeds 1 at the smallest eta point");
  } else {
    if (cfg.sim.t_eta)
      fail("sim.t_eta is only meaningful for an eta_all sweep; give sim.t or "
           "sim.distance_km");
    if (given != 1) fail("give exactly one of sim.t or sim.distance_km");
  }

  return cfg;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(root);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Receiver efficiency matrix for the configured mismatch model. With
// mode-dependent mismatch every detector couples best to its own mode (eta1
// on the favoured column, eta2 elsewhere); otherwise detector 1 has eta1 and
// the remaining detectors eta2, uniformly over modes.
inline detector::ReceiverSpec receiver_for(const ScenarioConfig& cfg) {
  detector::ReceiverSpec spec;
  spec.scheme = cfg.scheme;
  spec.layout.spatial_modes = cfg.spatial_modes;
  if (cfg.basis_prob) spec.basis_prob = *cfg.basis_prob;
  const int detectors = cfg.scheme == detector::Scheme::active ? 2 : 4;
  spec.eta = Eigen::MatrixXd(detectors, cfg.spatial_modes);
  for (int d = 0; d < detectors; ++d)
    for (int m = 0; m < cfg.spatial_modes; ++m) {
      const bool favoured = cfg.mismatch.mode_dependent ? d == m : d == 0;
      spec.eta(d, m) = favoured ? cfg.mismatch.eta1 : cfg.mismatch.eta2;
    }
  spec.validate();
  return spec;
}

// Channel parameters with the transmission resolved from t or distance_km.
// eta_all sweep points override t afterwards; requiring a resolved value here
// keeps single-point commands honest.
inline channel::ChannelParams channel_for(const ScenarioConfig& cfg) {
  channel::ChannelParams p;
  p.omega = cfg.sim.omega;
  p.r = cfg.sim.r;
  p.m_resend = cfg.sim.m_resend;
  if (cfg.sim.t)
    p.t = *cfg.sim.t;
  else if (cfg.sim.distance_km)
    p.t = channel::distance_to_transmission(*cfg.sim.distance_km);
  else if (cfg.sim.t_eta)
    p.t = 1.0;  // placeholder; eta_all sweep points set t = t_eta / eta
  else
    throw ConfigError("config: no transmission given");
  p.validate();
  return p;
}

}  // namespace qkdmm::config
