#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "virodyn/errors.hpp"
#include "virodyn/integrator.hpp"

namespace virodyn::io {

using json = nlohmann::json;

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Header `t,<component names>` then one row per grid point, LF endings.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << 't';
  for (const auto& name : traj.layout.component_names()) os << ',' << name;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_double(traj.times[k]);
    for (double v : traj.states[k].values()) os << ',' << format_double(v);
    os << '\n';
  }
}

inline json to_json(const IntegratorConfig& c) {
  return {{"method", std::string(to_string(c.method))},
          {"dt", c.dt},
          {"rel_tol", c.rel_tol},
          {"abs_tol", c.abs_tol},
          {"t_end", c.t_end},
          {"positivity_guard", c.positivity_guard},
          {"max_steps", c.max_steps}};
}

inline IntegratorConfig config_from_json(const json& j) {
  IntegratorConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.dt = j.at("dt").get<double>();
  c.rel_tol = j.at("rel_tol").get<double>();
  c.abs_tol = j.at("abs_tol").get<double>();
  c.t_end = j.at("t_end").get<double>();
  c.positivity_guard = j.at("positivity_guard").get<bool>();
  c.max_steps = j.at("max_steps").get<std::size_t>();
  return c;
}

inline json to_json(const IntegrationStats& s) {
  return {{"accepted", s.accepted},         {"rejected", s.rejected},
          {"guard_retries", s.guard_retries}, {"clamps", s.clamps},
          {"max_clamp", s.max_clamp},       {"rhs_evaluations", s.rhs_evaluations}};
}

inline IntegrationStats stats_from_json(const json& j) {
  IntegrationStats s;
  s.accepted = j.at("accepted").get<std::size_t>();
  s.rejected = j.at("rejected").get<std::size_t>();
  s.guard_retries = j.at("guard_retries").get<std::size_t>();
  s.clamps = j.at("clamps").get<std::size_t>();
  s.max_clamp = j.at("max_clamp").get<double>();
  s.rhs_evaluations = j.at("rhs_evaluations").get<std::size_t>();
  return s;
}

inline json to_json(const Trajectory& traj) {
  json states = json::array();
  for (const auto& s : traj.states) states.push_back(std::vector<double>(s.values().begin(), s.values().end()));
  return {{"model", std::string(to_string(traj.layout.model))},
          {"strains", traj.layout.strains},
          {"components", traj.layout.component_names()},
          {"config", to_json(traj.config)},
          {"stats", to_json(traj.stats)},
          {"times", traj.times},
          {"states", std::move(states)}};
}

inline Trajectory trajectory_from_json(const json& j) {
  try {
    Trajectory traj;
    const auto kind_name = j.at("model").get<std::string>();
    const ModelKind kind = kind_name == "custom" ? ModelKind::custom : parse_model_kind(kind_name);
    traj.layout = Layout{kind, j.at("strains").get<std::size_t>()};
    traj.config = config_from_json(j.at("config"));
    traj.stats = stats_from_json(j.at("stats"));
    traj.times = j.at("times").get<std::vector<double>>();
    for (const auto& row : j.at("states")) {
      traj.states.emplace_back(traj.layout, row.get<std::vector<double>>());
    }
    if (traj.states.size() != traj.times.size()) {
      throw ValidationError("trajectory json: times and states differ in length");
    }
    return traj;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("trajectory json: ") + e.what());
  }
}

inline void write_trajectory_json(std::ostream& os, const Trajectory& traj) {
  os << to_json(traj).dump(1) << '\n';
}

/// Opens `path` for binary writing (keeps LF endings) or throws with the path.
inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

}  // namespace virodyn::io
