#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "virodyn/analysis.hpp"
#include "virodyn/errors.hpp"
#include "virodyn/integrator.hpp"
#include "virodyn/models.hpp"

namespace virodyn::io {

using json = nlohmann::json;

/// Start next to a computed fixed point: state + epsilon * (unstable direction).
struct NearFixedPoint {
  std::size_t index = 1;  // position in the fixed-point list (0 is health)
  double epsilon = 1e-4;
};

struct SweepSpec {
  std::string param;
  double start = 0.0;
  double stop = 1.0;
  std::size_t count = 2;
};

struct Scenario {
  std::string name;
  std::string description;
  ModelParams params;
  std::optional<StateVector> initial_state;
  std::optional<NearFixedPoint> near_fixed_point;
  IntegratorConfig integrator;
  std::vector<std::string> outputs;
  std::optional<SweepSpec> sweep;

  ModelKind model() const { return kind_of(params); }
};

inline const std::vector<std::string>& known_outputs() {
  static const std::vector<std::string> names{"trajectory", "landmarks", "fixed-points",
                                              "stability",  "verify",    "derived"};
  return names;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

inline double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number, got " + std::string(v.type_name()));
  return v.get<double>();
}

inline std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_at(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

template <class P>
void apply_scalar_params(P& p, const json& obj, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    const std::string at = where + "." + key;
    if constexpr (std::is_same_v<P, DlrParams>) {
      if (key == "j") {
        if (!value.is_string()) fail(at, "expected \"tanh\" or \"minmod\"");
        p.j.kind = parse_saturation_kind(value.template get<std::string>());
        continue;
      }
    }
    double* slot = find_param(p, key);
    if (slot == nullptr) fail(at, "unknown parameter for model " + std::string(to_string(ParamTraits<P>::kind)));
    *slot = number_at(value, at);
  }
}

inline MultiStrainParams parse_multistrain(const json& obj, const std::string& where) {
  MultiStrainParams p;
  if (!obj.contains("n")) fail(where, "multistrain parameters need \"n\"");
  const json& nv = obj.at("n");
  if (!nv.is_number_unsigned() || nv.get<std::size_t>() == 0) fail(where + ".n", "expected a positive integer");
  p.n = nv.get<std::size_t>();
  const std::size_t n = p.n;
  auto per_strain = [&](const std::string& key, std::vector<double>& dst, double fallback) {
    if (!obj.contains(key)) {
      dst.assign(n, fallback);
      return;
    }
    const json& v = obj.at(key);
    const std::string at = where + "." + key;
    if (v.is_number()) {
      dst.assign(n, v.get<double>());
    } else {
      dst = number_list(v, at);
      if (dst.size() != n) fail(at, "expected " + std::to_string(n) + " entries");
    }
  };
  per_strain("beta", p.beta, 0.01);
  per_strain("gamma", p.gamma, 0.01);
  per_strain("c", p.c, 0.01);
  per_strain("tau", p.tau, 10.0);
  per_strain("alpha", p.alpha, 0.7);
  per_strain("xi", p.xi, 1.0);
  if (obj.contains("s")) {
    const json& m = obj.at("s");
    if (!m.is_array() || m.size() != n) fail(where + ".s", "expected an " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    p.s.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = number_list(m[k], where + ".s[" + std::to_string(k) + "]");
      if (row.size() != n) fail(where + ".s[" + std::to_string(k) + "]", "expected " + std::to_string(n) + " entries");
      p.s.insert(p.s.end(), row.begin(), row.end());
    }
  } else {
    p.s.assign(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) p.s[k * n + k] = 1.0;
  }
  static const std::vector<std::string> allowed{"n", "beta", "gamma", "c", "tau", "alpha", "xi", "s", "a", "theta", "j"};
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(where + "." + key, "unknown parameter for model multistrain");
    }
  }
  if (obj.contains("a")) p.a = number_at(obj.at("a"), where + ".a");
  if (obj.contains("theta")) p.theta = number_at(obj.at("theta"), where + ".theta");
  if (obj.contains("j")) {
    if (!obj.at("j").is_string()) fail(where + ".j", "expected \"tanh\" or \"minmod\"");
    p.j.kind = parse_saturation_kind(obj.at("j").get<std::string>());
  }
  return p;
}

inline ModelParams parse_params(ModelKind kind, const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  ModelParams params;
  switch (kind) {
    case ModelKind::nowak_may: { NowakMayParams p; apply_scalar_params(p, obj, where); params = p; break; }
    case ModelKind::snedecor: { SnedecorParams p; apply_scalar_params(p, obj, where); params = p; break; }
    case ModelKind::perelson: { PerelsonParams p; apply_scalar_params(p, obj, where); params = p; break; }
    case ModelKind::dlr: { DlrParams p; apply_scalar_params(p, obj, where); params = p; break; }
    case ModelKind::multistrain: params = parse_multistrain(obj, where); break;
    case ModelKind::custom: fail(where, "custom models cannot be loaded from a scenario");
  }
  try {
    std::visit([](const auto& p) { validate(p); }, params);
  } catch (const DomainError& e) {
    fail(where, e.what());
  }
  return params;
}

inline StateVector parse_state(const Layout& layout, const json& v, const std::string& where) {
  if (v.is_array()) {
    auto values = number_list(v, where);
    if (values.size() != layout.size()) {
      fail(where, "expected " + std::to_string(layout.size()) + " values, got " + std::to_string(values.size()));
    }
    return StateVector(layout, std::move(values));
  }
  if (!v.is_object()) fail(where, "expected an array or an object keyed by compartment");
  StateVector s(layout);
  for (const auto& [key, value] : v.items()) {
    const std::string at = where + "." + key;
    if (key.size() != 1 || std::string("TUVW").find(key[0]) == std::string::npos) fail(at, "unknown compartment");
    const auto f = static_cast<Field>(std::string("TUVW").find(key[0]));
    if (!layout.has(f)) fail(at, "compartment not present in model " + std::string(to_string(layout.model)));
    if (value.is_number()) {
      for (std::size_t j = 0; j < layout.strains; ++j) s.at(f, j) = value.get<double>();
    } else {
      const auto vals = number_list(value, at);
      if (vals.size() != layout.strains) fail(at, "expected " + std::to_string(layout.strains) + " entries");
      for (std::size_t j = 0; j < layout.strains; ++j) s.at(f, j) = vals[j];
    }
  }
  return s;
}

inline IntegratorConfig parse_integrator(const json& v, const std::string& where) {
  IntegratorConfig c;
  if (!v.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : v.items()) {
    const std::string at = where + "." + key;
    if (key == "method") {
      if (!value.is_string()) fail(at, "expected a string");
      try {
        c.method = parse_method(value.get<std::string>());
      } catch (const ValidationError& e) {
        fail(at, e.what());
      }
    } else if (key == "dt") c.dt = number_at(value, at);
    else if (key == "rel_tol") c.rel_tol = number_at(value, at);
    else if (key == "abs_tol") c.abs_tol = number_at(value, at);
    else if (key == "t_end") c.t_end = number_at(value, at);
    else if (key == "positivity_guard") {
      if (!value.is_boolean()) fail(at, "expected true or false");
      c.positivity_guard = value.get<bool>();
    } else if (key == "max_steps") {
      if (!value.is_number_unsigned()) fail(at, "expected a positive integer");
      c.max_steps = value.get<std::size_t>();
    } else {
      fail(at, "unknown integrator setting");
    }
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    fail(where, e.what());
  }
  return c;
}

inline SweepSpec parse_sweep(const json& v, const std::string& where) {
  if (!v.is_object()) fail(where, "expected an object");
  SweepSpec s;
  for (const auto& [key, value] : v.items()) {
    const std::string at = where + "." + key;
    if (key == "param") {
      if (!value.is_string()) fail(at, "expected a string");
      s.param = value.get<std::string>();
    } else if (key == "start") s.start = number_at(value, at);
    else if (key == "stop") s.stop = number_at(value, at);
    else if (key == "count") {
      if (!value.is_number_unsigned()) fail(at, "expected an integer >= 2");
      s.count = value.get<std::size_t>();
    } else {
      fail(at, "unknown sweep setting");
    }
  }
  if (s.param.empty()) fail(where, "sweep needs \"param\"");
  if (s.count < 2) fail(where + ".count", "must be at least 2");
  return s;
}

}  // namespace detail

/// Parses a scenario document. `source` prefixes every diagnostic.
inline Scenario parse_scenario(const json& doc, const std::string& source = "scenario") {
  using detail::fail;
  if (!doc.is_object()) fail(source, "top level must be an object");
  static const std::vector<std::string> allowed{"name", "description", "model", "params", "initial_state",
                                                "integrator", "outputs", "sweep"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(source + ": " + key, "unknown field");
  }
  Scenario sc;
  if (doc.contains("name")) {
    if (!doc.at("name").is_string()) fail(source + ": name", "expected a string");
    sc.name = doc.at("name").get<std::string>();
  }
  if (doc.contains("description") && doc.at("description").is_string()) sc.description = doc.at("description").get<std::string>();
  if (!doc.contains("model") || !doc.at("model").is_string()) fail(source + ": model", "required string field");
  ModelKind kind;
  try {
    kind = parse_model_kind(doc.at("model").get<std::string>());
  } catch (const ValidationError& e) {
    fail(source + ": model", e.what());
  }
  sc.params = detail::parse_params(kind, doc.value("params", json::object()), source + ": params");
  const std::size_t strains = std::holds_alternative<MultiStrainParams>(sc.params) ? std::get<MultiStrainParams>(sc.params).n : 1;
  const Layout layout = layout_for(kind, strains);

  if (doc.contains("initial_state")) {
    const json& v = doc.at("initial_state");
    const std::string where = source + ": initial_state";
    if (v.is_object() && v.contains("near_fixed_point")) {
      const json& nf = v.at("near_fixed_point");
      NearFixedPoint near;
      if (nf.contains("index")) {
        if (!nf.at("index").is_number_unsigned()) fail(where + ".near_fixed_point.index", "expected a non-negative integer");
        near.index = nf.at("index").get<std::size_t>();
      }
      if (nf.contains("epsilon")) near.epsilon = detail::number_at(nf.at("epsilon"), where + ".near_fixed_point.epsilon");
      sc.near_fixed_point = near;
    } else {
      auto s = detail::parse_state(layout, v, where);
      if (!is_admissible(s)) fail(where, "state is not admissible (T must be > 0, other compartments >= 0)");
      sc.initial_state = std::move(s);
    }
  }
  if (doc.contains("integrator")) sc.integrator = detail::parse_integrator(doc.at("integrator"), source + ": integrator");
  if (doc.contains("outputs")) {
    const json& o = doc.at("outputs");
    if (!o.is_array()) fail(source + ": outputs", "expected an array of strings");
    for (const auto& item : o) {
      if (!item.is_string()) fail(source + ": outputs", "expected an array of strings");
      const auto name = item.get<std::string>();
      const auto& known = known_outputs();
      if (std::find(known.begin(), known.end(), name) == known.end()) fail(source + ": outputs", "unknown output '" + name + "'");
      sc.outputs.push_back(name);
    }
  } else {
    sc.outputs = {"trajectory", "landmarks"};
  }
  if (doc.contains("sweep")) sc.sweep = detail::parse_sweep(doc.at("sweep"), source + ": sweep");
  return sc;
}

inline Scenario parse_scenario_text(const std::string& text, const std::string& source = "scenario") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return parse_scenario(doc, source);
}

inline Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read scenario '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto sc = parse_scenario_text(buf.str(), path.string());
  if (sc.name.empty()) sc.name = path.stem().string();
  return sc;
}

/// Directory of bundled scenarios; VIRODYN_SCENARIO_DIR overrides it.
inline std::filesystem::path scenario_directory() {
  if (const char* env = std::getenv("VIRODYN_SCENARIO_DIR"); env != nullptr && *env != '\0') return env;
#ifdef VIRODYN_SCENARIO_DIR_DEFAULT
  return VIRODYN_SCENARIO_DIR_DEFAULT;
#else
  return "scenarios";
#endif
}

/// Accepts a path to a file or the name of a bundled scenario.
inline std::filesystem::path resolve_scenario(const std::string& name_or_path) {
  const std::filesystem::path p(name_or_path);
  if (std::filesystem::is_regular_file(p)) return p;
  const auto bundled = scenario_directory() / (name_or_path + ".json");
  if (std::filesystem::is_regular_file(bundled)) return bundled;
  throw ValidationError("no scenario file or bundled scenario named '" + name_or_path + "'");
}

inline std::vector<std::string> list_scenarios() {
  std::vector<std::string> names;
  const auto dir = scenario_directory();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return names;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

/// Sets a named scalar parameter; throws ValidationError if it is not sweepable.
inline void set_param(ModelParams& params, const std::string& name, double value) {
  std::visit(
      [&](auto& p) {
        double* slot = find_param(p, name);
        if (slot == nullptr) {
          throw ValidationError("parameter '" + name + "' is not sweepable for model " +
                                std::string(to_string(ParamTraits<std::decay_t<decltype(p)>>::kind)));
        }
        *slot = value;
      },
      params);
}

/// The scenario's starting state, computing the fixed point and its unstable
/// direction when the start is given relative to one.
inline StateVector resolve_initial_state(const Scenario& sc) {
  const ModelSystem sys(sc.params);
  if (sc.initial_state) return *sc.initial_state;
  if (!sc.near_fixed_point) {
    StateVector s = sys.health();
    if (sys.layout().has(Field::V)) {
      for (std::size_t j = 0; j < sys.layout().strains; ++j) {
        if (!sys.layout().has(Field::W)) s.at(Field::U, j) = 0.05;
        s.at(Field::V, j) = 0.05;
        if (sys.layout().has(Field::W)) s.at(Field::W, j) = 0.05;
      }
    }
    return s;
  }
  const auto& near = *sc.near_fixed_point;
  const auto fps = fixed_points(sys);
  if (near.index >= fps.size()) {
    throw ValidationError("initial_state.near_fixed_point.index " + std::to_string(near.index) + " but only " +
                          std::to_string(fps.size()) + " fixed points exist");
  }
  const auto& fp = fps[near.index];
  if (fp.admissible_unstable_dirs.empty()) {
    throw ValidationError("initial_state.near_fixed_point: fixed point " + std::to_string(near.index) +
                          " has no admissible unstable direction");
  }
  StateVector s = fp.state;
  const auto& u = fp.admissible_unstable_dirs.front();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += near.epsilon * u[i];
  if (!is_admissible(s)) throw ValidationError("initial_state.near_fixed_point: perturbed state is not admissible");
  return s;
}

}  // namespace virodyn::io
