#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "virodyn/virodyn.hpp"

namespace {

using namespace virodyn;
using json = nlohmann::json;
using io::format_double;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::string out_dir;
  std::string format = "csv";
  std::uint64_t seed = 20080301;
  bool quiet = false;
};

/// Writes `content` to <out>/<file> when --out is set, otherwise to stdout.
void emit(const GlobalOptions& g, const std::string& file, const std::string& content) {
  if (g.out_dir.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::create_directories(g.out_dir);
  const auto path = (std::filesystem::path(g.out_dir) / file).string();
  auto out = io::open_output(path);
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
  if (!g.quiet) std::cerr << "wrote " << path << '\n';
}

std::string ext(const GlobalOptions& g) { return g.format == "json" ? ".json" : ".csv"; }

io::Scenario load(const std::string& name) { return io::load_scenario_file(io::resolve_scenario(name)); }

json state_json(const StateVector& s) {
  json o = json::object();
  const auto names = s.layout().component_names();
  for (std::size_t i = 0; i < s.size(); ++i) o[names[i]] = s[i];
  return o;
}

// ---------------------------------------------------------------------------

std::string landmarks_text(const GlobalOptions& g, const LandmarkReport& rep) {
  if (g.format == "json") {
    json arr = json::array();
    for (const auto& l : rep.landmarks) {
      arr.push_back({{"field", l.field}, {"kind", std::string(to_string(l.kind))},
                     {"scope", l.global ? "global" : "local"}, {"value", l.value}, {"time", l.time}});
    }
    return json{{"degenerate", rep.degenerate}, {"landmarks", arr}}.dump(1) + "\n";
  }
  std::ostringstream os;
  os << "field,kind,scope,value,time\n";
  for (const auto& l : rep.landmarks) {
    os << l.field << ',' << to_string(l.kind) << ',' << (l.global ? "global" : "local") << ','
       << format_double(l.value) << ',' << format_double(l.time) << '\n';
  }
  return os.str();
}

int cmd_simulate(const GlobalOptions& g, const std::string& name, double t_end, const std::string& method, double dt) {
  auto sc = load(name);
  if (t_end > 0.0) sc.integrator.t_end = t_end;
  if (!method.empty()) sc.integrator.method = parse_method(method);
  if (dt > 0.0) sc.integrator.dt = dt;
  const ModelSystem sys(sc.params);
  const auto traj = integrate(sys, io::resolve_initial_state(sc), sc.integrator);

  std::ostringstream os;
  if (g.format == "json") io::write_trajectory_json(os, traj);
  else io::write_trajectory_csv(os, traj);
  emit(g, sc.name + ext(g), os.str());

  const auto rep = detect_landmarks(traj);
  const auto text = landmarks_text(g, rep);
  if (!g.out_dir.empty()) emit(g, sc.name + "-landmarks" + ext(g), text);
  else if (!g.quiet) std::cerr << text;
  return kExitOk;
}

json fixed_point_json(const FixedPointReport& fp) {
  json eig = json::array();
  for (const auto& l : fp.eigenvalues) eig.push_back({l.real(), l.imag()});
  return {{"kind", std::string(to_string(fp.kind))},
          {"state", state_json(fp.state)},
          {"residual", fp.residual},
          {"stability", std::string(to_string(fp.stability))},
          {"eigenvalues", eig},
          {"positive_eigenvalues", fp.positive_eigenvalues},
          {"on_boundary", fp.on_boundary},
          {"admissible_unstable_directions", fp.admissible_unstable_dirs},
          {"defective", fp.defective},
          {"one_sided_jacobian", fp.one_sided}};
}

int cmd_fixed_points(const GlobalOptions& g, const std::string& name, bool with_stability) {
  const auto sc = load(name);
  const ModelSystem sys(sc.params);
  const auto fps = fixed_points(sys);
  std::ostringstream os;
  if (g.format == "json") {
    json arr = json::array();
    for (const auto& fp : fps) {
      json o = fixed_point_json(fp);
      if (with_stability && sys.kind() == ModelKind::perelson && fp.kind == FixedPointKind::seropositive) {
        const auto b = perelson_cubic(sys.params_as<PerelsonParams>(), fp.state);
        const auto rh = routh_hurwitz_cubic(b[0], b[1], b[2]);
        o["routh_hurwitz"] = {{"b", b}, {"delta1", rh.delta1}, {"delta2", rh.delta2},
                              {"delta3", rh.delta3}, {"stable", rh.stable}};
      }
      arr.push_back(std::move(o));
    }
    os << json{{"scenario", sc.name}, {"model", std::string(to_string(sys.kind()))}, {"fixed_points", arr}}.dump(1) << '\n';
  } else if (!with_stability) {
    os << "index,kind,stability,residual";
    for (const auto& n : sys.layout().component_names()) os << ',' << n;
    os << ",positive_eigenvalues,admissible_unstable\n";
    for (std::size_t i = 0; i < fps.size(); ++i) {
      const auto& fp = fps[i];
      os << i << ',' << to_string(fp.kind) << ',' << to_string(fp.stability) << ',' << format_double(fp.residual);
      for (double v : fp.state.values()) os << ',' << format_double(v);
      os << ',' << fp.positive_eigenvalues << ',' << fp.admissible_unstable_count() << '\n';
    }
  } else {
    os << "index,kind,stability,eigen_index,re,im\n";
    for (std::size_t i = 0; i < fps.size(); ++i) {
      for (std::size_t k = 0; k < fps[i].eigenvalues.size(); ++k) {
        const auto& l = fps[i].eigenvalues[k];
        os << i << ',' << to_string(fps[i].kind) << ',' << to_string(fps[i].stability) << ',' << k << ','
           << format_double(l.real()) << ',' << format_double(l.imag()) << '\n';
      }
    }
  }
  emit(g, sc.name + (with_stability ? "-stability" : "-fixed-points") + ext(g), os.str());
  return kExitOk;
}

json derived_json(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NowakMayParams>) {
          const double r = p.a * p.gamma_nm / (p.alpha * p.xi_nm);
          return {{"infection_ratio", r}, {"seropositive_exists", r > 1.0}};
        } else if constexpr (std::is_same_v<P, SnedecorParams>) {
          const auto th = thresholds_snedecor(p);
          json o{{"alpha_s3", th.alpha_s3}, {"alpha_s4", th.alpha_s4},
                 {"discriminant_min", th.discriminant_min.value},
                 {"discriminant_min_lo", th.discriminant_min.lo},
                 {"discriminant_min_hi", th.discriminant_min.hi},
                 {"discriminant_min_at", th.discriminant_min_at}};
          o["alpha_s1"] = th.alpha_s1 ? json(*th.alpha_s1) : json(nullptr);
          o["alpha_s2"] = th.alpha_s2 ? json(*th.alpha_s2) : json(nullptr);
          return o;
        } else if constexpr (std::is_same_v<P, PerelsonParams>) {
          const double r = p.a * p.delta_p * p.theta / (p.alpha * p.sigma_p);
          return {{"infection_ratio", r}, {"seropositive_exists", r > 1.0}};
        } else if constexpr (std::is_same_v<P, DlrParams>) {
          const auto d = dlr_derived(p);
          json o{{"eta", d.eta}, {"rho", d.rho}, {"gamma_bound", d.gamma_bound}, {"v_bar_defined", d.v_bar_defined}};
          o["v_bar"] = d.v_bar_defined ? json(d.v_bar) : json(nullptr);
          o["l_threshold"] = d.l_threshold ? json(*d.l_threshold) : json(nullptr);
          return o;
        } else {
          return {{"strains", p.n}, {"mutation_matrix_valid", validate_mutation_matrix(p.s, p.n).valid()}};
        }
      },
      params);
}

std::string scalar_text(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

int cmd_derived(const GlobalOptions& g, const std::string& name) {
  const auto sc = load(name);
  const json d = derived_json(sc.params);
  std::ostringstream os;
  if (g.format == "json") {
    os << d.dump(1) << '\n';
  } else {
    os << "name,value\n";
    for (const auto& [k, v] : d.items()) os << k << ',' << scalar_text(v) << '\n';
  }
  emit(g, sc.name + "-derived" + ext(g), os.str());
  return kExitOk;
}

io::SweepSpec parse_range(const std::string& param, const std::string& range) {
  io::SweepSpec s;
  s.param = param;
  std::vector<std::string> parts;
  std::stringstream ss(range);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 3) throw ValidationError("--range expects start,stop,count");
  try {
    s.start = std::stod(parts[0]);
    s.stop = std::stod(parts[1]);
    const long long c = std::stoll(parts[2]);
    if (c < 2) throw ValidationError("--range count must be at least 2");
    s.count = static_cast<std::size_t>(c);
  } catch (const std::logic_error&) {
    throw ValidationError("--range expects numeric start,stop,count, got '" + range + "'");
  }
  return s;
}

int cmd_sweep(const GlobalOptions& g, const std::string& name, const std::string& param, const std::string& range) {
  const auto sc = load(name);
  io::SweepSpec spec;
  if (!param.empty() || !range.empty()) {
    if (param.empty() || range.empty()) throw ValidationError("sweep needs both --param and --range");
    spec = parse_range(param, range);
  } else if (sc.sweep) {
    spec = *sc.sweep;
  } else {
    throw ValidationError("scenario has no sweep block; pass --param and --range");
  }
  {
    auto probe = sc.params;
    io::set_param(probe, spec.param, spec.start);
  }

  json rows = json::array();
  std::vector<std::string> derived_keys;
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double value = spec.start + (spec.stop - spec.start) * static_cast<double>(i) / static_cast<double>(spec.count - 1);
    auto params = sc.params;
    io::set_param(params, spec.param, value);
    json row{{"param", spec.param}, {"value", value}};
    try {
      const ModelSystem sys(params);
      const auto fps = fixed_points(sys);
      std::string verdicts;
      for (const auto& fp : fps) {
        if (!verdicts.empty()) verdicts += ';';
        verdicts += std::string(to_string(fp.kind)) + ":" + std::string(to_string(fp.stability));
      }
      row["fixed_points"] = fps.size();
      row["stability"] = verdicts;
      json d;
      if (const auto* sp = std::get_if<SnedecorParams>(&params)) {
        const auto q = snedecor_quadratic(*sp);
        d = {{"t_star", q.t_star}, {"discriminant", snedecor_discriminant(*sp).value}};
      } else if (const auto* dp = std::get_if<DlrParams>(&params)) {
        const auto dd = dlr_derived(*dp, false);
        d = {{"eta", dd.eta}, {"rho", dd.rho}, {"v_bar_defined", dd.v_bar_defined}};
        d["v_bar"] = dd.v_bar_defined ? json(dd.v_bar) : json(nullptr);
      } else {
        d = json::object();
      }
      row["derived"] = d;
      if (derived_keys.empty()) for (const auto& [k, v] : d.items()) derived_keys.push_back(k);
    } catch (const DomainError& e) {
      row["fixed_points"] = 0;
      row["stability"] = std::string("invalid: ") + e.what();
      row["derived"] = json::object();
    }
    rows.push_back(std::move(row));
  }

  std::ostringstream os;
  if (g.format == "json") {
    os << json{{"scenario", sc.name}, {"rows", rows}}.dump(1) << '\n';
  } else {
    os << "param,value,fixed_points,stability";
    for (const auto& k : derived_keys) os << ',' << k;
    os << '\n';
    for (const auto& r : rows) {
      os << r["param"].get<std::string>() << ',' << format_double(r["value"].get<double>()) << ','
         << r["fixed_points"].get<std::size_t>() << ',' << r["stability"].get<std::string>();
      for (const auto& k : derived_keys) os << ',' << (r["derived"].contains(k) ? scalar_text(r["derived"][k]) : "");
      os << '\n';
    }
  }
  emit(g, sc.name + "-sweep" + ext(g), os.str());
  return kExitOk;
}

int cmd_verify(const GlobalOptions& g, const std::string& name, std::size_t samples) {
  const auto sc = load(name);
  const ModelSystem sys(sc.params);
  const auto s0 = io::resolve_initial_state(sc);
  std::vector<TheoremReport> reports;

  const auto traj = integrate(sys, s0, sc.integrator);
  reports.push_back(check_positivity(traj));
  if (const auto* dp = std::get_if<DlrParams>(&sc.params)) {
    reports.push_back(check_global_bound(traj, *dp));
    reports.push_back(reduction_equivalence(*dp, s0, sc.integrator));
  }
  for (const auto& fp : fixed_points(sys)) {
    TheoremReport r;
    r.theorem = "fixed-point-residual/" + std::string(to_string(fp.kind));
    r.value = fixed_point_residual(sys, fp.state);
    r.margin = kResidualLimit - r.value;
    r.pass = r.margin > 0.0;
    reports.push_back(r);
  }
  if (const auto* mp = std::get_if<MultiStrainParams>(&sc.params)) {
    IntegratorConfig fine;
    fine.method = Method::rk4_fixed;
    fine.dt = 0.01;
    fine.t_end = std::min(sc.integrator.t_end, 50.0);
    const auto laws = check_macroscopic_laws(integrate(sys, s0, fine), *mp);
    reports.push_back(laws.virus);
    reports.push_back(laws.combined);
  }

  std::mt19937_64 rng(g.seed);
  TheoremReport random_pos;
  random_pos.theorem = "positivity/random-starts";
  TheoremReport random_bound;
  random_bound.theorem = "global-bound/random-starts";
  for (std::size_t k = 0; k < samples; ++k) {
    const auto start = sample_admissible_state(sys.layout(), rng);
    const auto t = integrate(sys, start, sc.integrator);
    const auto p = check_positivity(t);
    if (p.margin < random_pos.margin) random_pos = TheoremReport{random_pos.theorem, random_pos.pass && p.pass, p.margin, p.time, p.component, p.value, ""};
    random_pos.pass = random_pos.pass && p.pass;
    if (const auto* dp = std::get_if<DlrParams>(&sc.params)) {
      const auto b = check_global_bound(t, *dp);
      if (b.margin < random_bound.margin) random_bound = TheoremReport{random_bound.theorem, random_bound.pass && b.pass, b.margin, b.time, b.component, b.value, ""};
      random_bound.pass = random_bound.pass && b.pass;
    }
  }
  if (samples > 0) {
    random_pos.value = static_cast<double>(samples);
    reports.push_back(random_pos);
    if (std::holds_alternative<DlrParams>(sc.params)) reports.push_back(random_bound);
  }

  bool all = true;
  std::ostringstream os;
  if (g.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) {
      all = all && r.pass;
      arr.push_back({{"theorem", r.theorem}, {"pass", r.pass}, {"margin", r.margin}, {"time", r.time},
                     {"component", r.component}, {"value", r.value}, {"notice", r.notice}});
    }
    os << json{{"scenario", sc.name}, {"seed", g.seed}, {"reports", arr}}.dump(1) << '\n';
  } else {
    os << "theorem,pass,margin,time,component,value\n";
    for (const auto& r : reports) {
      all = all && r.pass;
      os << r.theorem << ',' << (r.pass ? "true" : "false") << ',' << format_double(r.margin) << ','
         << format_double(r.time) << ',' << r.component << ',' << format_double(r.value) << '\n';
    }
  }
  emit(g, sc.name + "-verify" + ext(g), os.str());
  return all ? kExitOk : kExitNumerical;
}

int cmd_list(const GlobalOptions& g) {
  std::ostringstream os;
  const auto names = io::list_scenarios();
  if (g.format == "json") {
    os << json(names).dump(1) << '\n';
  } else {
    for (const auto& n : names) os << n << '\n';
  }
  std::cout << os.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Within-host HIV dynamics: simulation, equilibria, stability and theorem checks"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--out", g.out_dir, "Directory for output files (default: standard output)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", g.seed, "Seed for randomized verification suites");
  app.add_flag("--quiet", g.quiet, "Suppress diagnostics on standard error");

  std::string scenario;
  double t_end = 0.0, dt = 0.0;
  std::string method, param, range;
  std::size_t samples = 20;

  auto* sim = app.add_subcommand("simulate", "Integrate a scenario and emit the trajectory and its landmarks");
  sim->add_option("scenario", scenario, "Scenario file or bundled scenario name")->required();
  sim->add_option("--t-end", t_end, "Override the horizon (days)");
  sim->add_option("--method", method, "rk4_fixed or rk45_adaptive");
  sim->add_option("--dt", dt, "Override the (initial) step (days)");

  auto* fp = app.add_subcommand("fixed-points", "List equilibria with residuals and stability");
  fp->add_option("scenario", scenario)->required();
  auto* st = app.add_subcommand("stability", "Eigenvalues and Routh-Hurwitz data at each equilibrium");
  st->add_option("scenario", scenario)->required();
  auto* dv = app.add_subcommand("derived", "Threshold quantities of the model");
  dv->add_option("scenario", scenario)->required();
  auto* sw = app.add_subcommand("sweep", "Scan one parameter and summarise equilibria");
  sw->add_option("scenario", scenario)->required();
  sw->add_option("--param", param, "Parameter to sweep");
  sw->add_option("--range", range, "start,stop,count (count >= 2)");
  auto* vf = app.add_subcommand("verify", "Check positivity, bounds and consistency oracles");
  vf->add_option("scenario", scenario)->required();
  vf->add_option("--samples", samples, "Random admissible starts to integrate");
  auto* ls = app.add_subcommand("list-scenarios", "List bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*sim) return cmd_simulate(g, scenario, t_end, method, dt);
    if (*fp) return cmd_fixed_points(g, scenario, false);
    if (*st) return cmd_fixed_points(g, scenario, true);
    if (*dv) return cmd_derived(g, scenario);
    if (*sw) return cmd_sweep(g, scenario, param, range);
    if (*vf) return cmd_verify(g, scenario, samples);
    if (*ls) return cmd_list(g);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const AdmissibilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const StiffnessError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
