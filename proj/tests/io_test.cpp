#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "virodyn/virodyn.hpp"

using namespace virodyn;

namespace {

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

Trajectory short_run(const ModelSystem& sys, const StateVector& s0, double dt, double t_end) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4_fixed;
  cfg.dt = dt;
  cfg.t_end = t_end;
  return integrate(sys, s0, cfg);
}

std::string csv_of(const Trajectory& t) {
  std::ostringstream os;
  io::write_trajectory_csv(os, t);
  return os.str();
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() {
    if (old_) ::setenv(name_, old_->c_str(), 1);
    else ::unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

}  // namespace

TEST(Csv, HeaderAndRowCount) {
  const ModelSystem sys(DlrParams{});
  const auto csv = csv_of(short_run(sys, sys.health(), 1.0, 2.0));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,T,U,V,W");
  EXPECT_EQ(count_lines(csv), 4u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Csv, MultistrainHeader) {
  const auto m = MultiStrainParams::replicate(DlrParams{}, 2, {1, 0, 0, 1});
  const ModelSystem sys(m);
  const auto csv = csv_of(short_run(sys, sys.health(), 1.0, 1.0));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,T_0,T_1,U_0,U_1,V_0,V_1,W_0,W_1");
}

TEST(Csv, ValuesRoundTripExactly) {
  const ModelSystem sys(PerelsonParams{});
  const auto traj = short_run(sys, StateVector(sys.layout(), {1, 0, 0.05, 0.05}), 0.1, 1.0);
  std::istringstream in(csv_of(traj));
  std::string line;
  std::getline(in, line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string cell;
    std::getline(fields, cell, ',');
    EXPECT_EQ(std::stod(cell), traj.times[row]);
    for (std::size_t i = 0; i < traj.layout.size(); ++i) {
      std::getline(fields, cell, ',');
      EXPECT_EQ(std::stod(cell), traj.states[row][i]);
    }
    ++row;
  }
  EXPECT_EQ(row, traj.size());
}

TEST(Csv, ByteIdenticalReruns) {
  const ModelSystem sys(NowakMayParams{});
  const StateVector s0(sys.layout(), {1, 0.05, 0.05});
  IntegratorConfig cfg;
  cfg.t_end = 50;
  EXPECT_EQ(csv_of(integrate(sys, s0, cfg)), csv_of(integrate(sys, s0, cfg)));
}

TEST(Json, TrajectoryRoundTrip) {
  const ModelSystem sys(DlrParams{});
  IntegratorConfig cfg;
  cfg.t_end = 20;
  const auto traj = integrate(sys, StateVector(sys.layout(), {1, 0, 0.05, 0.05}), cfg);
  std::ostringstream os;
  io::write_trajectory_json(os, traj);
  const auto back = io::trajectory_from_json(io::json::parse(os.str()));
  EXPECT_EQ(back, traj);
}

TEST(Json, MalformedTrajectoryIsValidationError) {
  EXPECT_THROW(io::trajectory_from_json(io::json{{"model", "dlr"}}), ValidationError);
  EXPECT_THROW(io::trajectory_from_json(io::json::parse(R"({"model":"nope","strains":1})")), ValidationError);
}

TEST(Scenario, ParsesFullDocument) {
  const auto sc = io::parse_scenario_text(R"({
    "name": "x", "model": "dlr",
    "params": {"tau": 6, "zeta": 6},
    "initial_state": {"T": 1, "U": 0, "V": 0.01, "W": 0.01},
    "integrator": {"method": "rk4_fixed", "dt": 0.05, "t_end": 100},
    "outputs": ["trajectory", "fixed-points"]
  })");
  EXPECT_EQ(sc.model(), ModelKind::dlr);
  EXPECT_EQ(std::get<DlrParams>(sc.params).tau, 6.0);
  EXPECT_EQ(sc.integrator.method, Method::rk4_fixed);
  EXPECT_EQ(sc.integrator.t_end, 100.0);
  EXPECT_EQ((*sc.initial_state)[2], 0.01);
  EXPECT_EQ(sc.outputs.size(), 2u);
}

TEST(Scenario, DefaultsWhenOmitted) {
  const auto sc = io::parse_scenario_text(R"({"model": "perelson"})");
  EXPECT_EQ(sc.integrator, IntegratorConfig{});
  const auto s0 = io::resolve_initial_state(sc);
  EXPECT_EQ(s0[0], 1.0);
  EXPECT_EQ(s0[2], 0.05);
}

TEST(Scenario, RejectsBadInput) {
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "dlr", "params": {"tua": 1}})"), ValidationError);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "dlr", "colour": 1})"), ValidationError);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "bogus"})"), ValidationError);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "dlr", "params": {"tau": -1}})"), ValidationError);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "dlr", "initial_state": [1, 0, -0.1, 0]})"), ValidationError);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "dlr", "initial_state": [1, 0, 0.1]})"), Error);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "dlr", "integrator": {"dt": 0}})"), ValidationError);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "dlr", "outputs": ["movie"]})"), ValidationError);
  EXPECT_THROW(io::parse_scenario_text("{\"model\": "), ValidationError);
}

TEST(Scenario, MultistrainBroadcastAndMatrix) {
  const auto sc = io::parse_scenario_text(R"({
    "model": "multistrain",
    "params": {"n": 2, "tau": [10, 12], "xi": 1, "s": [[0.9, 0.1], [0.2, 0.8]]}
  })");
  const auto& m = std::get<MultiStrainParams>(sc.params);
  EXPECT_EQ(m.n, 2u);
  EXPECT_EQ(m.tau[1], 12.0);
  EXPECT_EQ(m.xi[1], 1.0);
  EXPECT_EQ(m.mutation(1, 0), 0.2);
  EXPECT_THROW(io::parse_scenario_text(R"({"model": "multistrain",
    "params": {"n": 2, "s": [[0.9, 0.2], [0.2, 0.8]]}})"), ValidationError);
}

TEST(Scenario, NearFixedPointStart) {
  const auto sc = io::parse_scenario_text(R"({
    "model": "dlr", "params": {"tau": 6, "zeta": 6},
    "initial_state": {"near_fixed_point": {"index": 1, "epsilon": 1e-4}}
  })");
  const auto s0 = io::resolve_initial_state(sc);
  const auto fps = fixed_points(ModelSystem(sc.params));
  EXPECT_TRUE(is_admissible(s0));
  double dist = 0;
  for (std::size_t i = 0; i < s0.size(); ++i) dist = std::max(dist, std::abs(s0[i] - fps[1].state[i]));
  EXPECT_NEAR(dist, 1e-4, 1e-12);
}

TEST(Scenario, SetParamForSweeps) {
  ModelParams p = SnedecorParams{};
  io::set_param(p, "alpha_s", 0.3);
  EXPECT_EQ(std::get<SnedecorParams>(p).alpha_s, 0.3);
  EXPECT_THROW(io::set_param(p, "zeta", 1.0), ValidationError);
}

TEST(Scenario, BundledScenariosAllLoad) {
  const auto names = io::list_scenarios();
  EXPECT_GE(names.size(), 13u);
  for (const auto& name : names) {
    const auto sc = io::load_scenario_file(io::resolve_scenario(name));
    EXPECT_EQ(sc.name, name);
    EXPECT_NO_THROW(io::resolve_initial_state(sc)) << name;
  }
}

TEST(Scenario, EnvironmentOverridesDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "virodyn_io_test_scenarios";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "only-one.json") << R"({"model": "nowak-may"})";
  {
    ScopedEnv env("VIRODYN_SCENARIO_DIR", dir.string());
    EXPECT_EQ(io::list_scenarios(), std::vector<std::string>{"only-one"});
    EXPECT_EQ(io::load_scenario_file(io::resolve_scenario("only-one")).model(), ModelKind::nowak_may);
    EXPECT_THROW(io::resolve_scenario("dlr-sante"), ValidationError);
  }
  std::filesystem::remove_all(dir);
}

TEST(Output, UnwritablePathIsIoError) {
  EXPECT_THROW(io::open_output("/nonexistent-dir/for/sure/out.csv"), IoError);
}
