#include <cmath>

#include <gtest/gtest.h>

#include "test_systems.hpp"
#include "virodyn/integrator.hpp"
#include "virodyn/models.hpp"

using namespace virodyn;

namespace {

StateVector dlr_start(ModelKind k) { return StateVector(layout_for(k), {1.0, 0.0, 0.05, 0.05}); }

Trajectory perelson_run(double theta, double t_end) {
  PerelsonParams p;
  p.theta = theta;
  IntegratorConfig cfg;
  cfg.t_end = t_end;
  return integrate(ModelSystem(p), dlr_start(ModelKind::perelson), cfg);
}

const Landmark& global(const LandmarkReport& r, std::string_view field, ExtremumKind kind) {
  const auto* l = r.global_extremum(field, kind);
  EXPECT_NE(l, nullptr);
  return *l;
}

}  // namespace

TEST(Integrate, VirusFreeLymphocyteRecovery) {
  const NowakMayParams p;
  for (auto method : {Method::rk45_adaptive, Method::rk4_fixed}) {
    IntegratorConfig cfg;
    cfg.method = method;
    cfg.dt = 0.1;
    cfg.t_end = 600.0;
    const auto traj = integrate(ModelSystem(p), StateVector(layout_for(ModelKind::nowak_may), {0.5, 0.0, 0.0}), cfg);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      EXPECT_NEAR(traj.states[k][0], 1.0 - 0.5 * std::exp(-p.beta * traj.times[k]), 1e-8);
      EXPECT_EQ(traj.states[k][1], 0.0);
      EXPECT_EQ(traj.states[k][2], 0.0);
    }
  }
}

TEST(Integrate, PerelsonViralPeak) {
  const auto traj = perelson_run(0.6, 200.0);
  const auto r = detect_landmarks(traj);
  const auto& vmax = global(r, "V", ExtremumKind::max);
  EXPECT_NEAR(vmax.value, 2.2, 0.15);
  EXPECT_NEAR(vmax.time, 39.0, 3.0);
}

TEST(Integrate, NowakMayHealthyViralClearance) {
  NowakMayParams p;
  p.xi_nm = 10.0;
  IntegratorConfig cfg;
  cfg.t_end = 30.0;
  const auto traj = integrate(ModelSystem(p), StateVector(layout_for(ModelKind::nowak_may), {1.0, 0.05, 0.05}), cfg);
  const auto r = detect_landmarks(traj);
  const auto& peak = global(r, "V", ExtremumKind::max);
  EXPECT_LT(peak.time, 1.0);
  double v10 = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (traj.times[k] <= 10.0) v10 = traj.states[k][2];
  EXPECT_LT(v10, 0.1 * peak.value);
  EXPECT_NEAR(global(r, "T", ExtremumKind::min).value, 0.965, 0.005);
}

TEST(Integrate, TimesStrictlyIncreasingAndEndExact) {
  const auto traj = perelson_run(0.6, 123.456);
  ASSERT_GT(traj.size(), 2u);
  for (std::size_t k = 1; k < traj.size(); ++k) EXPECT_LT(traj.times[k - 1], traj.times[k]);
  EXPECT_EQ(traj.times.back(), 123.456);
}

TEST(Integrate, FixedStepGridIsMultipleOfDt) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4_fixed;
  cfg.dt = 0.1;
  cfg.t_end = 1.05;
  const auto traj = integrate(LinearDecay{}, StateVector(LinearDecay{}.layout(), {1.0}), cfg);
  ASSERT_EQ(traj.size(), 12u);
  EXPECT_EQ(traj.times[3], 3 * 0.1);
  EXPECT_EQ(traj.times.back(), 1.05);
}

TEST(Integrate, BitReproducible) {
  const auto a = perelson_run(0.6, 300.0);
  const auto b = perelson_run(0.6, 300.0);
  EXPECT_TRUE(a == b);
}

TEST(Integrate, ConfigValidation) {
  IntegratorConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(integrate(LinearDecay{}, StateVector(LinearDecay{}.layout(), {1.0}), cfg), DomainError);
  cfg = {};
  cfg.t_end = -1;
  EXPECT_THROW(integrate(LinearDecay{}, StateVector(LinearDecay{}.layout(), {1.0}), cfg), DomainError);
  cfg = {};
  cfg.rel_tol = 0;
  EXPECT_THROW(integrate(LinearDecay{}, StateVector(LinearDecay{}.layout(), {1.0}), cfg), DomainError);
}

TEST(Integrate, InadmissibleStartRejected) {
  const ModelSystem sys(DlrParams{});
  EXPECT_THROW(integrate(sys, StateVector(sys.layout(), {1.0, -0.1, 0.0, 0.0}), IntegratorConfig{}), AdmissibilityError);
  EXPECT_THROW(integrate(sys, StateVector(layout_for(ModelKind::perelson), {1, 0, 0, 0}), IntegratorConfig{}), DimensionError);
}

TEST(Integrate, GuardKeepsFiniteTimeExtinctionNonnegative) {
  for (auto method : {Method::rk4_fixed, Method::rk45_adaptive}) {
    IntegratorConfig cfg;
    cfg.method = method;
    cfg.dt = 0.05;
    cfg.t_end = 3.0;
    const auto traj = integrate(SqrtExtinction{}, StateVector(SqrtExtinction{}.layout(), {1.0}), cfg);
    for (const auto& s : traj.states) EXPECT_GE(s[0], 0.0);
    EXPECT_EQ(traj.back()[0], 0.0);
    EXPECT_GT(traj.stats.clamps + traj.stats.guard_retries, 0u);
    EXPECT_LE(traj.stats.max_clamp, cfg.abs_tol);
  }
}

TEST(Integrate, StepUnderflowReportsTimeAndComponent) {
  for (auto method : {Method::rk4_fixed, Method::rk45_adaptive}) {
    IntegratorConfig cfg;
    cfg.method = method;
    cfg.dt = 0.01;
    cfg.t_end = 2.0;
    try {
      integrate(Cliff{}, StateVector(Cliff{}.layout(), {1.0}), cfg);
      FAIL() << "expected a stiffness error";
    } catch (const StiffnessError& e) {
      EXPECT_NEAR(e.time(), 0.5, 0.011);
      EXPECT_EQ(e.component(), 0u);
    }
  }
}

TEST(Integrate, AdaptiveMeetsTolerance) {
  IntegratorConfig cfg;
  cfg.t_end = 20.0;
  cfg.positivity_guard = false;
  const auto traj = integrate(Oscillator{}, StateVector(Oscillator{}.layout(), {0.0, 1.0}), cfg);
  EXPECT_NEAR(traj.back()[0], std::sin(20.0), 1e-7);
  EXPECT_NEAR(traj.back()[1], std::cos(20.0), 1e-7);
}

TEST(Landmarks, PerelsonLowInfectivityLymphocyteDip) {
  const auto r = detect_landmarks(perelson_run(0.1, 60.0));
  const auto& tmin = global(r, "T", ExtremumKind::min);
  EXPECT_NEAR(tmin.value, 0.999625, 5e-5);
  EXPECT_NEAR(tmin.time, 6.0, 1.5);
}

TEST(Landmarks, PerelsonSecondViralMinimum) {
  const auto r = detect_landmarks(perelson_run(0.6, 200.0));
  const auto mins = r.local("V", ExtremumKind::min);
  ASSERT_EQ(mins.size(), 2u);
  EXPECT_NEAR(mins[0].time, 1.24, 0.1);  // early transient, before the outbreak
  EXPECT_NEAR(mins[1].value, 0.019525, 2e-4);
  EXPECT_NEAR(mins[1].time, 116.0, 6.0);
}

TEST(Landmarks, ConstantTrajectoryIsDegenerate) {
  const ModelSystem sys(DlrParams{});
  IntegratorConfig cfg;
  cfg.t_end = 50.0;
  const auto r = detect_landmarks(integrate(sys, sys.health(), cfg));
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.landmarks.empty());
}

TEST(Landmarks, QuadraticRefinementOnCoarseGrid) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4_fixed;
  cfg.dt = 0.1;
  cfg.t_end = 6.0;
  cfg.positivity_guard = false;
  const auto r = detect_landmarks(integrate(Oscillator{}, StateVector(Oscillator{}.layout(), {0.0, 1.0}), cfg));
  const auto maxs = r.local("x0", ExtremumKind::max);
  ASSERT_FALSE(maxs.empty());
  EXPECT_NEAR(maxs[0].time, M_PI / 2, 2e-3);
  EXPECT_NEAR(maxs[0].value, 1.0, 1e-4);
}

TEST(Integrate, GuardOnSignedSystemFailsInsteadOfStalling) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4_fixed;
  cfg.dt = 0.1;
  cfg.t_end = 6.0;
  try {
    integrate(Oscillator{}, StateVector(Oscillator{}.layout(), {0.0, 1.0}), cfg);
    FAIL() << "expected StiffnessError";
  } catch (const StiffnessError& e) {
    EXPECT_NEAR(e.time(), M_PI / 2, 0.1);
    EXPECT_EQ(e.component(), 1u);
  }
}

TEST(Landmarks, TooShortThrows) {
  Trajectory t;
  t.layout = LinearDecay{}.layout();
  t.times = {0.0, 1.0};
  t.states = {StateVector(t.layout, {1.0}), StateVector(t.layout, {0.5})};
  EXPECT_THROW(detect_landmarks(t), DomainError);
}

TEST(Richardson, NowakMayHealthyScenarioIsFourthOrder) {
  NowakMayParams p;
  p.xi_nm = 10.0;
  IntegratorConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = 3.0;
  const auto r = richardson_check(ModelSystem(p), StateVector(layout_for(ModelKind::nowak_may), {1.0, 0.05, 0.05}), cfg);
  EXPECT_TRUE(r.defined);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_NEAR(r.order, 4.0, 0.3);
}

TEST(Richardson, LinearDecayIsFourthOrder) {
  IntegratorConfig cfg;
  cfg.dt = 0.5;
  cfg.t_end = 10.0;
  const auto r = richardson_check(LinearDecay{}, StateVector(LinearDecay{}.layout(), {1.0}), cfg);
  EXPECT_NEAR(r.order, 4.0, 0.3);
  EXPECT_GT(r.error_estimate, 0.0);
}

TEST(Richardson, ZeroFieldHasNoOrder) {
  IntegratorConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  const auto r = richardson_check(ZeroField{}, StateVector(ZeroField{}.layout(), {0.3, 2.0}), cfg);
  EXPECT_EQ(r.error_estimate, 0.0);
  EXPECT_FALSE(r.defined);
}

TEST(Richardson, GuardActivityMarksInconclusive) {
  IntegratorConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 3.0;
  const auto r = richardson_check(SqrtExtinction{}, StateVector(SqrtExtinction{}.layout(), {1.0}), cfg);
  EXPECT_TRUE(r.inconclusive);
}

TEST(Richardson, HalvingStepShrinksErrorEightfold) {
  PerelsonParams p;
  p.theta = 0.6;
  const ModelSystem sys(p);
  const auto s0 = dlr_start(ModelKind::perelson);
  IntegratorConfig ref;
  ref.t_end = 40.0;
  ref.rel_tol = 1e-12;
  ref.abs_tol = 1e-14;
  const auto exact = integrate(sys, s0, ref).back();
  auto err = [&](double dt) {
    IntegratorConfig c;
    c.method = Method::rk4_fixed;
    c.dt = dt;
    c.t_end = 40.0;
    const auto end = integrate(sys, s0, c).back();
    double e = 0;
    for (std::size_t i = 0; i < end.size(); ++i) e = std::max(e, std::abs(end[i] - exact[i]));
    return e;
  };
  EXPECT_GT(err(0.1) / err(0.05), 8.0);
}

TEST(Integrate, AdaptiveGuardOnSignedSystemFails) {
  IntegratorConfig cfg;
  cfg.t_end = 6.0;
  EXPECT_THROW(integrate(Oscillator{}, StateVector(Oscillator{}.layout(), {0.0, 1.0}), cfg), StiffnessError);
}
