#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "virodyn/errors.hpp"
#include "virodyn/state.hpp"

namespace virodyn {

enum class Method { rk4_fixed, rk45_adaptive };

inline std::string_view to_string(Method m) {
  return m == Method::rk4_fixed ? "rk4_fixed" : "rk45_adaptive";
}

inline Method parse_method(std::string_view name) {
  if (name == "rk4_fixed") return Method::rk4_fixed;
  if (name == "rk45_adaptive") return Method::rk45_adaptive;
  throw ValidationError("unknown integration method '" + std::string(name) +
                        "' (expected rk4_fixed or rk45_adaptive)");
}

/// Smallest step the integrator will take before giving up (days).
inline constexpr double kMinStep = 1e-12;
// Guard-driven step halvings allowed before the integrator reports a stall:
// per grid interval for RK4, between unclamped accepted steps for RK45.
inline constexpr std::size_t kMaxGuardSplits = 1u << 16;

struct IntegratorConfig {
  Method method = Method::rk45_adaptive;
  double dt = 0.01;  // fixed step, or initial step for the adaptive method
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_end = 600.0;
  bool positivity_guard = true;
  std::size_t max_steps = 50'000'000;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrator: dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("integrator: t_end must be positive");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("integrator: tolerances must be positive");
  }

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;        // error-control rejections
  std::size_t guard_retries = 0;   // step halvings forced by the positivity guard
  std::size_t clamps = 0;          // entries in [-abs_tol, 0) reset to 0
  double max_clamp = 0.0;          // largest clamped magnitude
  std::size_t rhs_evaluations = 0;

  friend bool operator==(const IntegrationStats&, const IntegrationStats&) = default;
};

struct Trajectory {
  Layout layout{};
  IntegratorConfig config{};
  std::vector<double> times;
  std::vector<StateVector> states;
  IntegrationStats stats{};

  ModelKind model() const { return layout.model; }
  std::size_t size() const { return times.size(); }
  const StateVector& back() const { return states.back(); }

  std::vector<double> series(std::size_t component) const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s[component]);
    return out;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Anything with a layout and an in-place right-hand side.
template <class S>
concept OdeSystem = requires(const S& sys, std::span<const double> x, std::span<double> dx) {
  { sys.layout() } -> std::convertible_to<Layout>;
  sys.evaluate(x, dx);
};

namespace detail {

template <OdeSystem System>
class Stepper {
 public:
  Stepper(const System& sys, const IntegratorConfig& cfg, IntegrationStats& stats)
      : sys_(sys), layout_(sys.layout()), cfg_(cfg), stats_(stats), n_(layout_.size()) {
    for (auto& k : k_) k.resize(n_);
    tmp_.resize(n_);
    err_.resize(n_);
  }

  /// Evaluates f(x) into out. Returns false when the state is outside the
  /// model's domain or the result is not finite.
  bool rhs(std::span<const double> x, std::vector<double>& out) {
    ++stats_.rhs_evaluations;
    try {
      sys_.evaluate(x, out);
    } catch (const AdmissibilityError&) {
      return false;
    } catch (const SingularityError&) {
      return false;
    } catch (const DomainError&) {
      return false;
    }
    return std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); });
  }

  /// Index of the worst guard violation, or npos if y is acceptable.
  std::size_t guard_violation(std::span<const double> y) const {
    std::size_t worst = npos;
    double worst_value = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const bool bad = layout_.strictly_positive(i) ? !(y[i] > 0.0) : !(y[i] >= -cfg_.abs_tol);
      if (bad && (worst == npos || y[i] < worst_value)) {
        worst = i;
        worst_value = y[i];
      }
    }
    return worst;
  }

  void clamp(std::span<double> y) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (y[i] < 0.0 && !layout_.strictly_positive(i)) {
        stats_.max_clamp = std::max(stats_.max_clamp, -y[i]);
        ++stats_.clamps;
        y[i] = 0.0;
      }
    }
  }

  /// Classical RK4 step. Returns false if a stage leaves the domain.
  bool rk4(std::span<const double> y, double h, std::vector<double>& out) {
    auto& k1 = k_[0];
    auto& k2 = k_[1];
    auto& k3 = k_[2];
    auto& k4 = k_[3];
    if (!rhs(y, k1)) return false;
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.5 * h * k1[i];
    if (!rhs(tmp_, k2)) return false;
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.5 * h * k2[i];
    if (!rhs(tmp_, k3)) return false;
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * k3[i];
    if (!rhs(tmp_, k4)) return false;
    out.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); });
  }

  /// RK4 over [t, t+h]; with the guard on, a failing step is split in halves.
  void rk4_guarded(std::vector<double>& y, double t, double h) {
    std::vector<double> out(n_);
    const bool ok = rk4(y, h, out);
    std::size_t bad = ok ? npos : 0;
    if (ok && cfg_.positivity_guard) bad = guard_violation(out);
    if (bad == npos) {
      if (cfg_.positivity_guard) clamp(out);
      y.swap(out);
      return;
    }
    if (!cfg_.positivity_guard && ok) {
      y.swap(out);
      return;
    }
    ++stats_.guard_retries;
    if (++splits_ > kMaxGuardSplits) {
      throw StiffnessError("positivity guard stalled at t = " + std::to_string(t) + " in component " +
                               std::to_string(bad),
                           t, bad);
    }
    if (h * 0.5 < kMinStep) {
      throw StiffnessError("step underflow at t = " + std::to_string(t) + " in component " +
                               std::to_string(bad),
                           t, bad);
    }
    rk4_guarded(y, t, 0.5 * h);
    rk4_guarded(y, t + 0.5 * h, 0.5 * h);
  }

  void begin_interval() { splits_ = 0; }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  const System& sys_;
  Layout layout_;
  const IntegratorConfig& cfg_;
  IntegrationStats& stats_;
  std::size_t n_;
  std::size_t splits_ = 0;
  std::array<std::vector<double>, 7> k_;
  std::vector<double> tmp_;
  std::vector<double> err_;
};

template <OdeSystem System>
void integrate_rk4(const System& sys, const IntegratorConfig& cfg, Trajectory& traj) {
  Stepper<System> stepper(sys, cfg, traj.stats);
  std::vector<double> y(traj.states.front().values().begin(), traj.states.front().values().end());
  // t_i = i * dt, with the last step shortened to land on t_end
  const double ratio = cfg.t_end / cfg.dt;
  auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  if (steps == 0) steps = 1;
  if (steps > cfg.max_steps) throw DomainError("integrator: step count exceeds max_steps");
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  double t = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t_next = (i == steps) ? cfg.t_end : static_cast<double>(i) * cfg.dt;
    stepper.begin_interval();
    stepper.rk4_guarded(y, t, t_next - t);
    ++traj.stats.accepted;
    t = t_next;
    traj.times.push_back(t);
    traj.states.emplace_back(traj.layout, y);
  }
}

// Dormand–Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

template <OdeSystem System>
void integrate_dopri(const System& sys, const IntegratorConfig& cfg, Trajectory& traj) {
  using DP = DormandPrince;
  Stepper<System> st(sys, cfg, traj.stats);
  const std::size_t n = st.n_;
  auto& k = st.k_;
  auto& tmp = st.tmp_;
  std::vector<double> y(traj.states.front().values().begin(), traj.states.front().values().end());
  std::vector<double> y_new(n);

  if (!st.rhs(y, k[0])) {
    throw AdmissibilityError("integrator: right-hand side undefined at the initial state");
  }

  double t = 0.0;
  double h = std::min(cfg.dt, cfg.t_end);
  const double snap = 1e-12 * std::max(1.0, cfg.t_end);
  std::size_t attempts = 0;
  std::size_t guard_streak = 0;

  auto shrink = [&](double factor, double at, std::size_t component) {
    h *= factor;
    if (h < kMinStep) {
      throw StiffnessError("step underflow at t = " + std::to_string(at) + " in component " +
                               std::to_string(component),
                           at, component);
    }
  };

  while (t < cfg.t_end) {
    if (++attempts > cfg.max_steps) {
      throw StiffnessError("integrator exceeded max_steps at t = " + std::to_string(t), t, 0);
    }
    bool last = false;
    if (t + h >= cfg.t_end - snap) {
      h = cfg.t_end - t;
      last = true;
    }

    auto stage = [&](std::vector<double>& out, auto&& combine) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * combine(i);
      return st.rhs(tmp, out);
    };
    bool ok = stage(k[1], [&](std::size_t i) { return DP::a21 * k[0][i]; }) &&
              stage(k[2], [&](std::size_t i) { return DP::a31 * k[0][i] + DP::a32 * k[1][i]; }) &&
              stage(k[3], [&](std::size_t i) {
                return DP::a41 * k[0][i] + DP::a42 * k[1][i] + DP::a43 * k[2][i];
              }) &&
              stage(k[4], [&](std::size_t i) {
                return DP::a51 * k[0][i] + DP::a52 * k[1][i] + DP::a53 * k[2][i] +
                       DP::a54 * k[3][i];
              }) &&
              stage(k[5], [&](std::size_t i) {
                return DP::a61 * k[0][i] + DP::a62 * k[1][i] + DP::a63 * k[2][i] +
                       DP::a64 * k[3][i] + DP::a65 * k[4][i];
              });
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) {
        y_new[i] = y[i] + h * (DP::a71 * k[0][i] + DP::a73 * k[2][i] + DP::a74 * k[3][i] +
                               DP::a75 * k[4][i] + DP::a76 * k[5][i]);
      }
      ok = st.rhs(y_new, k[6]);
    }
    if (!ok) {
      ++traj.stats.guard_retries;
      shrink(0.5, t, st.guard_violation(y_new) == st.npos ? 0 : st.guard_violation(y_new));
      continue;
    }

    double err_sq = 0.0;
    std::size_t worst = 0;
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (DP::e1 * k[0][i] + DP::e3 * k[2][i] + DP::e4 * k[3][i] +
                            DP::e5 * k[4][i] + DP::e6 * k[5][i] + DP::e7 * k[6][i]);
      const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      const double ratio = e / scale;
      if (std::abs(ratio) > worst_ratio) {
        worst_ratio = std::abs(ratio);
        worst = i;
      }
      err_sq += ratio * ratio;
    }
    const double err = std::sqrt(err_sq / static_cast<double>(n));
    if (err > 1.0) {
      ++traj.stats.rejected;
      shrink(std::max(0.2, 0.9 * std::pow(err, -0.2)), t, worst);
      continue;
    }

    if (cfg.positivity_guard) {
      const std::size_t bad = st.guard_violation(y_new);
      if (bad != st.npos) {
        ++traj.stats.guard_retries;
        if (++guard_streak > kMaxGuardSplits) {
          throw StiffnessError("positivity guard stalled at t = " + std::to_string(t) + " in component " +
                                   std::to_string(bad),
                               t, bad);
        }
        shrink(0.5, t, bad);
        continue;
      }
      const std::size_t clamps_before = traj.stats.clamps;
      st.clamp(y_new);
      if (traj.stats.clamps == clamps_before) guard_streak = 0;
      if (traj.stats.clamps != clamps_before && !st.rhs(y_new, k[6])) {
        throw AdmissibilityError("integrator: right-hand side undefined after clamping");
      }
    }

    t = last ? cfg.t_end : t + h;
    y.swap(y_new);
    k[0].swap(k[6]);
    ++traj.stats.accepted;
    traj.times.push_back(t);
    traj.states.emplace_back(traj.layout, y);

    const double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    h *= grow;
  }
}

}  // namespace detail

/// Integrates `sys` from s0 over [0, cfg.t_end].
///
/// With the positivity guard on, a step that drives any T entry to <= 0 or any
/// other entry below -abs_tol is retried with half the step; entries left in
/// [-abs_tol, 0) are clamped to 0 and counted in the trajectory stats.
template <OdeSystem System>
Trajectory integrate(const System& sys, const StateVector& s0, const IntegratorConfig& cfg) {
  cfg.validate();
  const Layout layout = sys.layout();
  if (s0.layout() != layout || s0.size() != layout.size()) {
    throw DimensionError("initial state layout does not match the system");
  }
  for (double v : s0.values()) {
    if (!std::isfinite(v)) throw DomainError("initial state has non-finite entries");
  }
  if (cfg.positivity_guard && layout.model != ModelKind::custom && !is_admissible(s0)) {
    throw AdmissibilityError("initial state is not admissible");
  }

  Trajectory traj;
  traj.layout = layout;
  traj.config = cfg;
  traj.times.push_back(0.0);
  traj.states.push_back(s0);
  if (cfg.method == Method::rk4_fixed) {
    detail::integrate_rk4(sys, cfg, traj);
  } else {
    detail::integrate_dopri(sys, cfg, traj);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Landmarks

enum class ExtremumKind { min, max };

inline std::string_view to_string(ExtremumKind k) { return k == ExtremumKind::min ? "min" : "max"; }

struct Landmark {
  std::string field;
  std::size_t component = 0;
  ExtremumKind kind = ExtremumKind::min;
  double value = 0.0;
  double time = 0.0;
  bool global = false;  // global extremum (may sit on an endpoint) vs interior local one
};

struct LandmarkReport {
  std::vector<Landmark> landmarks;
  bool degenerate = false;  // every compartment constant

  std::vector<Landmark> local(std::string_view field, ExtremumKind kind) const {
    std::vector<Landmark> out;
    for (const auto& l : landmarks)
      if (!l.global && l.field == field && l.kind == kind) out.push_back(l);
    return out;
  }

  const Landmark* global_extremum(std::string_view field, ExtremumKind kind) const {
    for (const auto& l : landmarks)
      if (l.global && l.field == field && l.kind == kind) return &l;
    return nullptr;
  }
};

namespace detail {

/// Vertex of the parabola through three points; falls back to the middle
/// point if the parabola is flat or the vertex leaves the bracket.
inline std::pair<double, double> refine_extremum(double t0, double x0, double t1, double x1,
                                                 double t2, double x2) {
  const double d0 = t0 - t1;
  const double d2 = t2 - t1;
  const double s0 = (x0 - x1) / d0;
  const double s2 = (x2 - x1) / d2;
  const double A = (s2 - s0) / (d2 - d0);
  const double B = s2 - A * d2;
  if (A == 0.0 || !std::isfinite(A)) return {t1, x1};
  const double s = -B / (2.0 * A);
  if (!(t1 + s >= t0 && t1 + s <= t2)) return {t1, x1};
  return {t1 + s, x1 + B * s + A * s * s};
}

}  // namespace detail

/// Global min/max per compartment plus the first `max_local` interior local
/// minima and maxima, times refined by a parabola through the bracketing
/// triple of grid points.
inline LandmarkReport detect_landmarks(const Trajectory& traj, std::size_t max_local = 2) {
  if (traj.size() < 3) throw DomainError("landmarks need a trajectory with at least 3 points");
  LandmarkReport report;
  const auto names = traj.layout.component_names();
  const auto& t = traj.times;
  const std::size_t m = traj.size();
  bool any_varying = false;

  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto x = traj.series(c);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) continue;
    any_varying = true;

    auto make = [&](std::size_t i, ExtremumKind kind, bool global) {
      Landmark l{names[c], c, kind, x[i], t[i], global};
      if (i > 0 && i + 1 < m) {
        const auto [tt, xx] = detail::refine_extremum(t[i - 1], x[i - 1], t[i], x[i], t[i + 1], x[i + 1]);
        l.time = tt;
        l.value = kind == ExtremumKind::min ? std::min(xx, x[i]) : std::max(xx, x[i]);
      }
      return l;
    };

    report.landmarks.push_back(make(static_cast<std::size_t>(lo - x.begin()), ExtremumKind::min, true));
    report.landmarks.push_back(make(static_cast<std::size_t>(hi - x.begin()), ExtremumKind::max, true));

    std::size_t mins = 0, maxs = 0;
    for (std::size_t i = 1; i + 1 < m && (mins < max_local || maxs < max_local); ++i) {
      const double tol = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(x[i]);
      const bool is_max = x[i] - x[i - 1] > tol && x[i] >= x[i + 1];
      const bool is_min = x[i - 1] - x[i] > tol && x[i] <= x[i + 1];
      if (is_max && maxs < max_local) {
        report.landmarks.push_back(make(i, ExtremumKind::max, false));
        ++maxs;
      } else if (is_min && mins < max_local) {
        report.landmarks.push_back(make(i, ExtremumKind::min, false));
        ++mins;
      }
    }
  }
  report.degenerate = !any_varying;
  return report;
}

// ---------------------------------------------------------------------------
// Convergence self-check

struct RichardsonResult {
  double order = std::numeric_limits<double>::quiet_NaN();
  double error_estimate = 0.0;  // Richardson estimate of the dt/4 run's end-state error
  bool defined = false;         // false when the differences vanish (order undefined)
  bool inconclusive = false;    // the positivity guard intervened
};

/// Empirical order of fixed-step RK4 from runs at dt, dt/2 and dt/4.
template <OdeSystem System>
RichardsonResult richardson_check(const System& sys, const StateVector& s0, IntegratorConfig cfg) {
  cfg.method = Method::rk4_fixed;
  std::array<Trajectory, 3> runs;
  for (std::size_t r = 0; r < 3; ++r) {
    IntegratorConfig c = cfg;
    c.dt = cfg.dt / static_cast<double>(1u << r);
    runs[r] = integrate(sys, s0, c);
  }
  RichardsonResult result;
  for (const auto& r : runs) {
    if (r.stats.guard_retries > 0 || r.stats.clamps > 0) result.inconclusive = true;
  }
  auto diff = [](const StateVector& a, const StateVector& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  };
  const double coarse = diff(runs[0].back(), runs[1].back());
  const double fine = diff(runs[1].back(), runs[2].back());
  result.error_estimate = fine / 15.0;
  if (coarse > 0.0 && fine > 0.0) {
    result.order = std::log2(coarse / fine);
    result.defined = true;
  }
  return result;
}

}  // namespace virodyn
