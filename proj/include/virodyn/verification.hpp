#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "virodyn/analysis.hpp"
#include "virodyn/integrator.hpp"
#include "virodyn/models.hpp"

namespace virodyn {

inline constexpr double kPositivityTolerance = 1e-9;
inline constexpr double kBoundTolerance = 1e-8;
inline constexpr double kReductionTolerance = 1e-8;

/// Outcome of checking one theorem along a trajectory. `margin` is the worst
/// slack observed (negative means violated); `time`/`component` locate it.
struct TheoremReport {
  std::string theorem;
  bool pass = true;
  double margin = std::numeric_limits<double>::infinity();
  double time = 0.0;
  std::size_t component = 0;
  double value = 0.0;  // check-specific headline number
  std::string notice;
};

/// Every state keeps T > 0 and all other compartments >= -1e-9.
/// `value` is the minimum T attained.
inline TheoremReport check_positivity(const Trajectory& traj) {
  TheoremReport r;
  r.theorem = "positivity";
  r.value = std::numeric_limits<double>::infinity();
  const auto& layout = traj.layout;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.states[k];
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool strict = layout.strictly_positive(i);
      const double slack = strict ? s[i] : s[i] + kPositivityTolerance;
      if (strict) r.value = std::min(r.value, s[i]);
      const bool ok = strict ? s[i] > 0.0 : slack >= 0.0;
      if (slack < r.margin || !ok) {
        if (!ok) r.pass = false;
        if (slack < r.margin) {
          r.margin = slack;
          r.time = traj.times[k];
          r.component = i;
        }
      }
    }
  }
  return r;
}

/// S = T + U + (omega/zeta)(V + W) stays under S(0) + beta t when eta <= 0
/// and under S(0) e^{gamma t} + (beta/gamma)(e^{gamma t} - 1) when eta > 0.
inline TheoremReport check_global_bound(const Trajectory& traj, const DlrParams& p) {
  if (traj.layout.model != ModelKind::dlr) throw DimensionError("global bound needs a dlr trajectory");
  TheoremReport r;
  const double eta = p.a * p.omega - p.alpha * p.zeta;
  const double gamma = std::abs(eta / p.zeta);
  r.theorem = eta <= 0.0 ? "global-bound-linear" : "global-bound-exponential";
  auto S = [&](const StateVector& s) { return s[0] + s[1] + p.omega / p.zeta * (s[2] + s[3]); };
  const double s0 = S(traj.states.front());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    double bound;
    if (eta <= 0.0) {
      bound = s0 + p.beta * t;
    } else {
      const double e = std::exp(gamma * t);
      bound = s0 * e + p.beta / gamma * std::expm1(gamma * t);
    }
    const double slack = bound - S(traj.states[k]);
    if (slack < r.margin) {
      r.margin = slack;
      r.time = t;
      r.value = S(traj.states[k]);
    }
  }
  r.pass = r.margin >= -kBoundTolerance;
  return r;
}

namespace detail {

/// Three-point derivative on a possibly non-uniform grid (second order).
inline double three_point_derivative(double hm, double hp, double fm, double f0, double fp) {
  return (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hm * hp * (hm + hp));
}

}  // namespace detail

struct MacroscopicLawReport {
  TheoremReport virus;     // d(V+W)/dt = aU - sum xi_j (V_j+W_j) T_j
  TheoremReport combined;  // d/dt [T + U + sum (C_j/xi_j)(V_j+W_j)]
  double dt = 0.0;         // largest grid spacing
  bool pass() const { return virus.pass && combined.pass; }
};

/// Finite-difference witness of the two aggregate laws of the multi-strain
/// model. `value` holds the worst residual, `margin` its slack against
/// 10 dt^2 scale.
inline MacroscopicLawReport check_macroscopic_laws(const Trajectory& traj, const MultiStrainParams& p) {
  if (traj.layout.model != ModelKind::multistrain || traj.layout.strains != p.n) {
    throw DimensionError("macroscopic laws need a multi-strain trajectory matching the parameters");
  }
  if (traj.size() < 3) throw DomainError("macroscopic laws need at least 3 grid points");
  const std::size_t n = p.n;
  const auto& t = traj.times;

  MacroscopicLawReport out;
  out.virus.theorem = "macroscopic-virus";
  out.combined.theorem = "macroscopic-combined";

  double h_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < t.size(); ++k) {
    out.dt = std::max(out.dt, t[k] - t[k - 1]);
    h_min = std::min(h_min, t[k] - t[k - 1]);
  }
  const bool uniform = out.dt - h_min <= 1e-9 * out.dt;
  if (!uniform) {
    out.virus.notice = out.combined.notice = "non-uniform grid: using the non-uniform three-point stencil";
  }

  std::vector<double> q_virus(traj.size()), q_comb(traj.size());
  std::vector<double> r_virus(traj.size()), r_comb(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.states[k];
    double vw = 0.0, comb = 0.0, u_sum = 0.0, v_sum = 0.0, loss = 0.0, base = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double T = s[j], U = s[n + j], V = s[2 * n + j], W = s[3 * n + j];
      vw += V + W;
      comb += T + U + p.c[j] / p.xi[j] * (V + W);
      u_sum += U;
      v_sum += V;
      loss += p.xi[j] * (V + W) * T;
      base += p.gamma[j] - p.beta[j] * T - p.alpha[j] * U;
    }
    double production = 0.0;
    if (v_sum > 0.0) {
      for (std::size_t j = 0; j < n; ++j) {
        double inflow = 0.0;
        for (std::size_t k2 = 0; k2 < n; ++k2) inflow += p.mutation(k2, j) * s[2 * n + k2];
        production += p.c[j] / p.xi[j] * inflow / v_sum;
      }
    }
    q_virus[k] = vw;
    q_comb[k] = comb;
    r_virus[k] = (v_sum > 0.0 ? p.a * u_sum : 0.0) - loss;
    r_comb[k] = base + p.a * u_sum * production;
  }

  auto check = [&](TheoremReport& rep, const std::vector<double>& q, const std::vector<double>& rhs) {
    double scale = 1.0;
    for (double v : q) scale = std::max(scale, std::abs(v));
    const double tol = 10.0 * out.dt * out.dt * scale;
    rep.value = 0.0;
    for (std::size_t k = 1; k + 1 < q.size(); ++k) {
      const double d = detail::three_point_derivative(t[k] - t[k - 1], t[k + 1] - t[k], q[k - 1], q[k], q[k + 1]);
      const double res = std::abs(d - rhs[k]);
      if (res > rep.value) {
        rep.value = res;
        rep.time = t[k];
      }
    }
    rep.margin = tol - rep.value;
    rep.pass = rep.margin >= 0.0;
  };
  check(out.virus, q_virus, r_virus);
  check(out.combined, q_comb, r_comb);
  return out;
}

/// Integrates DLR and its one-strain multi-strain image from the same start
/// and reports the max-norm gap over the whole run.
inline TheoremReport reduction_equivalence(const DlrParams& p, const StateVector& s0,
                                           IntegratorConfig cfg = {}) {
  TheoremReport r;
  r.theorem = "reduction-equivalence";
  const ModelSystem dlr(p);
  const ModelSystem multi(MultiStrainParams::from_dlr(p));
  const auto a = integrate(dlr, s0, cfg);
  const auto b = integrate(multi, StateVector(multi.layout(), std::vector<double>(s0.values().begin(), s0.values().end())), cfg);
  if (a.size() != b.size()) {
    r.pass = false;
    r.margin = -std::numeric_limits<double>::infinity();
    r.notice = "time grids differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " points)";
    return r;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < s0.size(); ++i) {
      const double gap = std::abs(a.states[k][i] - b.states[k][i]);
      if (gap > r.value) {
        r.value = gap;
        r.time = a.times[k];
        r.component = i;
      }
    }
  }
  r.margin = kReductionTolerance - r.value;
  r.pass = r.margin > 0.0;
  return r;
}

/// 600 days of fixed-step RK4 (dt = 0.01) so both runs share one time grid.
inline TheoremReport reduction_equivalence(const DlrParams& p) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4_fixed;
  cfg.dt = 0.01;
  cfg.t_end = 600.0;
  return reduction_equivalence(p, StateVector(layout_for(ModelKind::dlr), {1.0, 0.0, 0.05, 0.05}), cfg);
}

/// Random admissible state: T uniform in (0, 2], every other compartment
/// log-uniform in [1e-4, 10].
inline StateVector sample_admissible_state(const Layout& layout, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  StateVector s(layout);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (layout.strictly_positive(i)) {
      s[i] = 2.0 * (1.0 - unit(rng));
    } else {
      s[i] = std::pow(10.0, -4.0 + 5.0 * unit(rng));
    }
  }
  return s;
}

}  // namespace virodyn
