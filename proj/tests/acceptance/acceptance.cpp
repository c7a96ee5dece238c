// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "virodyn/virodyn.hpp"

using namespace virodyn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }
bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

DlrParams dlr(double tau, double zeta) {
  DlrParams p;
  p.tau = tau;
  p.zeta = zeta;
  return p;
}

const std::vector<std::pair<double, double>> kDlrPairs{{10, 1}, {20, 3}, {1, 10}, {6, 6}, {10, 10}};

Trajectory run600(const ModelSystem& sys, const StateVector& s0) {
  IntegratorConfig cfg;
  cfg.t_end = 600;
  return integrate(sys, s0, cfg);
}

std::vector<const FixedPointReport*> seropositive(const std::vector<FixedPointReport>& fps) {
  std::vector<const FixedPointReport*> out;
  for (const auto& fp : fps)
    if (fp.kind == FixedPointKind::seropositive) out.push_back(&fp);
  return out;
}

Outcome snedecor_thresholds() {
  const auto th = thresholds_snedecor(SnedecorParams{});
  return {near(th.alpha_s4, 0.5492, 1e-4) && near(th.alpha_s3, 0.9972, 1e-4),
          fmt("alpha_s4=%.6f alpha_s3=%.6f", th.alpha_s4, th.alpha_s3)};
}

Outcome snedecor_window() {
  const auto th = thresholds_snedecor(SnedecorParams{});
  if (!th.alpha_s1 || !th.alpha_s2) return {false, "no sign change of the discriminant detected"};
  const auto& d = th.discriminant_min;
  const bool ok = within(*th.alpha_s1, 0.5491, 0.5493) && within(*th.alpha_s2, 0.5491, 0.5493) && d.value < 0.0 &&
                  std::abs(d.value) < 1e-11;
  return {ok, fmt("sign change on [%.10f, %.10f]; min %.4g in [%.4g, %.4g] at alpha_s=%.10f (%s)", *th.alpha_s1,
                  *th.alpha_s2, d.value, d.lo, d.hi, th.discriminant_min_at,
                  d.certainly_negative() ? "certainly negative" : "sign within rounding")};
}

Outcome nowak_may_seropositive() {
  NowakMayParams p;
  p.xi_nm = 1.0;
  const auto fps = fixed_points_nowak_may(p);
  const auto sero = seropositive(fps);
  if (sero.size() != 1) return {false, "expected one seropositive fixed point"};
  const double T = sero[0]->state[0], V = sero[0]->state[2];
  const ModelSystem sys(p);
  const auto traj = run600(sys, StateVector(sys.layout(), {1, 0.05, 0.05}));
  const auto lm = detect_landmarks(traj);
  const double vmax = lm.global_extremum("V", ExtremumKind::max)->value;
  const double tmin = lm.global_extremum("T", ExtremumKind::min)->value;
  const bool ok = near(T, 0.2240, 1e-3) && near(V, 2.771, 1e-2) && within(vmax, 55, 70) && within(tmin, 0.03, 0.04);
  return {ok, fmt("T*=%.5f V*=%.5f; max V=%.3f min T=%.5f", T, V, vmax, tmin)};
}

Outcome perelson_high_theta() {
  PerelsonParams p;
  p.theta = 0.6;
  const ModelSystem sys(p);
  const auto lm = detect_landmarks(run600(sys, StateVector(sys.layout(), {1, 0, 0.05, 0.05})));
  const auto* vmax = lm.global_extremum("V", ExtremumKind::max);
  const auto* tmin = lm.global_extremum("T", ExtremumKind::min);
  const Landmark* vlater = nullptr;
  for (const auto& l : lm.local("V", ExtremumKind::min)) {
    if (l.time > vmax->time) {
      vlater = &l;
      break;
    }
  }
  if (vlater == nullptr) return {false, "no V minimum after the peak"};
  const bool ok = within(vmax->value, 2.0, 2.4) && near(vmax->time, 39, 3) && within(tmin->value, 0.58, 0.62) &&
                  near(tmin->time, 58, 4) && within(vlater->value, 0.0175, 0.0215) && near(vlater->time, 116, 6);
  return {ok, fmt("max V %.4f @ %.2f; min T %.5f @ %.2f; later min V %.5f @ %.2f", vmax->value, vmax->time,
                  tmin->value, tmin->time, vlater->value, vlater->time)};
}

Outcome perelson_low_theta() {
  const ModelSystem sys(PerelsonParams{});
  const auto lm = detect_landmarks(run600(sys, StateVector(sys.layout(), {1, 0, 0.05, 0.05})));
  const auto* tmin = lm.global_extremum("T", ExtremumKind::min);
  return {near(tmin->value, 0.999625, 5e-5) && near(tmin->time, 6, 1.5),
          fmt("min T %.7f @ %.3f", tmin->value, tmin->time)};
}

Outcome perelson_stability() {
  PerelsonParams p;
  p.theta = 0.6;
  const auto fps = fixed_points_perelson(p);
  const auto sero = seropositive(fps);
  if (sero.size() != 1) return {false, "expected one seropositive fixed point"};
  const auto [b1, b2, b3] = perelson_cubic(p, sero[0]->state);
  const auto rh = routh_hurwitz_cubic(b1, b2, b3);
  const auto roots = eigenvalues(companion({b1, b2, b3}));
  const auto& eig = sero[0]->eigenvalues;
  double worst = 0.0;
  for (const auto& r : roots) {
    double best = INFINITY;
    for (const auto& e : eig) best = std::min(best, std::abs(r - e) / std::max(1.0, std::abs(r)));
    worst = std::max(worst, best);
  }
  const bool ok = rh.stable && rh.delta2 > 0.0 && sero[0]->stability == Stability::stable && worst < 1e-8;
  return {ok, fmt("delta1=%.6g delta2=%.6g delta3=%.6g; direct eigenvalues %s; cubic roots match to %.2g", rh.delta1,
                  rh.delta2, rh.delta3, std::string(to_string(sero[0]->stability)).c_str(), worst)};
}

Outcome dlr_derived_quantities() {
  struct Row {
    double tau, zeta, eta, rho;
  };
  const std::vector<Row> rows{{10, 1, 1.8, 0.28}, {20, 3, 0.4, 1.68}, {1, 10, -4.5, 0.28}, {10, 10, -4.5, 2.8},
                              {6, 6, -1.7, 1.008}};
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    const auto d = dlr_derived(dlr(r.tau, r.zeta), false);
    ok = ok && near(d.eta, r.eta, 1e-12) && near(d.rho, r.rho, 1e-12);
    detail += fmt("(%g,%g)->(%.4g,%.4g) ", r.tau, r.zeta, d.eta, d.rho);
  }
  detail += "; flag: the reference annotation eta=-4.5 for (6,6) is inconsistent with the closed form (-1.7)";
  return {ok, detail};
}

Outcome dlr_fixed_points_66() {
  const auto fps = fixed_points_dlr(dlr(6, 6));
  const auto sero = seropositive(fps);
  if (sero.size() != 2) return {false, fmt("found %zu seropositive fixed points", sero.size())};
  const std::vector<std::vector<double>> targets{{0.129, 0.03073, 0.992, 8.9}, {0.992, 0.00028, 0.00117, 0.01058}};
  bool ok = true;
  std::string detail;
  for (const auto& target : targets) {
    const FixedPointReport* match = nullptr;
    for (const auto* fp : sero) {
      bool all = true;
      for (std::size_t i = 0; i < 4; ++i) all = all && std::abs(fp->state[i] - target[i]) <= 0.01 * std::abs(target[i]);
      if (all) match = fp;
    }
    ok = ok && match != nullptr;
    if (match != nullptr) {
      detail += fmt("(%.5g, %.5g, %.5g, %.5g) %zu+ eigenvalues; ", match->state[0], match->state[1], match->state[2],
                    match->state[3], match->positive_eigenvalues);
    }
    if (match != nullptr && target[0] > 0.5) ok = ok && match->positive_eigenvalues == 1;
  }
  return {ok, detail};
}

Outcome dlr_threshold() {
  const SaturationFn tanh_fn{SaturationKind::tanh};
  const double l_pair = compute_L(dlr(1, 10), tanh_fn);
  const double l_lo = compute_L_for_vbar(-0.054, tanh_fn);
  const double l_hi = compute_L_for_vbar(-0.056, tanh_fn);
  const auto d = dlr_derived(dlr(1, 10), false);
  const bool ok = near(l_pair, 3.7, 0.2) && near(l_lo, 3.7, 0.2) && near(l_hi, 3.7, 0.2);
  return {ok, fmt("V_bar=%.5f L=%.5f; L(-0.054)=%.5f L(-0.056)=%.5f", d.v_bar, l_pair, l_lo, l_hi)};
}

std::vector<ModelParams> property_models() {
  SnedecorParams sp;
  sp.alpha_s = 0.3;
  return {NowakMayParams{}, sp, PerelsonParams{}, dlr(6, 6),
          MultiStrainParams::replicate(dlr(10, 1), 2, {0.95, 0.05, 0.05, 0.95})};
}

struct PropertyBatch {
  std::size_t runs = 0, violations = 0, failures = 0;
  double worst_min = INFINITY;
  std::size_t bound_checked = 0, bound_failed = 0;
  double worst_bound_margin = INFINITY;
  double seconds = 0.0;
};

const PropertyBatch& property_batch() {
  static const PropertyBatch batch = [] {
    PropertyBatch b;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20080301);
    for (const auto& base : property_models()) {
      for (std::size_t k = 0; k < 1000; ++k) {
        ModelParams params = base;
        const DlrParams* as_dlr = std::get_if<DlrParams>(&params);
        DlrParams dlr_params;
        if (as_dlr != nullptr) {
          const auto [tau, zeta] = kDlrPairs[k % kDlrPairs.size()];
          dlr_params = dlr(tau, zeta);
          params = dlr_params;
        }
        const ModelSystem sys(params);
        const auto s0 = sample_admissible_state(sys.layout(), rng);
        ++b.runs;
        try {
          const auto traj = run600(sys, s0);
          const auto pos = check_positivity(traj);
          if (!pos.pass) ++b.violations;
          b.worst_min = std::min(b.worst_min, pos.margin);
          if (as_dlr != nullptr) {
            const auto bound = check_global_bound(traj, dlr_params);
            ++b.bound_checked;
            if (!bound.pass) ++b.bound_failed;
            b.worst_bound_margin = std::min(b.worst_bound_margin, bound.margin);
          }
        } catch (const Error& e) {
          ++b.failures;
          std::fprintf(stderr, "  %s start %zu: %s\n", std::string(to_string(sys.kind())).c_str(), k, e.what());
        }
      }
    }
    b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return b;
  }();
  return batch;
}

Outcome positivity_suite() {
  const auto& b = property_batch();
  return {b.violations == 0 && b.failures == 0,
          fmt("%zu runs, %zu violations, %zu integration failures, worst positivity margin %.3g, %.1f s", b.runs,
              b.violations, b.failures, b.worst_min, b.seconds)};
}

Outcome bound_suite() {
  const auto& b = property_batch();
  return {b.bound_checked == 1000 && b.bound_failed == 0,
          fmt("%zu DLR trajectories, %zu over the bound, worst margin %.3g", b.bound_checked, b.bound_failed,
              b.worst_bound_margin)};
}

Outcome macroscopic_order() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MultiStrainParams m = MultiStrainParams::replicate(dlr(10, 1), 3, std::vector<double>(9));
  for (std::size_t k = 0; k < 3; ++k) {
    m.tau[k] = 5.0 + 10.0 * u(rng);
    m.xi[k] = 0.5 + u(rng);
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum += m.s[k * 3 + j] = (k == j ? 5.0 : 0.0) + u(rng);
    for (std::size_t j = 0; j < 3; ++j) m.s[k * 3 + j] /= sum;
  }
  const ModelSystem sys(m);
  const auto s0 = sample_admissible_state(sys.layout(), rng);
  std::vector<double> logh, logr;
  std::string detail;
  for (double dt : {0.02, 0.01, 0.005}) {
    IntegratorConfig cfg;
    cfg.method = Method::rk4_fixed;
    cfg.dt = dt;
    cfg.t_end = 20;
    const auto rep = check_macroscopic_laws(integrate(sys, s0, cfg), m);
    logh.push_back(std::log2(dt));
    logr.push_back(std::log2(rep.virus.value));
    detail += fmt("dt=%g residual=%.3g; ", dt, rep.virus.value);
  }
  const double mh = (logh[0] + logh[1] + logh[2]) / 3, mr = (logr[0] + logr[1] + logr[2]) / 3;
  double num = 0, den = 0;
  for (int i = 0; i < 3; ++i) {
    num += (logh[i] - mh) * (logr[i] - mr);
    den += (logh[i] - mh) * (logh[i] - mh);
  }
  const double order = num / den;
  return {near(order, 2.0, 0.3), detail + fmt("observed order %.3f", order)};
}

Outcome reduction_oracle() {
  bool ok = true;
  std::string detail;
  for (auto [tau, zeta] : kDlrPairs) {
    const auto r = reduction_equivalence(dlr(tau, zeta));
    ok = ok && r.pass && r.value <= 1e-8;
    detail += fmt("(%g,%g) %.2g; ", tau, zeta, r.value);
  }
  return {ok, detail};
}

Outcome solver_self_check() {
  NowakMayParams nm;
  IntegratorConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = 3.0;
  const auto rich = richardson_check(ModelSystem(nm), StateVector(layout_for(ModelKind::nowak_may), {1, 0.05, 0.05}), cfg);
  bool ok = rich.defined && !rich.inconclusive && near(rich.order, 4.0, 0.3);
  std::string detail = fmt("RK4 order %.3f; Jacobian worst rel. error:", rich.order);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& params : property_models()) {
    const ModelSystem sys(params);
    double worst = 0.0;
    std::size_t used = 0;
    while (used < 100) {
      StateVector s(sys.layout());
      for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = s.layout().strictly_positive(i) ? 0.2 + u(rng) : std::pow(10.0, -2.0 + 2.0 * u(rng));
      const auto a = jacobian(sys, s);
      if (a.one_sided) continue;
      worst = std::max(worst, matrix_relative_error(a.matrix, finite_difference_jacobian(sys, s)));
      ++used;
    }
    ok = ok && worst < 1e-6;
    detail += fmt(" %s %.2g", std::string(to_string(sys.kind())).c_str(), worst);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Snedecor thresholds alpha_s4, alpha_s3", snedecor_thresholds},
      {"Snedecor discriminant window", snedecor_window},
      {"Nowak-May seropositive fixed point and trajectory (xi=1)", nowak_may_seropositive},
      {"Perelson theta=0.6 landmarks", perelson_high_theta},
      {"Perelson theta=0.1 minimum T", perelson_low_theta},
      {"Perelson Routh-Hurwitz vs eigenvalues (theta=0.6)", perelson_stability},
      {"DLR derived eta and rho", dlr_derived_quantities},
      {"DLR fixed points at (6,6)", dlr_fixed_points_66},
      {"DLR threshold L with tanh", dlr_threshold},
      {"Positivity on 1000 random starts per model", positivity_suite},
      {"Global bound along DLR random trajectories", bound_suite},
      {"Macroscopic law residual order (n=3)", macroscopic_order},
      {"Reduction n=1 multistrain vs DLR", reduction_oracle},
      {"Solver self-check: Richardson order and Jacobians", solver_self_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("%s criterion %2zu: %s | %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
