#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SVD>

#include "virodyn/errors.hpp"
#include "virodyn/jacobian.hpp"
#include "virodyn/linalg.hpp"
#include "virodyn/models.hpp"
#include "virodyn/roots.hpp"

namespace virodyn {

enum class FixedPointKind { health, seropositive };
enum class Stability { stable, unstable, marginal };

inline std::string_view to_string(FixedPointKind k) {
  return k == FixedPointKind::health ? "health" : "seropositive";
}

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "unknown";
}

inline constexpr double kMarginalBand = 1e-9;
inline constexpr double kResidualLimit = 1e-9;
inline constexpr double kHealthThreshold = 1e-12;

struct FixedPointReport {
  StateVector state;
  FixedPointKind kind = FixedPointKind::health;
  double residual = 0.0;
  std::vector<Complex> eigenvalues;
  Stability stability = Stability::marginal;
  bool classified = false;
  std::size_t positive_eigenvalues = 0;  // Re > band
  std::size_t negative_eigenvalues = 0;  // Re < -band
  bool on_boundary = false;              // some non-T compartment is zero
  std::vector<std::vector<double>> admissible_unstable_dirs;
  bool defective = false;   // eigenvectors nearly dependent; direction check skipped
  bool one_sided = false;   // Jacobian taken at a minmod kink

  std::size_t admissible_unstable_count() const { return admissible_unstable_dirs.size(); }
};

inline double fixed_point_residual(const ModelSystem& sys, const StateVector& s) {
  return max_abs(sys.rhs(s).values());
}

/// Fills eigenvalues, stability and admissible unstable directions.
inline FixedPointReport classify_stability(const ModelSystem& sys, FixedPointReport fp) {
  fp.residual = fixed_point_residual(sys, fp.state);
  if (!(fp.residual < kResidualLimit)) {
    throw DomainError("classify_stability: residual " + std::to_string(fp.residual) +
                      " is not below 1e-9");
  }
  const auto jac = jacobian(sys, fp.state);
  fp.one_sided = jac.one_sided;
  const auto eig = eigen_decompose(jac.matrix);
  fp.eigenvalues = eig.values;

  fp.positive_eigenvalues = 0;
  fp.negative_eigenvalues = 0;
  bool near_zero = false;
  for (const auto& l : eig.values) {
    if (l.real() > kMarginalBand) ++fp.positive_eigenvalues;
    else if (l.real() < -kMarginalBand) ++fp.negative_eigenvalues;
    else near_zero = true;
  }
  fp.stability = fp.positive_eigenvalues > 0 ? Stability::unstable
                 : near_zero                 ? Stability::marginal
                                             : Stability::stable;

  const auto& layout = fp.state.layout();
  std::vector<std::size_t> boundary;
  for (std::size_t i = 0; i < fp.state.size(); ++i) {
    if (!layout.strictly_positive(i) && std::abs(fp.state[i]) < kHealthThreshold) boundary.push_back(i);
  }
  fp.on_boundary = !boundary.empty();

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(eig.vectors);
  const auto& sv = svd.singularValues();
  fp.defective = sv.size() == 0 || sv(sv.size() - 1) < 1e-10 * sv(0);
  fp.admissible_unstable_dirs.clear();
  if (fp.defective) {
    fp.classified = true;
    return fp;
  }

  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(eig.values.size()); ++k) {
    const Complex l = eig.values[static_cast<std::size_t>(k)];
    if (!(l.real() > kMarginalBand) || std::abs(l.imag()) > 1e-12 * std::max(1.0, std::abs(l))) continue;
    std::vector<double> u(fp.state.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = eig.vectors(static_cast<Eigen::Index>(i), k).real();
      norm = std::max(norm, std::abs(u[i]));
    }
    if (norm == 0.0) continue;
    for (double& v : u) v /= norm;
    const double tol = 1e-10;
    for (double sign : {1.0, -1.0}) {
      const bool enters = std::all_of(boundary.begin(), boundary.end(),
                                      [&](std::size_t i) { return sign * u[i] >= -tol; });
      if (enters) {
        for (double& v : u) v *= sign;
        fp.admissible_unstable_dirs.push_back(u);
        break;
      }
    }
  }
  fp.classified = true;
  return fp;
}

namespace detail {

inline FixedPointKind kind_of_state(const StateVector& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.layout().strictly_positive(i) && std::abs(s[i]) >= kHealthThreshold) {
      return FixedPointKind::seropositive;
    }
  }
  return FixedPointKind::health;
}

inline FixedPointReport make_report(const ModelSystem& sys, StateVector s) {
  FixedPointReport r;
  r.kind = kind_of_state(s);
  r.state = std::move(s);
  return classify_stability(sys, std::move(r));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Nowak–May

inline std::vector<FixedPointReport> fixed_points_nowak_may(const NowakMayParams& p) {
  const ModelSystem sys(p);
  std::vector<FixedPointReport> out{detail::make_report(sys, sys.health())};
  if (p.alpha * p.xi_nm - p.a * p.gamma_nm < 0.0) {
    const double T = p.alpha * p.xi_nm / (p.a * p.gamma_nm);
    const double V = p.beta * (1.0 - T) / (p.gamma_nm * T);
    const double U = p.xi_nm * V / p.a;
    out.push_back(detail::make_report(sys, StateVector(sys.layout(), {T, U, V})));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snedecor

/// Coefficients of A V^2 + B V + C = 0 for the seropositive V*, along with
/// T* and T* - 1 (formed without cancellation).
struct SnedecorQuadratic {
  double t_star = 0.0;
  double t_minus_one = 0.0;
  double a = 0.0, b = 0.0, c = 0.0;
};

namespace detail {

template <class Real>
struct SnedecorCoefficients {
  Real t, tm1, a, b, c;
};

template <class Real>
SnedecorCoefficients<Real> snedecor_coefficients(const SnedecorParams& p) {
  const Real k = (Real(1) - Real(p.alpha_s)) * Real(p.beta_s);
  const Real denom = Real(p.a) * (Real(1) - Real(p.alpha_s)) / Real(p.alpha) - Real(1);
  const Real ratio = Real(p.sigma_s) / Real(p.beta_s);
  const Real t = ratio / denom;
  const Real tm1 = (ratio - denom) / denom;
  const Real a = k * t;
  const Real b = k * t * Real(p.gamma_s) + tm1 * (Real(p.beta) - Real(p.r_s));
  const Real c = tm1 * Real(p.beta) * Real(p.gamma_s);
  return {t, tm1, a, b, c};
}

}  // namespace detail

inline SnedecorQuadratic snedecor_quadratic(const SnedecorParams& p) {
  const auto q = detail::snedecor_coefficients<double>(p);
  return {q.t, q.tm1, q.a, q.b, q.c};
}

/// Discriminant of the V* quadratic at p.alpha_s, with an uncertainty
/// interval from comparing compensated double and extended-precision runs.
inline CompensatedValue snedecor_discriminant(const SnedecorParams& p) {
  const auto q = detail::snedecor_coefficients<double>(p);
  const double d = discriminant_compensated(q.a, q.b, q.c);
  const auto ql = detail::snedecor_coefficients<long double>(p);
  const long double dl = ql.b * ql.b - 4.0L * ql.a * ql.c;
  const double spread = std::abs(static_cast<double>(static_cast<long double>(d) - dl));
  const double floor = 4.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(q.b * q.b) + std::abs(4.0 * q.a * q.c));
  const double hw = std::max(spread, floor);
  return {d, d - hw, d + hw};
}

struct SnedecorThresholds {
  double alpha_s4 = 0.0;  // T* = 1: seropositivity exists below
  double alpha_s3 = 0.0;  // T* diverges
  std::optional<double> alpha_s1;  // discriminant turns negative
  std::optional<double> alpha_s2;  // discriminant turns positive again
  CompensatedValue discriminant_min{};
  double discriminant_min_at = 0.0;
};

inline double snedecor_alpha_s4(const SnedecorParams& p) {
  return 1.0 - p.alpha * (1.0 + p.sigma_s / p.beta_s) / p.a;
}

inline SnedecorThresholds thresholds_snedecor(const SnedecorParams& p, std::size_t scan_points = 4000) {
  validate(p);
  SnedecorThresholds th;
  th.alpha_s4 = snedecor_alpha_s4(p);
  th.alpha_s3 = 1.0 - p.alpha / p.a;

  auto disc_at = [&](double alpha_s) {
    SnedecorParams q = p;
    q.alpha_s = alpha_s;
    return snedecor_discriminant(q);
  };
  const double base = th.alpha_s4;
  const double span = th.alpha_s3 - th.alpha_s4;
  if (!(span > 0.0)) return th;

  // Geometric offsets above alpha_s4: the interesting window is orders of
  // magnitude narrower than (alpha_s4, alpha_s3).
  const double lo = 1e-12 * span;
  const double hi = span * (1.0 - 1e-9);
  std::vector<double> xs(scan_points), ds(scan_points);
  for (std::size_t i = 0; i < scan_points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(scan_points - 1);
    xs[i] = base + lo * std::pow(hi / lo, f);
    ds[i] = disc_at(xs[i]).value;
  }

  std::vector<double> changes;
  for (std::size_t i = 0; i + 1 < scan_points; ++i) {
    if ((ds[i] < 0.0) != (ds[i + 1] < 0.0)) {
      changes.push_back(solve_bracketed([&](double x) { return disc_at(x).value; }, xs[i], xs[i + 1], 1e-15));
    }
  }
  if (changes.size() >= 2) {
    th.alpha_s1 = changes[0];
    th.alpha_s2 = changes[1];
  } else if (changes.size() == 1) {
    th.alpha_s1 = changes[0];
  }

  const auto best = static_cast<std::size_t>(std::min_element(ds.begin(), ds.end()) - ds.begin());
  const double bl = xs[best == 0 ? 0 : best - 1];
  const double bh = xs[std::min(best + 1, scan_points - 1)];
  const auto m = golden_section_min([&](double x) { return disc_at(x).value; }, bl, bh, 1e-15);
  th.discriminant_min_at = m.value < ds[best] ? m.x : xs[best];
  th.discriminant_min = disc_at(th.discriminant_min_at);
  return th;
}

inline std::vector<FixedPointReport> fixed_points_snedecor(const SnedecorParams& p) {
  const ModelSystem sys(p);
  std::vector<FixedPointReport> out{detail::make_report(sys, sys.health())};
  if (!(p.alpha_s < snedecor_alpha_s4(p))) return out;
  const auto q = snedecor_quadratic(p);
  const double d = discriminant_compensated(q.a, q.b, q.c);
  if (d < 0.0 || q.a == 0.0) return out;
  const double root = std::sqrt(d);
  // stable form of the larger root
  const double V = q.b >= 0.0 ? (-2.0 * q.c) / (q.b + root) : (-q.b + root) / (2.0 * q.a);
  if (!(V > 0.0)) return out;
  const double T = q.t_star;
  const double U = (1.0 - p.alpha_s) * p.beta_s * V * T / p.alpha;
  out.push_back(detail::make_report(sys, StateVector(sys.layout(), {T, U, V})));
  return out;
}

// ---------------------------------------------------------------------------
// Perelson

inline std::vector<FixedPointReport> fixed_points_perelson(const PerelsonParams& p) {
  const ModelSystem sys(p);
  std::vector<FixedPointReport> out{detail::make_report(sys, sys.health())};
  if (p.a * p.delta_p * p.theta - p.alpha * p.sigma_p > 0.0) {
    const double T = p.alpha * p.sigma_p / (p.a * p.theta * p.delta_p);
    const double V = p.beta * (1.0 - T) / (p.delta_p * T);
    const double U = p.sigma_p * V / (p.a * p.theta);
    const double W = p.a * (1.0 - p.theta) * U / p.sigma_p;
    out.push_back(detail::make_report(sys, StateVector(sys.layout(), {T, U, V, W})));
  }
  return out;
}

/// Coefficients (b1, b2, b3) of lambda^3 + b1 lambda^2 + b2 lambda + b3, the
/// characteristic polynomial of the (T, U, V) block at `s`.
inline std::array<double, 3> perelson_cubic(const PerelsonParams& p, const StateVector& s) {
  detail::require_layout(s, ModelKind::perelson);
  const double T = s[0], V = s[2];
  const double q = p.beta + p.delta_p * V;
  const double b1 = q + p.alpha + p.sigma_p;
  const double b2 = q * p.alpha + q * p.sigma_p + p.alpha * p.sigma_p - p.a * p.theta * p.delta_p * T;
  const double b3 = q * (p.alpha * p.sigma_p - p.a * p.theta * p.delta_p * T) +
                    p.a * p.theta * p.delta_p * p.delta_p * T * V;
  return {b1, b2, b3};
}

struct RouthHurwitzReport {
  double delta1 = 0.0, delta2 = 0.0, delta3 = 0.0;
  bool stable = false;  // every root has negative real part
};

inline RouthHurwitzReport routh_hurwitz_cubic(double b1, double b2, double b3) {
  RouthHurwitzReport r;
  r.delta1 = b1;
  r.delta2 = b1 * b2 - b3;
  r.delta3 = b3 * r.delta2;
  r.stable = r.delta1 > 0.0 && r.delta2 > 0.0 && r.delta3 > 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// DLR

struct DlrDerived {
  double eta = 0.0;          // a omega - alpha zeta
  double rho = 0.0;          // alpha zeta tau / (a theta)
  double v_bar = std::numeric_limits<double>::quiet_NaN();
  bool v_bar_defined = false;  // false when eta == 0
  double gamma_bound = 0.0;  // |eta / zeta|
  std::optional<double> l_threshold;  // only when eta < 0
};

namespace detail {

inline double dlr_psi(double v_bar, double x) {
  return 0.5 * (v_bar + std::sqrt(v_bar * v_bar - 4.0 * v_bar * x));
}

/// Indicator used by the L bisection: does J(X) - rho psi(X) become positive
/// somewhere on a 10^4-point scan of (0, x_max]?
inline bool dlr_positive_root_exists(const SaturationFn& fn, double v_bar, double rho, double x_max) {
  constexpr std::size_t n = 10000;
  const double x_min = x_max * 1e-10;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    const double x = x_min * std::pow(x_max / x_min, f);
    if (eval_J(fn, x) - rho * dlr_psi(v_bar, x) > 0.0) return true;
  }
  return false;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    g[i] = lo * std::pow(hi / lo, f);
  }
  return g;
}

/// Roots of h on a grid by sign change, each refined by bisection + Newton.
/// `g` is the unscaled residual that must drop below 1e-12 at each root.
template <class H, class G>
std::vector<double> scan_roots(const std::vector<double>& grid, H&& h, G&& g) {
  std::vector<double> roots;
  double prev = h(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = h(grid[i]);
    if ((prev > 0.0 && cur <= 0.0) || (prev < 0.0 && cur >= 0.0)) {
      const double x = solve_bracketed(h, grid[i - 1], grid[i]);
      const double res = g(x);
      if (!(std::abs(res) < 1e-12)) {
        throw NumericalFailure("fixed point root refinement stalled: residual " + std::to_string(res) +
                               " on bracket [" + std::to_string(grid[i - 1]) + ", " +
                               std::to_string(grid[i]) + "]");
      }
      roots.push_back(x);
    }
    prev = cur;
  }
  return roots;
}

}  // namespace detail

/// Supremum of rho for which J(X) = rho psi(X) has a positive root, at a
/// given V-bar < 0.
inline double compute_L_for_vbar(double v_bar, const SaturationFn& fn) {
  if (!(v_bar < 0.0) || !std::isfinite(v_bar)) throw DomainError("compute_L: needs eta < 0 (V-bar < 0)");
  const double x_max = std::max(25.0 * std::abs(v_bar), 25.0);
  double lo = 1.0, hi = 100.0;
  if (!detail::dlr_positive_root_exists(fn, v_bar, lo, x_max)) return lo;
  if (detail::dlr_positive_root_exists(fn, v_bar, hi, x_max)) return hi;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (detail::dlr_positive_root_exists(fn, v_bar, mid, x_max)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double compute_L(const DlrParams& p, const SaturationFn& fn) {
  const double eta = p.a * p.omega - p.alpha * p.zeta;
  if (!(eta < 0.0)) throw DomainError("compute_L: eta = " + std::to_string(eta) + " is not negative");
  return compute_L_for_vbar(p.beta * p.a * p.theta / eta, fn);
}

inline DlrDerived dlr_derived(const DlrParams& p, bool with_l = true) {
  DlrDerived d;
  d.eta = p.a * p.omega - p.alpha * p.zeta;
  d.rho = p.alpha * p.zeta * p.tau / (p.a * p.theta);
  d.gamma_bound = std::abs(d.eta / p.zeta);
  if (d.eta != 0.0) {
    d.v_bar = p.beta * p.a * p.theta / d.eta;
    d.v_bar_defined = true;
  }
  if (with_l && d.eta < 0.0) d.l_threshold = compute_L(p, p.j);
  return d;
}

/// Seropositive viral loads V* of the DLR model.
inline std::vector<double> dlr_seropositive_loads(const DlrParams& p) {
  const auto d = dlr_derived(p, false);
  const double rho = d.rho;
  std::vector<double> loads;
  if (d.eta > 0.0) {
    if (!(rho < 1.0)) return loads;
    const double vb = d.v_bar;
    auto x_of = [vb](double v) { return v * (vb - v) / vb; };
    auto g = [&](double v) { return eval_J(p.j, x_of(v)) - rho * v; };
    auto h = [&](double v) { return g(v) / v; };
    auto grid = detail::log_grid(vb * 1e-12, 0.5 * vb, 2000);
    for (double u : detail::log_grid(vb * 1e-12, 0.5 * vb, 2000)) grid.push_back(vb - u);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    loads = detail::scan_roots(grid, h, g);
  } else if (d.eta == 0.0) {
    if (!(rho < 1.0)) return loads;
    auto g = [&](double v) { return eval_J(p.j, v) - rho * v; };
    auto h = [&](double v) { return g(v) / v; };
    const double top = 2.0 / rho;
    loads = detail::scan_roots(detail::log_grid(top * 1e-12, top, 4000), h, g);
  } else {
    const double vb = d.v_bar;
    const double inv = 1.0 / rho;
    const double x_max = std::max({25.0 * std::abs(vb), 25.0, 2.0 * inv * (1.0 + inv / std::abs(vb))});
    auto g = [&](double x) { return eval_J(p.j, x) - rho * detail::dlr_psi(vb, x); };
    auto h = [&](double x) { return g(x) / x; };
    for (double x : detail::scan_roots(detail::log_grid(x_max * 1e-12, x_max, 4000), h, g)) {
      loads.push_back(detail::dlr_psi(vb, x));
    }
  }
  return loads;
}

inline StateVector dlr_state_from_load(const DlrParams& p, double V) {
  const auto d = dlr_derived(p, false);
  const double T = d.v_bar_defined ? d.v_bar / (d.v_bar - V) : 1.0;
  const double U = p.zeta * V * T / (p.a * p.theta);
  const double W = (1.0 - p.theta) * V / p.theta;
  return StateVector(layout_for(ModelKind::dlr), {T, U, V, W});
}

inline std::vector<FixedPointReport> fixed_points_dlr(const DlrParams& p) {
  const ModelSystem sys(p);
  std::vector<FixedPointReport> out{detail::make_report(sys, sys.health())};
  for (double V : dlr_seropositive_loads(p)) {
    out.push_back(detail::make_report(sys, dlr_state_from_load(p, V)));
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Fixed points for any model. Multi-strain models only report health.
inline std::vector<FixedPointReport> fixed_points(const ModelSystem& sys) {
  return std::visit(
      [&](const auto& p) -> std::vector<FixedPointReport> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NowakMayParams>) return fixed_points_nowak_may(p);
        else if constexpr (std::is_same_v<P, SnedecorParams>) return fixed_points_snedecor(p);
        else if constexpr (std::is_same_v<P, PerelsonParams>) return fixed_points_perelson(p);
        else if constexpr (std::is_same_v<P, DlrParams>) return fixed_points_dlr(p);
        else return {detail::make_report(sys, sys.health())};
      },
      sys.params());
}

}  // namespace virodyn
