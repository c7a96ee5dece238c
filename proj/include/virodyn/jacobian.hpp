#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "virodyn/linalg.hpp"
#include "virodyn/models.hpp"

namespace virodyn {

struct AnalyticJacobian {
  Matrix matrix;
  bool one_sided = false;  // minmod evaluated exactly at a kink
};

namespace detail {

inline AnalyticJacobian jacobian_of(const NowakMayParams& p, std::span<const double> x) {
  const double T = x[0], V = x[2];
  Matrix m(3, 3);
  m << -p.beta - p.gamma_nm * V, 0.0, -p.gamma_nm * T,
       p.gamma_nm * V, -p.alpha, p.gamma_nm * T,
       0.0, p.a, -p.xi_nm;
  return {m};
}

inline AnalyticJacobian jacobian_of(const SnedecorParams& p, std::span<const double> x) {
  const double T = x[0], V = x[2];
  const double k = (1.0 - p.alpha_s) * p.beta_s;
  const double denom = p.gamma_s + V;
  Matrix m(3, 3);
  m << p.r_s * V / denom - p.beta - k * V, 0.0, -k * T + p.r_s * p.gamma_s * (T - 1.0) / (denom * denom),
       k * V, -p.alpha, k * T,
       -p.beta_s * V, p.a, -p.sigma_s - p.beta_s * T;
  return {m};
}

inline AnalyticJacobian jacobian_of(const PerelsonParams& p, std::span<const double> x) {
  const double T = x[0], V = x[2];
  Matrix m(4, 4);
  m << -p.beta - p.delta_p * V, 0.0, -p.delta_p * T, 0.0,
       p.delta_p * V, -p.alpha, p.delta_p * T, 0.0,
       0.0, p.a * p.theta, -p.sigma_p, 0.0,
       0.0, p.a * (1.0 - p.theta), 0.0, -p.sigma_p;
  return {m};
}

inline AnalyticJacobian jacobian_of(const DlrParams& p, std::span<const double> x) {
  const double T = x[0], V = x[2], W = x[3];
  if (!(T > 0.0)) throw AdmissibilityError("dlr jacobian: T must be strictly positive");
  const double r = V / T;
  const double J = eval_J(p.j, r);
  const auto slope = eval_J_slope(p.j, r);
  const double Jp = slope.value;
  // d/dT [T J(V/T)] = J - (V/T) J'
  const double dInf_dT = (J - r * Jp) / p.tau;
  const double dInf_dV = Jp / p.tau;
  Matrix m(4, 4);
  m << -p.beta - dInf_dT + p.omega * (V + W), 0.0, -dInf_dV + p.omega * T, p.omega * T,
       dInf_dT, -p.alpha, dInf_dV, 0.0,
       -p.zeta * V, p.a * p.theta, -p.zeta * T, 0.0,
       -p.zeta * W, p.a * (1.0 - p.theta), 0.0, -p.zeta * T;
  return {m, slope.one_sided};
}

inline AnalyticJacobian jacobian_of(const MultiStrainParams& p, std::span<const double> x) {
  const std::size_t n = p.n;
  const auto ti = [](std::size_t j) { return static_cast<Eigen::Index>(j); };
  const auto ui = [n](std::size_t j) { return static_cast<Eigen::Index>(n + j); };
  const auto vi = [n](std::size_t j) { return static_cast<Eigen::Index>(2 * n + j); };
  const auto wi = [n](std::size_t j) { return static_cast<Eigen::Index>(3 * n + j); };

  double t_sum = 0.0, u_sum = 0.0, v_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    t_sum += x[j];
    u_sum += x[n + j];
    v_sum += x[2 * n + j];
  }
  if (!(t_sum > 0.0)) throw AdmissibilityError("multistrain jacobian: total T must be positive");

  const double r = v_sum / t_sum;
  const double J = eval_J(p.j, r);
  const auto slope = eval_J_slope(p.j, r);
  const double Jp = slope.value;
  const double dr_dT = -v_sum / (t_sum * t_sum);
  const double dr_dV = 1.0 / t_sum;

  const auto dim = static_cast<Eigen::Index>(4 * n);
  Matrix m = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j < n; ++j) {
    const double Tj = x[j], Vj = x[2 * n + j], Wj = x[3 * n + j];
    const double inf_scale = Tj * Jp / p.tau[j];
    for (std::size_t i = 0; i < n; ++i) {
      // infection term T_j J(V/T) / tau_j depends on every T_i and V_i
      const double dInf_dTi = (i == j ? J / p.tau[j] : 0.0) + inf_scale * dr_dT;
      const double dInf_dVi = inf_scale * dr_dV;
      m(ti(j), ti(i)) -= dInf_dTi;
      m(ti(j), vi(i)) -= dInf_dVi;
      m(ui(j), ti(i)) += dInf_dTi;
      m(ui(j), vi(i)) += dInf_dVi;
    }
    m(ti(j), ti(j)) += -p.beta[j] + p.c[j] * (Vj + Wj);
    m(ti(j), vi(j)) += p.c[j] * Tj;
    m(ti(j), wi(j)) += p.c[j] * Tj;
    m(ui(j), ui(j)) += -p.alpha[j];

    m(vi(j), ti(j)) += -p.xi[j] * Vj;
    m(vi(j), vi(j)) += -p.xi[j] * Tj;
    m(wi(j), ti(j)) += -p.xi[j] * Wj;
    m(wi(j), wi(j)) += -p.xi[j] * Tj;

    if (v_sum > 0.0) {
      double inflow = 0.0;
      for (std::size_t k = 0; k < n; ++k) inflow += p.mutation(k, j) * x[2 * n + k];
      const double share = inflow / v_sum;
      const double v_yield = p.a * p.theta;
      const double w_yield = p.a * (1.0 - p.theta);
      for (std::size_t i = 0; i < n; ++i) {
        m(vi(j), ui(i)) += v_yield * share;
        m(wi(j), ui(i)) += w_yield * share;
        // d share / d V_i = (S_ij - share) / V
        const double dshare = (p.mutation(i, j) - share) / v_sum;
        m(vi(j), vi(i)) += v_yield * u_sum * dshare;
        m(wi(j), vi(i)) += w_yield * u_sum * dshare;
      }
    }
  }
  return {m, slope.one_sided};
}

}  // namespace detail

/// Analytic Jacobian of the model's right-hand side at `s`.
inline AnalyticJacobian jacobian(const ModelSystem& sys, const StateVector& s) {
  detail::require_layout(s, sys.kind(), sys.layout().strains);
  return std::visit([&](const auto& p) { return detail::jacobian_of(p, s.values()); },
                    sys.params());
}

/// Central finite differences, step cbrt(eps) * max(|x_i|, 1). Steps on T
/// entries are capped so the probe stays inside T > 0.
template <class System>
Matrix finite_difference_jacobian(const System& sys, const StateVector& s) {
  const std::size_t n = s.size();
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix m(dim, dim);
  std::vector<double> xp(s.values().begin(), s.values().end());
  std::vector<double> xm = xp;
  std::vector<double> fp(n), fm(n);
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  for (std::size_t i = 0; i < n; ++i) {
    double h = base * std::max(std::abs(s[i]), 1.0);
    if (s.layout().strictly_positive(i)) h = std::min(h, 0.5 * s[i]);
    xp[i] = s[i] + h;
    xm[i] = s[i] - h;
    const double width = xp[i] - xm[i];
    sys.evaluate(xp, fp);
    sys.evaluate(xm, fm);
    for (std::size_t r = 0; r < n; ++r) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = (fp[r] - fm[r]) / width;
    }
    xp[i] = s[i];
    xm[i] = s[i];
  }
  return m;
}

/// max |A - B| scaled by max |A|.
inline double matrix_relative_error(const Matrix& reference, const Matrix& other) {
  const double scale = reference.cwiseAbs().maxCoeff();
  const double diff = (reference - other).cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace virodyn
