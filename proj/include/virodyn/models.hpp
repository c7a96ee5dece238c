#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <variant>

#include "virodyn/errors.hpp"
#include "virodyn/params.hpp"
#include "virodyn/saturation.hpp"
#include "virodyn/state.hpp"

namespace virodyn {

// Right-hand sides on raw spans. These are the kernels the integrator calls;
// the StateVector overloads below add layout checks.

inline void eval_rhs(const NowakMayParams& p, std::span<const double> x, std::span<double> dx) {
  const double T = x[0], U = x[1], V = x[2];
  const double infection = p.gamma_nm * V * T;
  dx[0] = p.beta * (1.0 - T) - infection;
  dx[1] = infection - p.alpha * U;
  dx[2] = p.a * U - p.xi_nm * V;
}

/// Reduced Snedecor system. The lymphocyte proliferation term is
/// r_S V / (gamma_S + V) (T - 1): it vanishes at health, which is the form
/// the Jacobian, the V* quadratic and the health characteristic polynomial
/// are all built on.
inline void eval_rhs(const SnedecorParams& p, std::span<const double> x, std::span<double> dx) {
  const double T = x[0], U = x[1], V = x[2];
  const double denom = p.gamma_s + V;
  if (denom == 0.0) throw SingularityError("snedecor: gamma_s + V vanishes");
  const double infection = (1.0 - p.alpha_s) * p.beta_s * V * T;
  dx[0] = p.beta * (1.0 - T) + p.r_s * V / denom * (T - 1.0) - infection;
  dx[1] = infection - p.alpha * U;
  dx[2] = p.a * U - p.sigma_s * V - p.beta_s * V * T;
}

inline void eval_rhs(const PerelsonParams& p, std::span<const double> x, std::span<double> dx) {
  const double T = x[0], U = x[1], V = x[2], W = x[3];
  const double infection = p.delta_p * V * T;
  dx[0] = p.beta * (1.0 - T) - infection;
  dx[1] = infection - p.alpha * U;
  dx[2] = p.a * p.theta * U - p.sigma_p * V;
  dx[3] = p.a * (1.0 - p.theta) * U - p.sigma_p * W;
}

// The DLR and multi-strain kernels share operation order term by term, so a
// one-strain multi-strain model with S = [[1]] reproduces DLR bit for bit.

inline void eval_rhs(const DlrParams& p, std::span<const double> x, std::span<double> dx) {
  const double T = x[0], U = x[1], V = x[2], W = x[3];
  if (!(T > 0.0)) throw AdmissibilityError("dlr: T must stay strictly positive");
  const double infection = T * eval_J(p.j, V / T) / p.tau;
  dx[0] = p.beta - p.beta * T - infection + p.omega * (V + W) * T;
  dx[1] = infection - p.alpha * U;
  dx[2] = p.a * p.theta * U - p.zeta * V * T;
  dx[3] = p.a * (1.0 - p.theta) * U - p.zeta * W * T;
}

inline void eval_rhs(const MultiStrainParams& p, std::span<const double> x, std::span<double> dx) {
  const std::size_t n = p.n;
  const auto T = x.subspan(0, n);
  const auto U = x.subspan(n, n);
  const auto V = x.subspan(2 * n, n);
  const auto W = x.subspan(3 * n, n);

  double t_sum = 0.0, u_sum = 0.0, v_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    t_sum += T[j];
    u_sum += U[j];
    v_sum += V[j];
  }
  if (!(t_sum > 0.0)) throw AdmissibilityError("multistrain: total T must stay strictly positive");

  const double saturation = eval_J(p.j, v_sum / t_sum);
  const double infectious_yield = p.a * p.theta * u_sum;
  const double defective_yield = p.a * (1.0 - p.theta) * u_sum;

  for (std::size_t j = 0; j < n; ++j) {
    const double infection = T[j] * saturation / p.tau[j];
    dx[j] = p.gamma[j] - p.beta[j] * T[j] - infection + p.c[j] * (V[j] + W[j]) * T[j];
    dx[n + j] = infection - p.alpha[j] * U[j];

    // Fraction of the offspring that carries antigenicity j. With no free
    // virus at all the mutation term is defined as zero.
    double share = 0.0;
    if (v_sum > 0.0) {
      double inflow = 0.0;
      for (std::size_t k = 0; k < n; ++k) inflow += p.mutation(k, j) * V[k];
      share = inflow / v_sum;
    }
    dx[2 * n + j] = infectious_yield * share - p.xi[j] * V[j] * T[j];
    dx[3 * n + j] = defective_yield * share - p.xi[j] * W[j] * T[j];
  }
}

namespace detail {

inline void require_layout(const StateVector& s, ModelKind kind, std::size_t strains = 1) {
  const auto& l = s.layout();
  if (l.model != kind || l.strains != strains || s.size() != l.size()) {
    throw DimensionError("state layout " + std::string(to_string(l.model)) + "/" +
                         std::to_string(l.strains) + " does not match model " +
                         std::string(to_string(kind)) + "/" + std::to_string(strains));
  }
}

template <class P>
StateVector rhs_checked(const StateVector& s, const P& p, ModelKind kind, std::size_t strains = 1) {
  require_layout(s, kind, strains);
  StateVector d(s.layout());
  eval_rhs(p, s.values(), d.values());
  return d;
}

}  // namespace detail

inline StateVector rhs_nowak_may(const StateVector& s, const NowakMayParams& p) {
  return detail::rhs_checked(s, p, ModelKind::nowak_may);
}

inline StateVector rhs_snedecor(const StateVector& s, const SnedecorParams& p) {
  return detail::rhs_checked(s, p, ModelKind::snedecor);
}

inline StateVector rhs_perelson(const StateVector& s, const PerelsonParams& p) {
  return detail::rhs_checked(s, p, ModelKind::perelson);
}

inline StateVector rhs_dlr(const StateVector& s, const DlrParams& p) {
  return detail::rhs_checked(s, p, ModelKind::dlr);
}

inline StateVector rhs_multistrain(const StateVector& s, const MultiStrainParams& p) {
  return detail::rhs_checked(s, p, ModelKind::multistrain, p.n);
}

struct FieldTotals {
  double T = 0.0, U = 0.0, V = 0.0, W = 0.0;
  friend bool operator==(const FieldTotals&, const FieldTotals&) = default;
};

/// Per-field sums over strains.
inline FieldTotals aggregate(const StateVector& s, const MultiStrainParams& p) {
  detail::require_layout(s, ModelKind::multistrain, p.n);
  FieldTotals t;
  for (std::size_t j = 0; j < p.n; ++j) {
    t.T += s.at(Field::T, j);
    t.U += s.at(Field::U, j);
    t.V += s.at(Field::V, j);
    t.W += s.at(Field::W, j);
  }
  return t;
}

// ---------------------------------------------------------------------------

using ModelParams =
    std::variant<NowakMayParams, SnedecorParams, PerelsonParams, DlrParams, MultiStrainParams>;

inline ModelKind kind_of(const ModelParams& p) {
  return std::visit([](const auto& q) { return ParamTraits<std::decay_t<decltype(q)>>::kind; }, p);
}

/// A model identity: parameter record plus the layout it acts on.
class ModelSystem {
 public:
  explicit ModelSystem(ModelParams params) : params_(std::move(params)) {
    std::visit([](const auto& q) { validate(q); }, params_);
    const std::size_t strains =
        std::holds_alternative<MultiStrainParams>(params_) ? std::get<MultiStrainParams>(params_).n : 1;
    layout_ = layout_for(kind_of(params_), strains);
  }

  ModelKind kind() const { return layout_.model; }
  const Layout& layout() const { return layout_; }
  std::size_t dimension() const { return layout_.size(); }
  const ModelParams& params() const { return params_; }

  template <class P>
  const P& params_as() const {
    if (const auto* p = std::get_if<P>(&params_)) return *p;
    throw DimensionError("model " + std::string(to_string(kind())) +
                         " does not carry the requested parameter record");
  }

  void evaluate(std::span<const double> x, std::span<double> dx) const {
    std::visit([&](const auto& p) { eval_rhs(p, x, dx); }, params_);
  }

  StateVector rhs(const StateVector& s) const {
    detail::require_layout(s, layout_.model, layout_.strains);
    StateVector d(layout_);
    evaluate(s.values(), d.values());
    return d;
  }

  /// Health equilibrium (T_j = gamma_j / beta_j for the multi-strain model).
  StateVector health() const {
    StateVector h = health_state(layout_);
    if (const auto* m = std::get_if<MultiStrainParams>(&params_)) {
      for (std::size_t j = 0; j < m->n; ++j) h.at(Field::T, j) = m->gamma[j] / m->beta[j];
    }
    return h;
  }

 private:
  ModelParams params_;
  Layout layout_{};
};

}  // namespace virodyn
