#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "virodyn/errors.hpp"
#include "virodyn/saturation.hpp"
#include "virodyn/state.hpp"

namespace virodyn {

// Defaults carry the common values beta = 0.01, alpha = 0.7, a = 250 (per day)
// shared by every model, so scenarios only override what differs.

struct NowakMayParams {
  double beta = 0.01;       // T renewal rate
  double gamma_nm = 0.0125; // infection rate
  double alpha = 0.7;       // infected-cell death rate
  double a = 250.0;         // virion production rate
  double xi_nm = 10.0;      // viral clearance rate
};

struct SnedecorParams {
  double beta = 0.01;
  double r_s = 0.004;     // T-cell division rate
  double gamma_s = 4e-5;  // saturation constant
  double alpha_s = 0.0;   // treatment efficacy in [0, 1]
  double beta_s = 0.0125; // infection rate
  double alpha = 0.7;
  double a = 250.0;
  double sigma_s = 2.0;   // viral clearance
};

struct PerelsonParams {
  double beta = 0.01;
  double delta_p = 0.0125;  // infection rate
  double alpha = 0.7;
  double a = 250.0;
  double theta = 0.1;       // infectious fraction, in (0, 1)
  double sigma_p = 2.0;     // clearance rate
};

/// Dimensionless single-antigenicity model.
struct DlrParams {
  double beta = 0.01;
  double tau = 10.0;    // infection time constant (day)
  double omega = 0.01;  // immune stimulation
  double alpha = 0.7;
  double zeta = 1.0;    // immune kill
  double a = 250.0;
  double theta = 0.1;
  SaturationFn j{SaturationKind::tanh};
};

/// Multi-antigenicity model with n strains. `s` is the row-major mutation
/// matrix: s[k * n + j] is the probability that offspring of strain k carries
/// antigenicity j.
struct MultiStrainParams {
  std::size_t n = 1;
  std::vector<double> beta{0.01};
  std::vector<double> gamma{0.01};
  std::vector<double> c{0.01};
  std::vector<double> tau{10.0};
  std::vector<double> alpha{0.7};
  std::vector<double> xi{1.0};
  double a = 250.0;
  double theta = 0.1;
  std::vector<double> s{1.0};
  SaturationFn j{SaturationKind::tanh};

  double mutation(std::size_t k, std::size_t jj) const { return s[k * n + jj]; }

  /// n = 1, S = [[1]], dimensionless rates taken from `p` (T_equil = 1).
  static MultiStrainParams from_dlr(const DlrParams& p) { return replicate(p, 1, {1.0}); }

  /// n identical strains with rates from `p` and the given mutation matrix.
  static MultiStrainParams replicate(const DlrParams& p, std::size_t n, std::vector<double> s) {
    MultiStrainParams m;
    m.n = n;
    m.beta.assign(n, p.beta);
    m.gamma.assign(n, p.beta);
    m.c.assign(n, p.omega);
    m.tau.assign(n, p.tau);
    m.alpha.assign(n, p.alpha);
    m.xi.assign(n, p.zeta);
    m.a = p.a;
    m.theta = p.theta;
    m.s = std::move(s);
    m.j = p.j;
    return m;
  }
};

// ---------------------------------------------------------------------------
// Named scalar fields, used for scenario overrides and sweeps.

template <class P>
struct ParamField {
  std::string_view name;
  double P::*member;
};

template <class P>
struct ParamTraits;

template <>
struct ParamTraits<NowakMayParams> {
  static constexpr ModelKind kind = ModelKind::nowak_may;
  static constexpr std::array<ParamField<NowakMayParams>, 5> fields{{
      {"beta", &NowakMayParams::beta},
      {"gamma_nm", &NowakMayParams::gamma_nm},
      {"alpha", &NowakMayParams::alpha},
      {"a", &NowakMayParams::a},
      {"xi_nm", &NowakMayParams::xi_nm},
  }};
};

template <>
struct ParamTraits<SnedecorParams> {
  static constexpr ModelKind kind = ModelKind::snedecor;
  static constexpr std::array<ParamField<SnedecorParams>, 8> fields{{
      {"beta", &SnedecorParams::beta},
      {"r_s", &SnedecorParams::r_s},
      {"gamma_s", &SnedecorParams::gamma_s},
      {"alpha_s", &SnedecorParams::alpha_s},
      {"beta_s", &SnedecorParams::beta_s},
      {"alpha", &SnedecorParams::alpha},
      {"a", &SnedecorParams::a},
      {"sigma_s", &SnedecorParams::sigma_s},
  }};
};

template <>
struct ParamTraits<PerelsonParams> {
  static constexpr ModelKind kind = ModelKind::perelson;
  static constexpr std::array<ParamField<PerelsonParams>, 6> fields{{
      {"beta", &PerelsonParams::beta},
      {"delta_p", &PerelsonParams::delta_p},
      {"alpha", &PerelsonParams::alpha},
      {"a", &PerelsonParams::a},
      {"theta", &PerelsonParams::theta},
      {"sigma_p", &PerelsonParams::sigma_p},
  }};
};

template <>
struct ParamTraits<DlrParams> {
  static constexpr ModelKind kind = ModelKind::dlr;
  static constexpr std::array<ParamField<DlrParams>, 7> fields{{
      {"beta", &DlrParams::beta},
      {"tau", &DlrParams::tau},
      {"omega", &DlrParams::omega},
      {"alpha", &DlrParams::alpha},
      {"zeta", &DlrParams::zeta},
      {"a", &DlrParams::a},
      {"theta", &DlrParams::theta},
  }};
};

template <>
struct ParamTraits<MultiStrainParams> {
  static constexpr ModelKind kind = ModelKind::multistrain;
  static constexpr std::array<ParamField<MultiStrainParams>, 2> fields{{
      {"a", &MultiStrainParams::a},
      {"theta", &MultiStrainParams::theta},
  }};
};

/// Pointer to the named scalar field, or nullptr if the record has none.
template <class P>
double* find_param(P& p, std::string_view name) {
  for (const auto& f : ParamTraits<P>::fields) {
    if (f.name == name) return &(p.*(f.member));
  }
  return nullptr;
}

template <class P>
const double* find_param(const P& p, std::string_view name) {
  for (const auto& f : ParamTraits<P>::fields) {
    if (f.name == name) return &(p.*(f.member));
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Mutation matrix.

inline constexpr double kRowSumTolerance = 1e-12;

struct MutationMatrixReport {
  struct Entry {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
  };
  struct RowSum {
    std::size_t row = 0;
    double sum = 0.0;
  };

  bool nonnegative = true;
  bool rows_sum_to_one = true;
  std::vector<Entry> negative_entries;
  std::vector<RowSum> row_sum_violations;

  bool valid() const { return nonnegative && rows_sum_to_one; }
};

inline MutationMatrixReport validate_mutation_matrix(std::span<const double> flat, std::size_t n) {
  if (n == 0 || flat.size() != n * n) {
    throw DimensionError("mutation matrix must be square: " + std::to_string(flat.size()) +
                         " entries for n = " + std::to_string(n));
  }
  MutationMatrixReport r;
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = flat[k * n + j];
      if (!(v >= 0.0)) {
        r.nonnegative = false;
        r.negative_entries.push_back({k, j, v});
      }
      sum += v;
    }
    if (!(std::abs(sum - 1.0) <= kRowSumTolerance)) {
      r.rows_sum_to_one = false;
      r.row_sum_violations.push_back({k, sum});
    }
  }
  return r;
}

inline MutationMatrixReport validate_mutation_matrix(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  std::vector<double> flat;
  flat.reserve(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    if (m[k].size() != n) {
      throw DimensionError("mutation matrix row " + std::to_string(k) + " has " +
                           std::to_string(m[k].size()) + " entries, expected " +
                           std::to_string(n));
    }
    flat.insert(flat.end(), m[k].begin(), m[k].end());
  }
  return validate_mutation_matrix(flat, n);
}

// ---------------------------------------------------------------------------
// Record validation.

namespace detail {

inline void require_positive(double v, std::string_view model, std::string_view name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(model) + " parameter " + std::string(name) +
                      " must be finite and strictly positive (got " + std::to_string(v) + ")");
  }
}

inline void require_open_unit(double v, std::string_view model, std::string_view name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw DomainError(std::string(model) + " parameter " + std::string(name) +
                      " must lie in (0, 1) (got " + std::to_string(v) + ")");
  }
}

}  // namespace detail

inline void validate(const NowakMayParams& p) {
  for (const auto& f : ParamTraits<NowakMayParams>::fields)
    detail::require_positive(p.*(f.member), "nowak-may", f.name);
}

inline void validate(const SnedecorParams& p) {
  for (const auto& f : ParamTraits<SnedecorParams>::fields) {
    if (f.name == "alpha_s") continue;
    detail::require_positive(p.*(f.member), "snedecor", f.name);
  }
  if (!(p.alpha_s >= 0.0 && p.alpha_s <= 1.0)) {
    throw DomainError("snedecor parameter alpha_s must lie in [0, 1] (got " +
                      std::to_string(p.alpha_s) + ")");
  }
}

inline void validate(const PerelsonParams& p) {
  for (const auto& f : ParamTraits<PerelsonParams>::fields) {
    if (f.name == "theta") continue;
    detail::require_positive(p.*(f.member), "perelson", f.name);
  }
  detail::require_open_unit(p.theta, "perelson", "theta");
}

inline void validate(const DlrParams& p) {
  for (const auto& f : ParamTraits<DlrParams>::fields) {
    if (f.name == "theta") continue;
    detail::require_positive(p.*(f.member), "dlr", f.name);
  }
  detail::require_open_unit(p.theta, "dlr", "theta");
}

inline void validate(const MultiStrainParams& p) {
  if (p.n == 0) throw DomainError("multistrain parameter n must be positive");
  const std::pair<std::string_view, const std::vector<double>*> arrays[] = {
      {"beta", &p.beta}, {"gamma", &p.gamma}, {"c", &p.c},
      {"tau", &p.tau},   {"alpha", &p.alpha}, {"xi", &p.xi}};
  for (const auto& [name, v] : arrays) {
    if (v->size() != p.n) {
      throw DimensionError("multistrain array " + std::string(name) + " has " +
                           std::to_string(v->size()) + " entries, expected n = " +
                           std::to_string(p.n));
    }
    for (double x : *v) detail::require_positive(x, "multistrain", name);
  }
  detail::require_positive(p.a, "multistrain", "a");
  detail::require_open_unit(p.theta, "multistrain", "theta");
  const auto report = validate_mutation_matrix(p.s, p.n);
  if (!report.valid()) {
    throw DomainError("multistrain mutation matrix must be nonnegative with unit row sums");
  }
}

}  // namespace virodyn
