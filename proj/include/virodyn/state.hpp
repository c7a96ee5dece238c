#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "virodyn/errors.hpp"

namespace virodyn {

enum class ModelKind { nowak_may, snedecor, perelson, dlr, multistrain, custom };

enum class Field { T, U, V, W };

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::nowak_may: return "nowak-may";
    case ModelKind::snedecor: return "snedecor";
    case ModelKind::perelson: return "perelson";
    case ModelKind::dlr: return "dlr";
    case ModelKind::multistrain: return "multistrain";
    case ModelKind::custom: return "custom";
  }
  return "unknown";
}

inline ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::nowak_may, ModelKind::snedecor, ModelKind::perelson, ModelKind::dlr,
                 ModelKind::multistrain}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown model '" + std::string(name) + "'");
}

inline char field_letter(Field f) { return "TUVW"[static_cast<int>(f)]; }

/// Compartment layout of a state vector.
///
/// Three-field models store (T, U, V); the four-field models store
/// (T, U, V, W). The multi-strain model stores each field as a contiguous
/// block of `strains` entries: T_0..T_{n-1}, U_0.., V_0.., W_0...
/// `custom` is an untyped layout of `strains` free components, used for test
/// systems; none of its components is required to stay strictly positive.
struct Layout {
  ModelKind model = ModelKind::dlr;
  std::size_t strains = 1;

  std::size_t field_count() const {
    switch (model) {
      case ModelKind::nowak_may:
      case ModelKind::snedecor: return 3;
      case ModelKind::custom: return 1;
      default: return 4;
    }
  }

  std::size_t size() const { return field_count() * strains; }

  bool has(Field f) const {
    return model != ModelKind::custom && static_cast<std::size_t>(f) < field_count();
  }

  std::size_t index(Field f, std::size_t strain = 0) const {
    if (!has(f) || strain >= strains) {
      throw DimensionError(std::string("layout ") + std::string(to_string(model)) +
                           " has no compartment " + field_letter(f) + "_" +
                           std::to_string(strain));
    }
    return static_cast<std::size_t>(f) * strains + strain;
  }

  /// T compartments must stay strictly positive; everything else only >= 0.
  bool strictly_positive(std::size_t i) const {
    return model != ModelKind::custom && i < strains;
  }

  std::vector<std::string> component_names() const {
    std::vector<std::string> names;
    names.reserve(size());
    if (model == ModelKind::custom) {
      for (std::size_t i = 0; i < strains; ++i) names.push_back("x" + std::to_string(i));
      return names;
    }
    for (std::size_t f = 0; f < field_count(); ++f) {
      for (std::size_t j = 0; j < strains; ++j) {
        std::string name(1, field_letter(static_cast<Field>(f)));
        if (model == ModelKind::multistrain) name += "_" + std::to_string(j);
        names.push_back(std::move(name));
      }
    }
    return names;
  }

  friend bool operator==(const Layout&, const Layout&) = default;
};

inline Layout layout_for(ModelKind kind, std::size_t strains = 1) {
  if (kind != ModelKind::multistrain && kind != ModelKind::custom) strains = 1;
  if (strains == 0) throw DimensionError("layout needs at least one strain");
  return Layout{kind, strains};
}

/// Tagged contiguous array of compartment values.
class StateVector {
 public:
  StateVector() = default;

  explicit StateVector(Layout layout) : layout_(layout), values_(layout.size(), 0.0) {}

  StateVector(Layout layout, std::vector<double> values)
      : layout_(layout), values_(std::move(values)) {
    if (values_.size() != layout_.size()) {
      throw DimensionError("state has " + std::to_string(values_.size()) +
                           " entries, layout " + std::string(to_string(layout_.model)) +
                           " expects " + std::to_string(layout_.size()));
    }
  }

  StateVector(Layout layout, std::initializer_list<double> values)
      : StateVector(layout, std::vector<double>(values)) {}

  const Layout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double at(Field f, std::size_t strain = 0) const { return values_[layout_.index(f, strain)]; }
  double& at(Field f, std::size_t strain = 0) { return values_[layout_.index(f, strain)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const std::vector<double>& data() const { return values_; }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  Layout layout_{};
  std::vector<double> values_;
};

/// Membership in the admissible set: every T > 0, everything else >= -tol.
inline bool is_admissible(const StateVector& s, double tol = 0.0) {
  const auto& layout = s.layout();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (layout.strictly_positive(i) ? !(s[i] > 0.0) : !(s[i] >= -tol)) return false;
  }
  return true;
}

/// Normalised health: every T entry 1, all other compartments 0. The
/// multi-strain model's dimensional health (T_j = gamma_j / beta_j) comes from
/// ModelSystem::health().
inline StateVector health_state(Layout layout) {
  StateVector s(layout);
  if (layout.model == ModelKind::custom) return s;
  for (std::size_t j = 0; j < layout.strains; ++j) s.at(Field::T, j) = 1.0;
  return s;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace virodyn
