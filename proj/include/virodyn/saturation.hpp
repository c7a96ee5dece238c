#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "virodyn/errors.hpp"

namespace virodyn {

enum class SaturationKind { minmod, tanh };

/// Infection saturation J: concave on [0, inf), J(0) = 0, J'(0) = 1,
/// J -> 1 at infinity, bounded below on negatives.
struct SaturationFn {
  SaturationKind kind = SaturationKind::tanh;

  friend bool operator==(const SaturationFn&, const SaturationFn&) = default;
};

/// Lower clip of minmod on negative arguments.
inline constexpr double kMinmodFloor = -1.0;

inline double eval_J(SaturationFn fn, double x) {
  if (!std::isfinite(x)) {
    throw DomainError("saturation function evaluated at a non-finite argument");
  }
  switch (fn.kind) {
    case SaturationKind::minmod:
      return x < 0.0 ? std::max(x, kMinmodFloor) : std::min(x, 1.0);
    case SaturationKind::tanh:
      return std::tanh(x);
  }
  return 0.0;
}

struct SaturationSlope {
  double value = 0.0;
  bool one_sided = false;  // minmod exactly at a kink; `value` is the left derivative
};

inline SaturationSlope eval_J_slope(SaturationFn fn, double x) {
  if (!std::isfinite(x)) {
    throw DomainError("saturation slope evaluated at a non-finite argument");
  }
  switch (fn.kind) {
    case SaturationKind::minmod:
      if (x == 1.0) return {1.0, true};
      if (x == kMinmodFloor) return {0.0, true};
      return {(x > kMinmodFloor && x < 1.0) ? 1.0 : 0.0, false};
    case SaturationKind::tanh: {
      const double t = std::tanh(x);
      return {1.0 - t * t, false};
    }
  }
  return {};
}

inline std::string_view to_string(SaturationKind kind) {
  return kind == SaturationKind::minmod ? "minmod" : "tanh";
}

inline SaturationKind parse_saturation_kind(std::string_view name) {
  if (name == "minmod") return SaturationKind::minmod;
  if (name == "tanh") return SaturationKind::tanh;
  throw ValidationError("unknown saturation function '" + std::string(name) +
                        "' (expected minmod or tanh)");
}

}  // namespace virodyn
