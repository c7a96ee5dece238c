#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "virodyn/errors.hpp"

namespace virodyn {

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

/// Bisection on a sign change of f over [lo, hi] down to a relative width of
/// `rel_width`, followed by a few guarded Newton steps (secant slope).
template <class F>
double solve_bracketed(F&& f, double lo, double hi, double rel_width = 1e-13) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw NumericalFailure("no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= rel_width * std::max(std::abs(lo), std::abs(hi)) || mid == lo || mid == hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  double x = std::abs(flo) < std::abs(fhi) ? lo : hi;
  double fx = f(x);
  for (int it = 0; it < 4 && fx != 0.0; ++it) {
    const double h = std::max(std::abs(x), 1e-300) * 1e-7;
    const double slope = (f(x + h) - f(x - h)) / (2.0 * h);
    if (slope == 0.0 || !std::isfinite(slope)) break;
    const double candidate = x - fx / slope;
    if (!(candidate >= lo && candidate <= hi)) break;
    const double fc = f(candidate);
    if (!(std::abs(fc) < std::abs(fx))) break;
    x = candidate;
    fx = fc;
  }
  return x;
}

struct Minimum {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section minimisation of a unimodal f on [lo, hi].
template <class F>
Minimum golden_section_min(F&& f, double lo, double hi, double abs_tol = 1e-15,
                           int max_iter = 300) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (hi - lo) > abs_tol; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return fc < fd ? Minimum{c, fc} : Minimum{d, fd};
}

/// Error-free product: a * b == p + e exactly (barring over/underflow).
inline std::pair<double, double> two_product(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

/// A value together with an interval that encloses its rounding uncertainty.
struct CompensatedValue {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  double half_width() const { return 0.5 * (hi - lo); }
  bool certainly_negative() const { return hi < 0.0; }
  bool certainly_positive() const { return lo > 0.0; }
};

/// b^2 - 4ac with both products formed error-free.
inline double discriminant_compensated(double a, double b, double c) {
  const auto [bb, bb_err] = two_product(b, b);
  const auto [ac, ac_err] = two_product(4.0 * a, c);
  return (bb - ac) + (bb_err - ac_err);
}

}  // namespace virodyn
