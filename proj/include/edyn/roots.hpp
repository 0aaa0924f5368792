#pragma once

#include <cmath>
#include <cstddef>

namespace edyn {

/// Bisection on [lo, hi] for a continuous fn with fn(lo), fn(hi) of opposite
/// sign (or one of them zero). Runs until the bracket is narrower than
/// width_tol or cannot be split further in double precision. Returns whichever
/// bracket end has the smaller |fn|.
template <class Fn>
double bisect(Fn&& fn, double lo, double hi, double width_tol = 0.0) {
  double flo = fn(lo);
  double fhi = fn(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  for (int iter = 0; iter < 2000; ++iter) {
    if (hi - lo <= width_tol) break;
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double fmid = fn(mid);
    if (fmid == 0.0) return mid;
    if (std::signbit(fmid) == std::signbit(flo)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
      fhi = fmid;
    }
  }
  return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

/// True when a and b bracket a root (opposite signs or either is zero).
inline bool brackets(double a, double b) noexcept {
  return a == 0.0 || b == 0.0 || (std::signbit(a) != std::signbit(b));
}

}  // namespace edyn
