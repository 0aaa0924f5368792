#pragma once

// The cubic map f_a(z) = z * g_a(z), g_a(z) = (z + a)(z - 2) + 1, and the
// orbit machinery built on it. Everything here is a pure function of its
// arguments.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace edyn {

/// Orbits are cut off once |z| exceeds this value. Bounded phases never leave
/// [-a, 2] with a <= 2, so the margin is six orders of magnitude.
inline constexpr double kDivergeThreshold = 1e6;

/// Map parameter a > 0.
class MapParam {
 public:
  /// Throws InvalidParam unless a is finite and strictly positive.
  explicit MapParam(double a);

  double value() const noexcept { return a_; }

 private:
  double a_;
};

// Raw evaluators. They accept any real a; callers that need the a > 0
// contract go through MapParam.
double eval_g(double a, double z) noexcept;
/// Factored form z(z+a)(z-2) + z.
double eval_f(double a, double z) noexcept;
/// Expanded form z^3 + (a-2)z^2 + (1-2a)z; kept for cross-checking eval_f.
double eval_f_expanded(double a, double z) noexcept;
double eval_f_prime(double a, double z) noexcept;
double eval_f_second(double a, double z) noexcept;
inline constexpr double kFThird = 6.0;

/// k-fold composition f_a^(k)(z).
double eval_f_iterate(double a, double z, std::size_t k) noexcept;

/// f'''/f' - 1.5 (f''/f')^2. Throws CriticalPointError when |f'(z)| < 1e-12.
double eval_schwarzian(double a, double z);

/// Roots of f_a(z) - z = z(z+a)(z-2), ascending: {-a, 0, 2}.
std::array<double, 3> fixed_points(const MapParam& a);

struct CriticalPoints {
  double local_max;  ///< (1 - 2a)/3
  double local_min;  ///< 1
};
CriticalPoints critical_points(const MapParam& a);

struct ExtremaValues {
  double at_local_max;  ///< (4a^3 + 12a^2 - 15a + 4)/27
  double at_local_min;  ///< -a
};
ExtremaValues local_extrema_values(const MapParam& a);

class Orbit {
 public:
  /// Wraps a recorded trajectory (e.g. read back from CSV). Points after the
  /// first escaping one are dropped and the escape is flagged as in
  /// iterate_orbit. Throws InvalidParam on an empty sequence.
  static Orbit from_points(const MapParam& a, std::vector<double> points);

  const MapParam& param() const noexcept { return param_; }
  double z0() const noexcept { return points_.front(); }
  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double back() const noexcept { return points_.back(); }
  bool terminated_divergent() const noexcept { return divergence_step_.has_value(); }
  /// Index of the first point with |z| > kDivergeThreshold.
  std::optional<std::size_t> divergence_step() const noexcept { return divergence_step_; }

 private:
  friend Orbit iterate_orbit(const MapParam&, double, std::size_t);
  Orbit(MapParam param, std::vector<double> points, std::optional<std::size_t> step)
      : param_(param), points_(std::move(points)), divergence_step_(step) {}

  MapParam param_;
  std::vector<double> points_;
  std::optional<std::size_t> divergence_step_;
};

/// z_0 .. z_T with z_{t+1} = eval_f(a, z_t). Stops at the first point whose
/// magnitude exceeds kDivergeThreshold (or is not finite) and flags it.
Orbit iterate_orbit(const MapParam& a, double z0, std::size_t steps);

/// All z in [lo, hi] with f_a(z) = target, ascending. The interval is split at
/// the critical points and each monotone piece is bisected to machine
/// precision. A root is only reported where f - target changes sign (or
/// vanishes at a piece endpoint), so tangential roots can be missed.
/// Throws NoRootError when nothing is found, InvalidParam when lo >= hi.
std::vector<double> preimages(const MapParam& a, double target, double lo, double hi);

}  // namespace edyn
