#pragma once

// Phase classification for the cubic map: analytic (by parameter), empirical
// (from an orbit or a loss curve), periodic-orbit solving and constructive
// period-3 (Li-Yorke) witnesses.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "edyn/cubic_map.hpp"

namespace edyn {

enum class Phase { Monotonic, Catapult, Periodic, Chaotic, Divergent };

std::string_view to_string(Phase p) noexcept;
/// Inverse of to_string; throws InvalidParam on unknown names.
Phase phase_from_string(std::string_view name);

/// 2*sqrt(2) - 2: largest a for which |z_t| is non-increasing on [-a, 2].
inline const double kMonotonicBound = 2.0 * std::sqrt(2.0) - 2.0;

struct PeriodicOrbit {
  std::size_t period = 0;
  std::vector<double> points;
  double multiplier = 0.0;  ///< product of f' over the cycle
};

/// Points x0, f(x0), f^2(x0), f^3(x0) with f^3(x0) <= x0 < f(x0) < f^2(x0).
struct ChaosWitness {
  double x0 = 0.0;
  std::array<double, 4> iterates{};
};

struct DivergenceEvidence {
  std::size_t step = 0;
};

using PhaseEvidence = std::variant<std::monostate, PeriodicOrbit, ChaosWitness, DivergenceEvidence>;

/// Tolerances for the empirical classifiers. |z| <= 2 in every bounded phase,
/// so absolute tolerances are used throughout.
struct ClassifierConfig {
  double eps_conv = 1e-10;
  double cycle_tol = 1e-8;
  std::size_t max_period = 64;
  std::size_t min_length = 1000;
  double burn_in_fraction = 0.5;
};

struct PhaseReport {
  Phase phase = Phase::Monotonic;
  PhaseEvidence evidence;
  ClassifierConfig config;
  double a_star_estimate = 0.0;
};

/// Phase partition of (0, inf) by parameter:
/// (0, 2sqrt2-2] Monotonic, (.., 1] Catapult, (1, a*) Periodic, [a*, 2] Chaotic,
/// (2, inf) Divergent. Throws InvalidParam if a <= 0 or a_star not in (1, 2).
Phase classify_by_parameter(double a, double a_star_estimate);

/// classify_by_parameter plus the supporting evidence: the attracting cycle
/// when one is found, a period-3 witness in the chaotic band, or the
/// divergence step of the critical orbit.
PhaseReport analyze_parameter(double a, double a_star_estimate, const ClassifierConfig& cfg = {});

/// Empirical classification of one orbit. Throws InconclusiveError when the
/// orbit is bounded but shorter than cfg.min_length.
PhaseReport classify_trajectory(const Orbit& orbit, const ClassifierConfig& cfg = {},
                                double a_star_estimate = 0.0);

/// Smallest period p <= max_period whose last 3p points repeat within tol.
/// Cycle points are the averages of the matched pairs, in time order.
std::optional<PeriodicOrbit> detect_cycle(const Orbit& orbit, double tol, std::size_t max_period);

/// Same search on a plain sequence; the multiplier is left at zero.
std::optional<PeriodicOrbit> detect_cycle(std::span<const double> seq, double tol,
                                          std::size_t max_period);

/// Period-2 orbits from the degree-6 factorisation of f^2(z) - z over z(z+a)(z-2):
/// the quadratic z^2 + (a-1)z + 1-a and the quartic
/// z^4 + (a-3)z^3 + (3-3a)z^2 + (2a-2)z + 2. Each orbit lists its larger point first.
std::vector<PeriodicOrbit> find_period2_points(double a);

double period2_quadratic(double a, double z) noexcept;
double period2_quartic(double a, double z) noexcept;

/// Attracting cycle captured by the orbit of the critical point (1-2a)/3.
/// Requires 0 < a <= 2 (InvalidParam otherwise).
std::optional<PeriodicOrbit> find_attracting_orbit(double a, std::size_t max_period = 64,
                                                   std::size_t steps = 20000,
                                                   double tol = 1e-8);

/// Constructive witness for 1 < a <= 2: y0 in ((1-2a)/3, 0) with f(y0) = 1,
/// x0 in (-a, (1-2a)/3) with f(x0) = y0. Empty when f((1-2a)/3) < 1.
/// Throws ConstructionFailed if the four-point inequality does not verify.
std::optional<ChaosWitness> li_yorke_witness(double a);

/// 4c^3 + 12c^2 - 15c - 23, i.e. 27 (f_c((1-2c)/3) - 1).
double chaos_onset_polynomial(double c) noexcept;

/// Root of chaos_onset_polynomial in (1, 2), bisected to 1e-10. Every a in
/// [c, 2] admits a witness, so c is an upper bound for a*.
double estimate_chaos_onset();

/// Smallest a in (lo, hi) at which the critical point (1-2a)/3 is a period-3
/// point, located by a sign scan of f^3(c_a) - c_a on `grid` cells plus
/// bisection. A numerical probe of an open conjecture about a*, not a bound.
std::optional<double> period3_critical_scan(double lo = 1.0 + 1e-9, double hi = 2.0,
                                            std::size_t grid = 20000);

double orbit_multiplier(double a, std::span<const double> cycle_points) noexcept;

/// Tolerances for classifying a training-loss curve. The loss of a run with
/// noisy labels settles on a positive floor rather than zero, so convergence
/// is judged by the decay of step-to-step activity instead of an absolute
/// threshold.
struct LossCurveConfig {
  double monotone_rel_tol = 1e-12;  ///< an increase must exceed L_t * tol to count
  double floor_rel = 1e-20;         ///< losses below floor_rel * max(L) count as zero
  std::size_t window = 200;         ///< tail window for activity and cycle checks
  double settle_ratio = 0.25;       ///< tail activity / early activity below this = settling
  double settle_abs = 1e-13;        ///< tail activity (relative to loss) below this = settled
  double cycle_rel_tol = 1e-3;      ///< cycle tolerance as a fraction of the tail range
  std::size_t max_period = 64;
};

struct LossCurveReport {
  Phase phase = Phase::Monotonic;
  std::size_t increases = 0;        ///< steps with L_{t+1} > L_t
  double activity_ratio = 0.0;      ///< tail activity over early activity
  std::optional<std::size_t> period;
};

/// Monotonic: never increases. Catapult: increases but settles (or reaches
/// the zero floor). Periodic: the
/// tail repeats with a period <= max_period. Chaotic: bounded otherwise.
/// Divergent when `diverged` is set. Needs at least 3 windows of data.
LossCurveReport classify_loss_curve(std::span<const double> loss, bool diverged,
                                    const LossCurveConfig& cfg = {});

}  // namespace edyn
