#pragma once

// Parameter sweeps over the cubic map: Lyapunov exponents, bifurcation
// diagrams and the five-interval partition used for the catapult phase.

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace edyn {

/// Uniform grid of `steps` values over [a_min, a_max], endpoints included.
struct SweepGrid {
  double a_min = 0.001;
  double a_max = 2.0;
  std::size_t steps = 2000;
  double z0 = 0.1;
  std::size_t burn_in = 2000;
  std::size_t keep = 200;
  std::uint64_t seed = 0;

  /// Throws InvalidParam unless 0 < a_min < a_max and steps >= 2.
  void validate() const;
  double a_at(std::size_t i) const noexcept;
};

/// Average of log|f'(z_i)| over i = burn_in .. burn_in + n - 1. Returns
/// -infinity when some |f'(z_i)| < 1e-300 (superattracting orbit). Throws
/// DivergedError if the orbit escapes before the average is complete.
double lyapunov_exponent(double a, double z0, std::size_t n, std::size_t burn_in);

struct BifurcationCell {
  double a = 0.0;
  std::vector<double> attractor;  ///< the `keep` iterates after burn-in
  bool diverged = false;
};

std::vector<BifurcationCell> bifurcation_sweep(const SweepGrid& grid);

enum class LyapunovFlag { Finite, NegInfinity, Diverged };

struct LyapunovCell {
  double a = 0.0;
  double lambda = 0.0;
  LyapunovFlag flag = LyapunovFlag::Finite;
};

/// lyapunov_exponent over the grid, averaging `n` terms per cell
/// (0 means grid.keep).
std::vector<LyapunovCell> lyapunov_sweep(const SweepGrid& grid, std::size_t n = 0);

/// Number of clusters after single-linkage grouping of the sorted values at
/// distance tol.
std::size_t count_distinct(std::vector<double> values, double tol);

/// I1..I5 of [-a, 2] for 2sqrt2-2 < a <= 1, delimited by
/// -a <= r- <= 0 <= 0.25 <= r+ <= 2 with r+- = (2 - a +- sqrt(a^2 + 4a))/2.
struct IntervalPartition {
  double a = 0.0;
  std::array<double, 6> endpoints{};

  /// Closed interval I_k, k in 1..5.
  std::pair<double, double> interval(int k) const;
};

/// Throws InvalidParam outside (2sqrt2-2, 1].
IntervalPartition catapult_partition(double a);

struct PartitionCheck {
  bool i2_maps_into_i3 = false;
  bool i3_maps_into_i2 = false;
  bool two_step_contraction = false;  ///< |f^2(z)| <= |z| + 1e-12 on I2 u I3
};

/// Dense-sampling check of f(I2) in I3, f(I3) in I2 and the two-step
/// contraction, `samples` points per interval. Containment allows 1e-12 slack
/// for the rounding of f at endpoints that map exactly onto 0.
PartitionCheck verify_catapult_partition(const IntervalPartition& part,
                                         std::size_t samples = 10000);

/// Open interval of z > 0 on which g_a(z) < -1, i.e. |f_a(z)| > |z|:
/// ((2 - a - sqrt(a^2 + 4a - 4))/2, (2 - a + sqrt(a^2 + 4a - 4))/2).
/// Empty (first >= second) when a^2 + 4a - 4 <= 0.
std::pair<double, double> catapult_growth_region(double a);

}  // namespace edyn
