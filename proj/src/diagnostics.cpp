#include "edyn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edyn/cubic_map.hpp"
#include "edyn/errors.hpp"
#include "edyn/parallel.hpp"
#include "edyn/phase_analysis.hpp"

namespace edyn {

void SweepGrid::validate() const {
  if (!(std::isfinite(a_min) && std::isfinite(a_max))) throw InvalidParam("grid bounds must be finite");
  if (a_min <= 0.0) throw InvalidParam("grid a_min must be > 0");
  if (!(a_min < a_max)) throw InvalidParam("grid requires a_min < a_max");
  if (steps < 2) throw InvalidParam("grid requires steps >= 2");
  if (!std::isfinite(z0)) throw InvalidParam("grid z0 must be finite");
}

double SweepGrid::a_at(std::size_t i) const noexcept {
  if (i + 1 == steps) return a_max;
  return a_min + (a_max - a_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

double lyapunov_exponent(double a, double z0, std::size_t n, std::size_t burn_in) {
  if (!std::isfinite(a) || a <= 0.0) throw InvalidParam("lyapunov_exponent: a must be > 0");
  if (n == 0) throw InvalidParam("lyapunov_exponent: n must be >= 1");

  auto escaped = [](double z) { return !std::isfinite(z) || std::abs(z) > kDivergeThreshold; };
  double z = z0;
  for (std::size_t i = 0; i < burn_in; ++i) {
    if (escaped(z)) throw DivergedError("orbit diverged during burn-in at step " + std::to_string(i));
    z = eval_f(a, z);
  }
  double sum = 0.0;
  bool neg_inf = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (escaped(z)) {
      throw DivergedError("orbit diverged at step " + std::to_string(burn_in + i));
    }
    const double d = std::abs(eval_f_prime(a, z));
    if (d < 1e-300) {
      neg_inf = true;
    } else {
      sum += std::log(d);
    }
    z = eval_f(a, z);
  }
  if (neg_inf) return -std::numeric_limits<double>::infinity();
  return sum / static_cast<double>(n);
}

std::vector<BifurcationCell> bifurcation_sweep(const SweepGrid& grid) {
  grid.validate();
  std::vector<BifurcationCell> cells(grid.steps);
  parallel_for(grid.steps, [&](std::size_t i) {
    BifurcationCell& cell = cells[i];
    cell.a = grid.a_at(i);
    const Orbit orbit = iterate_orbit(MapParam(cell.a), grid.z0, grid.burn_in + grid.keep);
    if (orbit.terminated_divergent()) {
      cell.diverged = true;
      return;
    }
    const auto pts = orbit.points();
    cell.attractor.assign(pts.end() - static_cast<std::ptrdiff_t>(grid.keep), pts.end());
  });
  return cells;
}

std::vector<LyapunovCell> lyapunov_sweep(const SweepGrid& grid, std::size_t n) {
  grid.validate();
  if (n == 0) n = std::max<std::size_t>(grid.keep, 1);
  std::vector<LyapunovCell> cells(grid.steps);
  parallel_for(grid.steps, [&](std::size_t i) {
    LyapunovCell& cell = cells[i];
    cell.a = grid.a_at(i);
    try {
      cell.lambda = lyapunov_exponent(cell.a, grid.z0, n, grid.burn_in);
      if (std::isinf(cell.lambda)) cell.flag = LyapunovFlag::NegInfinity;
    } catch (const DivergedError&) {
      cell.lambda = std::numeric_limits<double>::quiet_NaN();
      cell.flag = LyapunovFlag::Diverged;
    }
  });
  return cells;
}

std::size_t count_distinct(std::vector<double> values, double tol) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  std::size_t clusters = 1;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] - values[i - 1] > tol) ++clusters;
  }
  return clusters;
}

std::pair<double, double> IntervalPartition::interval(int k) const {
  if (k < 1 || k > 5) throw InvalidParam("interval index must be in 1..5");
  return {endpoints[static_cast<std::size_t>(k - 1)], endpoints[static_cast<std::size_t>(k)]};
}

IntervalPartition catapult_partition(double a) {
  if (!(a > kMonotonicBound && a <= 1.0)) {
    throw InvalidParam("catapult_partition requires 2sqrt2-2 < a <= 1, got " + num(a));
  }
  const double s = std::sqrt(a * a + 4.0 * a);
  IntervalPartition p;
  p.a = a;
  p.endpoints = {-a, 0.5 * (2.0 - a - s), 0.0, 0.25, 0.5 * (2.0 - a + s), 2.0};
  return p;
}

PartitionCheck verify_catapult_partition(const IntervalPartition& part, std::size_t samples) {
  constexpr double kSlack = 1e-12;
  const double a = part.a;
  const auto [i2_lo, i2_hi] = part.interval(2);
  const auto [i3_lo, i3_hi] = part.interval(3);
  auto inside = [](double v, double lo, double hi) { return v >= lo - kSlack && v <= hi + kSlack; };
  auto sample = [samples](double lo, double hi, std::size_t k) {
    if (k + 1 == samples) return hi;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
  };

  PartitionCheck check{true, true, true};
  for (std::size_t k = 0; k < samples; ++k) {
    const double z2 = sample(i2_lo, i2_hi, k);
    const double z3 = sample(i3_lo, i3_hi, k);
    const double f2 = eval_f(a, z2);
    const double f3 = eval_f(a, z3);
    check.i2_maps_into_i3 = check.i2_maps_into_i3 && inside(f2, i3_lo, i3_hi);
    check.i3_maps_into_i2 = check.i3_maps_into_i2 && inside(f3, i2_lo, i2_hi);
    for (double z : {z2, z3}) {
      const double ff = eval_f_iterate(a, z, 2);
      check.two_step_contraction = check.two_step_contraction && std::abs(ff) <= std::abs(z) + kSlack;
    }
  }
  return check;
}

std::pair<double, double> catapult_growth_region(double a) {
  const double disc = a * a + 4.0 * a - 4.0;
  if (disc <= 0.0) return {0.0, 0.0};
  const double s = std::sqrt(disc);
  return {0.5 * (2.0 - a - s), 0.5 * (2.0 - a + s)};
}

}  // namespace edyn
