#include "edyn/cubic_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edyn/errors.hpp"
#include "edyn/roots.hpp"

namespace edyn {

MapParam::MapParam(double a) : a_(a) {
  if (!std::isfinite(a) || a <= 0.0) {
    throw InvalidParam("map parameter a must be finite and > 0, got " + num(a));
  }
}

double eval_g(double a, double z) noexcept { return (z + a) * (z - 2.0) + 1.0; }

double eval_f(double a, double z) noexcept { return z * (z + a) * (z - 2.0) + z; }

double eval_f_expanded(double a, double z) noexcept {
  return ((z + (a - 2.0)) * z + (1.0 - 2.0 * a)) * z;
}

double eval_f_prime(double a, double z) noexcept { return (z - 1.0) * (3.0 * z + 2.0 * a - 1.0); }

double eval_f_second(double a, double z) noexcept { return 6.0 * z + 2.0 * a - 4.0; }

double eval_f_iterate(double a, double z, std::size_t k) noexcept {
  for (std::size_t i = 0; i < k; ++i) z = eval_f(a, z);
  return z;
}

double eval_schwarzian(double a, double z) {
  const double d1 = eval_f_prime(a, z);
  if (std::abs(d1) < 1e-12) {
    throw CriticalPointError("Schwarzian undefined at critical point z=" + num(z));
  }
  const double ratio = eval_f_second(a, z) / d1;
  return kFThird / d1 - 1.5 * ratio * ratio;
}

std::array<double, 3> fixed_points(const MapParam& a) { return {-a.value(), 0.0, 2.0}; }

CriticalPoints critical_points(const MapParam& a) {
  return {(1.0 - 2.0 * a.value()) / 3.0, 1.0};
}

ExtremaValues local_extrema_values(const MapParam& a) {
  const double v = a.value();
  return {(((4.0 * v + 12.0) * v - 15.0) * v + 4.0) / 27.0, -v};
}

Orbit iterate_orbit(const MapParam& a, double z0, std::size_t steps) {
  std::vector<double> pts;
  pts.reserve(steps + 1);
  pts.push_back(z0);
  auto escaped = [](double z) { return !std::isfinite(z) || std::abs(z) > kDivergeThreshold; };
  if (escaped(z0)) return Orbit(a, std::move(pts), std::size_t{0});
  double z = z0;
  for (std::size_t t = 1; t <= steps; ++t) {
    z = eval_f(a.value(), z);
    pts.push_back(z);
    if (escaped(z)) return Orbit(a, std::move(pts), t);
  }
  return Orbit(a, std::move(pts), std::nullopt);
}

Orbit Orbit::from_points(const MapParam& a, std::vector<double> points) {
  if (points.empty()) throw InvalidParam("Orbit::from_points: empty trajectory");
  for (std::size_t t = 0; t < points.size(); ++t) {
    if (!std::isfinite(points[t]) || std::abs(points[t]) > kDivergeThreshold) {
      points.resize(t + 1);
      return Orbit(a, std::move(points), t);
    }
  }
  return Orbit(a, std::move(points), std::nullopt);
}

std::vector<double> preimages(const MapParam& a, double target, double lo, double hi) {
  if (!(lo < hi)) throw InvalidParam("preimages: require lo < hi");
  const double av = a.value();
  const auto crit = critical_points(a);

  std::vector<double> cuts{lo};
  for (double c : {crit.local_max, crit.local_min}) {
    if (c > lo && c < hi) cuts.push_back(c);
  }
  cuts.push_back(hi);

  auto residual = [&](double z) { return eval_f(av, z) - target; };
  std::vector<double> roots;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double l = cuts[k];
    const double r = cuts[k + 1];
    if (!brackets(residual(l), residual(r))) continue;
    roots.push_back(bisect(residual, l, r));
  }
  std::sort(roots.begin(), roots.end());
  // A root sitting on a cut is found by both neighbouring pieces.
  const double merge = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [merge](double x, double y) { return std::abs(x - y) <= merge; }),
              roots.end());
  if (roots.empty()) {
    throw NoRootError("no z in [" + num(lo) + ", " + num(hi) +
                      "] with f_a(z) = " + num(target));
  }
  return roots;
}

}  // namespace edyn
