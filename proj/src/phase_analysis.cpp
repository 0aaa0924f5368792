#include "edyn/phase_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "edyn/errors.hpp"
#include "edyn/roots.hpp"

namespace edyn {

namespace {

constexpr std::array<std::string_view, 5> kPhaseNames{"Monotonic", "Catapult", "Periodic",
                                                      "Chaotic", "Divergent"};

bool in_open_unit_to_two(double x) { return x > 1.0 && x < 2.0; }

}  // namespace

std::string_view to_string(Phase p) noexcept { return kPhaseNames[static_cast<std::size_t>(p)]; }

Phase phase_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  }
  throw InvalidParam("unknown phase name '" + std::string(name) + "'");
}

Phase classify_by_parameter(double a, double a_star_estimate) {
  if (!std::isfinite(a) || a <= 0.0) throw InvalidParam("classify_by_parameter: a must be > 0");
  if (!in_open_unit_to_two(a_star_estimate)) {
    throw InvalidParam("classify_by_parameter: a_star_estimate must lie in (1, 2)");
  }
  if (a <= kMonotonicBound) return Phase::Monotonic;
  if (a <= 1.0) return Phase::Catapult;
  if (a < a_star_estimate) return Phase::Periodic;
  if (a <= 2.0) return Phase::Chaotic;
  return Phase::Divergent;
}

double orbit_multiplier(double a, std::span<const double> cycle_points) noexcept {
  double m = 1.0;
  for (double p : cycle_points) m *= eval_f_prime(a, p);
  return m;
}

std::optional<PeriodicOrbit> detect_cycle(std::span<const double> seq, double tol,
                                          std::size_t max_period) {
  const std::size_t len = seq.size();
  if (len == 0 || max_period == 0) return std::nullopt;
  const std::size_t last = len - 1;
  for (std::size_t p = 1; p <= max_period; ++p) {
    if (3 * p > len) break;
    bool match = true;
    for (std::size_t i = 0; i < 2 * p && match; ++i) {
      const double x = seq[last - i];
      const double y = seq[last - i - p];
      match = std::isfinite(x) && std::abs(x - y) <= tol;
    }
    if (!match) continue;
    PeriodicOrbit cyc;
    cyc.period = p;
    cyc.points.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
      const std::size_t idx = last + 1 - p + k;
      cyc.points[k] = 0.5 * (seq[idx] + seq[idx - p]);
    }
    return cyc;
  }
  return std::nullopt;
}

std::optional<PeriodicOrbit> detect_cycle(const Orbit& orbit, double tol, std::size_t max_period) {
  if (orbit.terminated_divergent()) return std::nullopt;
  const auto pts = orbit.points();
  const std::size_t window = std::min(pts.size(), 4 * max_period);
  auto cyc = detect_cycle(pts.subspan(pts.size() - window), tol, max_period);
  if (cyc) cyc->multiplier = orbit_multiplier(orbit.param().value(), cyc->points);
  return cyc;
}

PhaseReport classify_trajectory(const Orbit& orbit, const ClassifierConfig& cfg,
                                double a_star_estimate) {
  PhaseReport report;
  report.config = cfg;
  report.a_star_estimate = a_star_estimate;

  if (orbit.terminated_divergent()) {
    report.phase = Phase::Divergent;
    report.evidence = DivergenceEvidence{*orbit.divergence_step()};
    return report;
  }
  if (orbit.size() < cfg.min_length) {
    throw InconclusiveError("orbit has " + std::to_string(orbit.size()) +
                            " points; the classifier needs at least " +
                            std::to_string(cfg.min_length));
  }

  const auto pts = orbit.points();
  if (std::abs(pts.back()) < cfg.eps_conv) {
    bool non_increasing = true;
    for (std::size_t t = 0; t + 1 < pts.size() && non_increasing; ++t) {
      non_increasing = std::abs(pts[t + 1]) <= std::abs(pts[t]) * (1.0 + 1e-12);
    }
    report.phase = non_increasing ? Phase::Monotonic : Phase::Catapult;
    const double a = orbit.param().value();
    report.evidence = PeriodicOrbit{1, {0.0}, eval_f_prime(a, 0.0)};
    return report;
  }

  const std::size_t burn = static_cast<std::size_t>(cfg.burn_in_fraction * static_cast<double>(pts.size()));
  const auto tail = pts.subspan(std::min(burn, pts.size() - 1));
  const std::size_t window = std::min(tail.size(), 4 * cfg.max_period);
  if (auto cyc = detect_cycle(tail.subspan(tail.size() - window), cfg.cycle_tol, cfg.max_period)) {
    cyc->multiplier = orbit_multiplier(orbit.param().value(), cyc->points);
    report.phase = Phase::Periodic;
    report.evidence = std::move(*cyc);
    return report;
  }

  report.phase = Phase::Chaotic;
  const double a = orbit.param().value();
  if (a > 1.0 && a <= 2.0) {
    if (auto w = li_yorke_witness(a)) report.evidence = *w;
  }
  return report;
}

double period2_quadratic(double a, double z) noexcept { return z * z + (a - 1.0) * z + (1.0 - a); }

double period2_quartic(double a, double z) noexcept {
  return (((z + (a - 3.0)) * z + (3.0 - 3.0 * a)) * z + (2.0 * a - 2.0)) * z + 2.0;
}

std::vector<PeriodicOrbit> find_period2_points(double a) {
  if (!std::isfinite(a) || a <= 0.0) throw InvalidParam("find_period2_points: a must be > 0");

  std::vector<double> candidates;
  const double disc = (a - 1.0) * (a + 3.0);
  if (disc > 0.0) {
    const double s = std::sqrt(disc);
    candidates.push_back(0.5 * (1.0 - a + s));
    candidates.push_back(0.5 * (1.0 - a - s));
  }

  // Quartic: sign-change scan over [-a, 2] then bisection.
  constexpr std::size_t kGrid = 10000;
  const double lo = -a;
  const double hi = 2.0;
  const double h = (hi - lo) / static_cast<double>(kGrid);
  auto quartic = [a](double z) { return period2_quartic(a, z); };
  double prev_z = lo;
  double prev_v = quartic(lo);
  for (std::size_t k = 1; k <= kGrid; ++k) {
    const double z = (k == kGrid) ? hi : lo + h * static_cast<double>(k);
    const double v = quartic(z);
    if (prev_v != 0.0 && brackets(prev_v, v)) candidates.push_back(bisect(quartic, prev_z, z));
    prev_z = z;
    prev_v = v;
  }

  constexpr double kTol = 1e-9;
  std::vector<double> verified;
  for (double z : candidates) {
    const double fz = eval_f(a, z);
    if (std::abs(eval_f(a, fz) - z) <= kTol && std::abs(fz - z) > kTol) verified.push_back(z);
  }

  std::vector<PeriodicOrbit> orbits;
  std::vector<bool> used(verified.size(), false);
  for (std::size_t i = 0; i < verified.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const double p = verified[i];
    const double q = eval_f(a, p);
    for (std::size_t j = i + 1; j < verified.size(); ++j) {
      if (!used[j] && std::abs(verified[j] - q) <= 1e-7) used[j] = true;
    }
    PeriodicOrbit orb;
    orb.period = 2;
    orb.points = {std::max(p, q), std::min(p, q)};
    orb.multiplier = orbit_multiplier(a, orb.points);
    orbits.push_back(std::move(orb));
  }
  return orbits;
}

std::optional<PeriodicOrbit> find_attracting_orbit(double a, std::size_t max_period,
                                                   std::size_t steps, double tol) {
  if (!std::isfinite(a) || a <= 0.0 || a > 2.0) {
    throw InvalidParam("find_attracting_orbit: requires 0 < a <= 2");
  }
  const MapParam param(a);
  const Orbit orbit = iterate_orbit(param, critical_points(param).local_max, steps);
  auto cyc = detect_cycle(orbit, tol, max_period);
  if (!cyc || std::abs(cyc->multiplier) >= 1.0) return std::nullopt;
  return cyc;
}

std::optional<ChaosWitness> li_yorke_witness(double a) {
  if (!std::isfinite(a) || a <= 1.0 || a > 2.0) {
    throw InvalidParam("li_yorke_witness: requires 1 < a <= 2");
  }
  const MapParam param(a);
  const double crit = critical_points(param).local_max;
  if (local_extrema_values(param).at_local_max < 1.0) return std::nullopt;

  const double y0 = preimages(param, 1.0, crit, 0.0).front();
  const double x0 = preimages(param, y0, -a, crit).front();

  ChaosWitness w;
  w.x0 = x0;
  w.iterates[0] = x0;
  for (std::size_t k = 1; k < 4; ++k) w.iterates[k] = eval_f(a, w.iterates[k - 1]);
  const auto& it = w.iterates;
  if (!(it[3] <= it[0] && it[0] < it[1] && it[1] < it[2])) {
    throw ConstructionFailed("period-3 witness inequality failed at a=" + num(a));
  }
  return w;
}

double chaos_onset_polynomial(double c) noexcept {
  return ((4.0 * c + 12.0) * c - 15.0) * c - 23.0;
}

double estimate_chaos_onset() { return bisect(chaos_onset_polynomial, 1.0, 2.0, 1e-10); }

std::optional<double> period3_critical_scan(double lo, double hi, std::size_t grid) {
  if (!(lo < hi) || grid == 0) throw InvalidParam("period3_critical_scan: bad range");
  auto gap = [](double a) {
    const double c = (1.0 - 2.0 * a) / 3.0;
    return eval_f_iterate(a, c, 3) - c;
  };
  const double h = (hi - lo) / static_cast<double>(grid);
  double prev_a = lo;
  double prev_v = gap(lo);
  for (std::size_t k = 1; k <= grid; ++k) {
    const double a = (k == grid) ? hi : lo + h * static_cast<double>(k);
    const double v = gap(a);
    if (brackets(prev_v, v)) {
      const double root = bisect(gap, prev_a, a);
      const double c = (1.0 - 2.0 * root) / 3.0;
      if (std::abs(eval_f(root, c) - c) > 1e-9) return root;
    }
    prev_a = a;
    prev_v = v;
  }
  return std::nullopt;
}

PhaseReport analyze_parameter(double a, double a_star_estimate, const ClassifierConfig& cfg) {
  PhaseReport report;
  report.config = cfg;
  report.a_star_estimate = a_star_estimate;
  report.phase = classify_by_parameter(a, a_star_estimate);

  switch (report.phase) {
    case Phase::Monotonic:
    case Phase::Catapult:
      report.evidence = PeriodicOrbit{1, {0.0}, eval_f_prime(a, 0.0)};
      break;
    case Phase::Periodic: {
      if (auto cyc = find_attracting_orbit(a, cfg.max_period)) {
        report.evidence = std::move(*cyc);
      } else {
        for (auto& orb : find_period2_points(a)) {
          if (orb.points.front() > 0.0 && orb.points.front() < 1.0) {
            report.evidence = std::move(orb);
            break;
          }
        }
      }
      break;
    }
    case Phase::Chaotic:
      if (auto w = li_yorke_witness(a)) {
        report.evidence = *w;
      } else if (auto cyc = find_attracting_orbit(a, cfg.max_period)) {
        report.evidence = std::move(*cyc);
      }
      break;
    case Phase::Divergent: {
      const MapParam param(a);
      const Orbit orbit = iterate_orbit(param, critical_points(param).local_max, 100000);
      if (orbit.divergence_step()) report.evidence = DivergenceEvidence{*orbit.divergence_step()};
      break;
    }
  }
  return report;
}

LossCurveReport classify_loss_curve(std::span<const double> loss, bool diverged,
                                    const LossCurveConfig& cfg) {
  LossCurveReport rep;
  double peak = 0.0;
  for (double l : loss) peak = std::max(peak, std::abs(l));
  const double floor = cfg.floor_rel * peak;
  for (std::size_t t = 0; t + 1 < loss.size(); ++t) {
    if (loss[t + 1] > loss[t] * (1.0 + cfg.monotone_rel_tol) + floor) ++rep.increases;
  }
  if (diverged) {
    rep.phase = Phase::Divergent;
    return rep;
  }
  const std::size_t w = cfg.window;
  if (w < 2 || loss.size() < 3 * w) {
    throw InconclusiveError("loss curve has " + std::to_string(loss.size()) +
                            " points; need at least " + std::to_string(3 * w));
  }
  if (rep.increases == 0) {
    rep.phase = Phase::Monotonic;
    return rep;
  }

  auto activity = [&](std::size_t begin) {
    double s = 0.0;
    for (std::size_t t = begin; t + 1 < begin + w; ++t) s += std::abs(loss[t + 1] - loss[t]);
    return s / static_cast<double>(w - 1);
  };
  const std::size_t n = loss.size();
  const double tail_act = activity(n - w);
  const double early_act = activity(n / 3 - w / 2);
  const auto tail = loss.subspan(n - w);
  const auto [mn, mx] = std::minmax_element(tail.begin(), tail.end());
  const double scale = std::max(std::abs(*mx), 1e-300);
  rep.activity_ratio = early_act > 0.0 ? tail_act / early_act : 0.0;

  if (*mx <= floor || tail_act <= cfg.settle_abs * scale || rep.activity_ratio <= cfg.settle_ratio) {
    rep.phase = Phase::Catapult;
    return rep;
  }
  const double tol = cfg.cycle_rel_tol * (*mx - *mn);
  if (auto cyc = detect_cycle(tail, tol, cfg.max_period)) {
    rep.phase = Phase::Periodic;
    rep.period = cyc->period;
    return rep;
  }
  rep.phase = Phase::Chaotic;
  return rep;
}

}  // namespace edyn
