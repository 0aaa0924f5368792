// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "edyn/cli.hpp"
#include "edyn/csv.hpp"
#include "edyn/cubic_map.hpp"
#include "edyn/data_gen.hpp"
#include "edyn/diagnostics.hpp"
#include "edyn/phase_analysis.hpp"
#include "edyn/predictor.hpp"
#include "edyn/quad_models.hpp"
#include "edyn/rng.hpp"
#include "oracles.hpp"

#ifndef EDYN_SOURCE_DIR
#error "EDYN_SOURCE_DIR must point at the source tree"
#endif
#ifndef EDYN_WORK_DIR
#error "EDYN_WORK_DIR must point at a scratch directory"
#endif

using namespace edyn;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "" : "[x] ") + what);
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- 1 ---------------------------------------------------------------------

Outcome phase_boundaries() {
  Outcome o;
  constexpr int kOrbits = 500;
  Rng rng(1);
  auto draws = [&](double a) {
    std::vector<double> z0(kOrbits);
    for (double& z : z0) {
      do z = rng.uniform(-a, 2.0);
      while (z == -a);
    }
    return z0;
  };

  {
    int ok = 0;
    for (double z0 : draws(0.5)) {
      const Orbit orb = iterate_orbit(MapParam(0.5), z0, 10000);
      const auto p = orb.points();
      bool mono = !orb.terminated_divergent();
      for (std::size_t t = 0; mono && t + 1 < p.size(); ++t) mono = std::abs(p[t + 1]) <= std::abs(p[t]) * (1.0 + 1e-12);
      ok += mono && std::abs(p.back()) < 1e-10;
    }
    o.require(ok == kOrbits, "a=0.5 monotone to 0: " + std::to_string(ok) + "/500");
  }
  {
    int ok = 0;
    for (double z0 : draws(0.9)) {
      const Orbit orb = iterate_orbit(MapParam(0.9), z0, 10000);
      const auto p = orb.points();
      bool grew = false;
      for (std::size_t t = 0; !grew && t + 1 < p.size(); ++t) grew = std::abs(p[t + 1]) > std::abs(p[t]);
      ok += grew && !orb.terminated_divergent() && std::abs(p.back()) < 1e-10;
    }
    o.require(ok >= 495, "a=0.9 converge with a catapult step: " + std::to_string(ok) + "/500 (need 495)");
  }
  {
    const auto cyc = oracle::quadratic_period2(1.2);
    int ok = 0;
    for (double z0 : draws(1.2)) {
      const Orbit orb = iterate_orbit(MapParam(1.2), z0, 10000);
      const auto p = orb.points();
      bool close = !orb.terminated_divergent();
      for (std::size_t t = p.size() - 100; close && t < p.size(); ++t) {
        close = std::min(std::abs(p[t] - cyc[0]), std::abs(p[t] - cyc[1])) < 1e-6;
      }
      close = close && std::abs(p[p.size() - 1] - p[p.size() - 2]) > 0.5;
      ok += close;
    }
    o.require(ok == kOrbits, "a=1.2 tail on the 2-cycle: " + std::to_string(ok) + "/500");
  }
  {
    const auto w = li_yorke_witness(1.6);
    bool valid = false;
    if (w) {
      const auto& it = w->iterates;
      valid = it[3] <= it[0] && it[0] < it[1] && it[1] < it[2] && it[1] == eval_f(1.6, it[0]) &&
              it[2] == eval_f(1.6, it[1]) && it[3] == eval_f(1.6, it[2]);
    }
    o.require(valid, "a=1.6 witness valid");
    int ok = 0;
    for (double z0 : draws(1.6)) {
      const Orbit orb = iterate_orbit(MapParam(1.6), z0, 10000);
      bool inside = !orb.terminated_divergent();
      for (double z : orb.points()) inside = inside && z > -1.6 && z < 2.0;
      ok += inside;
    }
    o.require(ok >= 495, "a=1.6 bounded in (-a, 2): " + std::to_string(ok) + "/500");
  }
  {
    int ok = 0;
    for (double z0 : draws(2.1)) ok += iterate_orbit(MapParam(2.1), z0, 1000).terminated_divergent();
    o.require(ok >= 495, "a=2.1 escape 1e6 within 1e3 steps: " + std::to_string(ok) + "/500");
  }
  return o;
}

// --- 2 ---------------------------------------------------------------------

struct ZCheck {
  double composed = 0.0;  ///< max |z(t) - f^t(z(0))| / max(1, |f^t(z(0))|)
  double one_step = 0.0;  ///< max |z(t+1) - f(z(t))| / max(1, |f(z(t))|)
};

ZCheck compare_with_map(const TrainTrace& tr, Eigen::Index i) {
  ZCheck c;
  const double a = tr.a(i);
  const double z0 = tr.z.front()(i);
  for (std::size_t t = 0; t < tr.z.size(); ++t) {
    const double want = eval_f_iterate(a, z0, t);
    c.composed = std::max(c.composed, std::abs(tr.z[t](i) - want) / std::max(1.0, std::abs(want)));
    if (t + 1 < tr.z.size()) {
      const double step = eval_f(a, tr.z[t](i));
      c.one_step = std::max(c.one_step, std::abs(tr.z[t + 1](i) - step) / std::max(1.0, std::abs(step)));
    }
  }
  return c;
}

Outcome map_equivalence() {
  Outcome o;
  const std::vector<double> as = {0.5, 0.9, 1.2, 1.8};
  Rng rng(2);
  std::map<double, ZCheck> pr, qn;

  // single-point phase retrieval, gamma = 2, c = 0
  for (double a : as) {
    const Eigen::Index d = 5;
    VectorXd x(d);
    for (Eigen::Index k = 0; k < d; ++k) x(k) = rng.normal();
    const double eta = rng.uniform(0.2, 2.0);
    const double kappa = eta * 2.0 * x.squaredNorm();
    const double y = a / kappa;
    const double z0 = rng.uniform(-0.9 * a, 1.9);
    const double g0 = y + z0 / kappa;
    VectorXd r(d);
    for (Eigen::Index k = 0; k < d; ++k) r(k) = rng.normal();
    r -= x * (x.dot(r) / x.squaredNorm());
    const VectorXd w0 = x * (std::sqrt(g0) / x.squaredNorm()) + 0.3 * r;
    const auto spec = PhaseRetrievalSpec::with_scalar_c(2.0, 0.0, x.transpose(), VectorXd::Constant(1, y));
    const auto tr = train_pr(spec, eta, 200, w0);
    pr[a] = compare_with_map(tr, 0);
  }

  // network, d = 20, m = 5, n = 8 on orthonormal rows; two samples per a
  {
    const Eigen::Index d = 20, m = 5, n = 8;
    const MatrixXd X = random_orthonormal_rows(n, d, 3);
    const double scale = std::sqrt(static_cast<double>(m)) * static_cast<double>(d);
    const double eta = rng.uniform(0.5, 2.0) * scale * static_cast<double>(n);
    const double kappa = 2.0 * eta / (scale * static_cast<double>(n));
    VectorXd y(n);
    MatrixXd V(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = as[static_cast<std::size_t>(i / 2)];
      y(i) = a / kappa;
      const double z0 = rng.uniform(-0.9 * a, 1.9);
      VectorXd dir(m);
      for (Eigen::Index k = 0; k < m; ++k) dir(k) = rng.normal();
      V.row(i) = (dir.normalized() * std::sqrt((y(i) + z0 / kappa) * scale)).transpose();
    }
    MatrixXd R(d, m);
    for (Eigen::Index k = 0; k < R.size(); ++k) R(k) = rng.normal();
    R -= X.transpose() * (X * R);  // component outside the data span
    const MatrixXd U0 = X.transpose() * V + 0.5 * R;
    const auto tr = train_qn(QuadNetSpec{X, y, m}, eta, 200, U0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = as[static_cast<std::size_t>(i / 2)];
      const auto c = compare_with_map(tr, i);
      auto& slot = qn[a];
      slot.composed = std::max(slot.composed, c.composed);
      slot.one_step = std::max(slot.one_step, c.one_step);
    }
  }

  for (double a : as) {
    o.require(pr[a].composed <= 1e-8, "pr a=" + fmt("%g", a) + " composed err " + fmt("%.2e", pr[a].composed) +
                                          " (one-step " + fmt("%.1e", pr[a].one_step) + ")");
    o.require(qn[a].composed <= 1e-8, "qn a=" + fmt("%g", a) + " composed err " + fmt("%.2e", qn[a].composed) +
                                          " (one-step " + fmt("%.1e", qn[a].one_step) + ")");
  }
  return o;
}

// --- 3 ---------------------------------------------------------------------

Outcome sharpness_crosscheck() {
  Outcome o;
  DatasetConfig cfg;
  cfg.d = 20;
  cfg.n = 8;
  cfg.m = 5;
  cfg.noise_var = 0.25;
  cfg.seed = 3;
  const Dataset ds = make_dataset(cfg);
  const QuadNetSpec spec{ds.X, ds.y, 5};
  const double eta = eta_for_target_amax(spec, 1.5);
  const MatrixXd U0 = init_qn_weights(20, 5, 4);
  Rng rng(5);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto steps = static_cast<std::size_t>(rng.uniform(0.0, 300.0));
    const auto tr = train_qn(spec, eta, steps, U0);
    const MatrixXd& U = tr.final_U;
    const auto mc = derive_map_params_qn(spec, eta, U);
    const double formula = sharpness_formula(mc.z, mc.a, eta);
    const VectorXd theta = Eigen::Map<const VectorXd>(U.data(), U.size());
    const double oracle = hessian_sharpness_oracle(qn_gradient_fn(spec), theta);
    worst = std::max(worst, std::abs(formula - oracle) / std::abs(oracle));
  }
  o.require(worst <= 1e-4, "max relative gap over 10 checkpoints " + fmt("%.2e", worst));
  return o;
}

// --- 4 ---------------------------------------------------------------------

Outcome limiting_sharpness() {
  Outcome o;
  const Eigen::Index d = 20, m = 5, n = 8;
  const MatrixXd X = random_orthonormal_rows(n, d, 6);
  const VectorXd y = VectorXd::Ones(n);
  const QuadNetSpec spec{X, y, m};
  const double eta = eta_for_target_amax(spec, 0.9);
  const double scale = std::sqrt(static_cast<double>(m)) * static_cast<double>(d);
  // start every sample at z = 0.5, inside the catapult growth region
  Rng rng(7);
  MatrixXd V(n, m);
  const double kappa = 0.9;
  for (Eigen::Index i = 0; i < n; ++i) {
    VectorXd dir(m);
    for (Eigen::Index k = 0; k < m; ++k) dir(k) = rng.normal();
    V.row(i) = (dir.normalized() * std::sqrt((1.0 + 0.5 / kappa) * scale)).transpose();
  }
  const auto tr = train_qn(spec, eta, 3000, X.transpose() * V);
  const double amax = tr.a.maxCoeff();
  o.require(std::abs(amax - 0.9) < 1e-12, "all a_i = " + fmt("%.15g", amax));
  std::size_t first = tr.loss.size();
  for (std::size_t t = 0; t < tr.loss.size(); ++t) {
    if (tr.loss[t] < 1e-12) {
      first = t;
      break;
    }
  }
  o.require(first < tr.loss.size(), "loss < 1e-12 reached at step " + std::to_string(first));
  double worst = 0.0;
  for (std::size_t t = first; t < tr.sharpness.size(); ++t) {
    worst = std::max(worst, std::abs(tr.sharpness[t] - 2.0 * amax / eta));
  }
  o.require(first < tr.loss.size() && worst <= 1e-6, "max |sharpness - 2a/eta| afterwards " + fmt("%.2e", worst));
  bool catapult = false;
  for (std::size_t t = 0; t + 1 < tr.loss.size(); ++t) catapult = catapult || tr.loss[t + 1] > tr.loss[t];
  o.notes.push_back(std::string("loss curve ") + (catapult ? "had" : "had no") + " catapult step");
  return o;
}

// --- 5 ---------------------------------------------------------------------

Outcome loss_identity() {
  Outcome o;
  DatasetConfig cfg;
  cfg.noise_var = 0.25;
  const Dataset ds = make_dataset(cfg);
  const QuadNetSpec spec{ds.X, ds.y, 25};
  const double eta = eta_for_target_amax(spec, 1.6);
  const auto tr = train_qn(spec, eta, 2000, init_qn_weights(100, 25, derive_seed(0, 5)));
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.z.size(); ++k) {
    const double direct = tr.loss[tr.z_steps[k]];
    worst = std::max(worst, std::abs(direct - loss_from_z(tr.z[k], tr.kappa)) / direct);
  }
  o.require(!tr.diverged && tr.z.size() == 2001, "steps recorded " + std::to_string(tr.z.size()));
  o.require(worst <= 1e-10, "max relative gap " + fmt("%.2e", worst));
  return o;
}

// --- 6 ---------------------------------------------------------------------

Outcome period2_presence() {
  Outcome o;
  Rng rng(6);
  int empty_low = 0, found_high = 0;
  for (int k = 0; k < 100; ++k) {
    double a = 0.0;
    while (a == 0.0) a = 1.0 - rng.uniform();  // (0, 1]
    empty_low += find_period2_points(a).empty();
  }
  for (int k = 0; k < 100; ++k) {
    const double a = 2.0 - rng.uniform();  // (1, 2]
    bool hit = false;
    for (const auto& orb : find_period2_points(a)) {
      for (double p : orb.points) hit = hit || (p > 0.0 && p < 1.0);
    }
    found_high += hit;
  }
  o.require(empty_low == 100, "a in (0,1] empty: " + std::to_string(empty_low) + "/100");
  o.require(found_high == 100, "a in (1,2] point in (0,1): " + std::to_string(found_high) + "/100");
  return o;
}

// --- 7 ---------------------------------------------------------------------

Outcome chaos_onset() {
  Outcome o;
  const double c = estimate_chaos_onset();
  const double res = std::abs(4 * c * c * c + 12 * c * c - 15 * c - 23);
  o.require(c > 1.5979 && c < 1.5983, "c = " + fmt("%.12f", c));
  o.require(res < 1e-8, "residual " + fmt("%.1e", res));
  o.require(std::abs(c - oracle::chaos_onset_newton()) < 1e-9, "matches Newton reference");
  return o;
}

// --- 8 ---------------------------------------------------------------------

Outcome lyapunov_signs() {
  Outcome o;
  const double l03 = lyapunov_exponent(0.3, 0.1, 100000, 0);
  const double l12 = lyapunov_exponent(1.2, 0.1, 100000, 0);
  const double l19 = lyapunov_exponent(1.9, 0.1, 100000, 0);
  const double l19_ref = oracle::lyapunov(1.9, 0.1, 100000, 0);
  o.require(std::abs(l03 - std::log(0.4)) <= 1e-3, "lambda(0.3) = " + fmt("%.6f", l03));
  o.require(std::abs(l12 - 0.5 * std::log(0.68)) <= 1e-3, "lambda(1.2) = " + fmt("%.6f", l12));
  o.require(l19 > 0.0, "lambda(1.9) = " + fmt("%.4f", l19) + " (long double orbit " + fmt("%.4f", l19_ref) + ")");
  return o;
}

// --- 9 ---------------------------------------------------------------------

Outcome catapult_partition_check() {
  Outcome o;
  for (double a : {0.85, 0.9, 1.0}) {
    const auto chk = verify_catapult_partition(catapult_partition(a), 10000);
    o.require(chk.i2_maps_into_i3 && chk.i3_maps_into_i2 && chk.two_step_contraction,
              "a=" + fmt("%g", a) + (chk.i2_maps_into_i3 ? " f(I2)<I3" : " f(I2)!<I3") +
                  (chk.i3_maps_into_i2 ? " f(I3)<I2" : " f(I3)!<I2") +
                  (chk.two_step_contraction ? " contraction" : " no contraction"));
  }
  return o;
}

// --- 10 --------------------------------------------------------------------

Outcome ergodic_averaging() {
  Outcome o;
  DatasetConfig cfg;
  cfg.noise_var = 0.25;
  const Dataset ds = make_dataset(cfg);
  const Dataset test = make_test_set(cfg, ds, 500);
  const QuadNetSpec spec{ds.X, ds.y, 25};
  RecordConfig rec;
  rec.test_X = test.X;
  rec.test_y = test.y;
  rec.stride = 100;
  const auto tr = train_qn(spec, eta_for_target_amax(spec, 1.2), 2000, init_qn_weights(100, 25, derive_seed(0, 5)), rec);
  const auto lp = classify_loss_curve(tr.loss, tr.diverged);
  o.notes.push_back(std::string("run phase ") + std::string(to_string(lp.phase)));
  const double vr = tail_variance(tr.test_loss_raw, 100);
  const double va = tail_variance(tr.test_loss_avg, 100);
  o.require(lp.phase == Phase::Periodic, "training loss is periodic");
  o.require(va <= 0.1 * vr, "tail variance averaged " + fmt("%.3e", va) + " vs raw " + fmt("%.3e", vr));

  VectorXd p(3), q(3);
  p << 0.7, -0.2, 1.3;
  q << -0.4, 0.5, 0.9;
  MatrixXd raw(5000, 3);
  for (Eigen::Index t = 0; t < raw.rows(); ++t) raw.row(t) = (t % 2 ? q : p).transpose();
  const MatrixXd avg = ergodic_average(raw);
  const double spread = (p - q).cwiseAbs().maxCoeff();
  bool within = true;
  for (Eigen::Index t = 0; t < avg.rows(); ++t) {
    within = within && (avg.row(t).transpose() - 0.5 * (p + q)).cwiseAbs().maxCoeff() <=
                           2.0 * spread / static_cast<double>(t + 1);
  }
  o.require(within, "synthetic 2-cycle mean within 2 max|p-q| / t");
  return o;
}

// --- 11 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome figure_grid() {
  Outcome o;
  const fs::path manifest = fs::path(EDYN_SOURCE_DIR) / "figures" / "orthogonal.ini";
  const fs::path out1 = fs::path(EDYN_WORK_DIR) / "grid_a";
  const fs::path out2 = fs::path(EDYN_WORK_DIR) / "grid_b";
  fs::remove_all(out1);
  fs::remove_all(out2);

  std::ostringstream sink, err;
  const int code = cli::run({"sweep", manifest.string(), "--out-dir", out1.string()}, sink, err);
  o.require(code == 0, "full manifest exit code " + std::to_string(code));

  const std::vector<std::pair<std::string, Phase>> expected = {
      {"m25_noise0p25_amax0p3", Phase::Monotonic}, {"m25_noise0p25_amax0p9", Phase::Catapult},
      {"m25_noise0p25_amax1p0", Phase::Catapult},  {"m25_noise0p25_amax1p2", Phase::Periodic},
      {"m25_noise0p25_amax1p6", Phase::Chaotic},
  };
  std::string names;
  for (const auto& [n, _] : expected) names += (names.empty() ? "" : ",") + n;
  std::vector<std::string> args = {"sweep", manifest.string(), "--out-dir", out2.string()};
  for (const auto& [n, _] : expected) {
    args.push_back("--only");
    args.push_back(n);
  }
  std::ostringstream sink2, err2;
  const int code2 = cli::run(args, sink2, err2);
  bool same = code2 == 0;
  for (const auto& [n, _] : expected) {
    for (const char* suffix : {".csv", "_z.csv", ".svg", "_test.svg"}) {
      same = same && fs::exists(out1 / (n + suffix)) && slurp(out1 / (n + suffix)) == slurp(out2 / (n + suffix));
    }
  }
  o.require(same, "re-run of the m=25, noise 0.25 entries is byte-identical");

  for (const auto& [name, want] : expected) {
    const fs::path f = out1 / (name + ".csv");
    if (!fs::exists(f)) {
      o.require(false, name + " missing");
      continue;
    }
    const CsvTable t = read_csv(f);
    const std::size_t col = t.column("train_loss");
    std::vector<double> loss;
    for (const auto& row : t.rows) loss.push_back(*parse_double(row[col]));
    bool diverged = false;
    for (const auto& line : t.footer) diverged = diverged || line == "diverged=true";
    const auto rep = classify_loss_curve(loss, diverged);
    std::string detail = name + " " + std::string(to_string(rep.phase)) + " (want " + std::string(to_string(want)) +
                         ", increases " + std::to_string(rep.increases) + ")";
    if (want == Phase::Catapult) {
      const double ratio = loss.back() / loss.front();
      detail += ", final/initial loss " + fmt("%.1e", ratio);
    }
    o.require(rep.phase == want, detail);
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "phase boundary suite", phase_boundaries},
      {2, "exact map-GD equivalence", map_equivalence},
      {3, "sharpness cross-check", sharpness_crosscheck},
      {4, "limiting sharpness", limiting_sharpness},
      {5, "loss identity", loss_identity},
      {6, "period-2 absence/presence", period2_presence},
      {7, "chaos-onset constant", chaos_onset},
      {8, "Lyapunov sign checks", lyapunov_signs},
      {9, "catapult interval partition", catapult_partition_check},
      {10, "ergodic averaging", ergodic_averaging},
      {11, "figure-grid reproduction", figure_grid},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.notes.push_back(std::string("exception: ") + e.what());
    }
    failed += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << ' ' << c.id << ". " << c.name << " |";
    for (std::size_t i = 0; i < out.notes.size(); ++i) std::cout << (i ? "; " : " ") << out.notes[i];
    std::cout << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << '/' << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
