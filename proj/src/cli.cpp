#include "edyn/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "edyn/csv.hpp"
#include "edyn/cubic_map.hpp"
#include "edyn/data_gen.hpp"
#include "edyn/diagnostics.hpp"
#include "edyn/errors.hpp"
#include "edyn/parallel.hpp"
#include "edyn/phase_analysis.hpp"
#include "edyn/quad_models.hpp"
#include "edyn/rng.hpp"
#include "edyn/svg.hpp"

namespace edyn::cli {

void RunSummary::set(std::string key, std::string value) {
  for (auto& kv : fields) {
    if (kv.first == key) {
      kv.second = std::move(value);
      return;
    }
  }
  fields.emplace_back(std::move(key), std::move(value));
}

std::string RunSummary::get(const std::string& key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return {};
}

namespace {

/// Input files that are missing or unreadable map to exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

std::string short_num(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct OutputOptions {
  std::filesystem::path out_dir = ".";
  std::string prefix;
  std::string format = "csv";

  bool svg() const { return format == "csv+svg"; }
  std::filesystem::path file(const std::string& suffix) const { return out_dir / (prefix + suffix); }
};

void add_output_options(CLI::App* cmd, OutputOptions& o, const std::string& default_prefix) {
  o.prefix = default_prefix;
  cmd->add_option("--out-dir", o.out_dir, "Directory for output files")->capture_default_str();
  cmd->add_option("--prefix", o.prefix, "File name prefix")->capture_default_str();
  cmd->add_option("--format", o.format, "csv or csv+svg")
      ->check(CLI::IsMember({"csv", "csv+svg"}))
      ->capture_default_str();
}

std::ofstream open_out(const std::filesystem::path& p) {
  if (!p.parent_path().empty()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw Error("cannot open " + p.string() + " for writing");
  return f;
}

std::string describe_evidence(const PhaseEvidence& ev) {
  if (const auto* po = std::get_if<PeriodicOrbit>(&ev)) {
    std::vector<double> pts(po->points.begin(), po->points.end());
    if (po->period == 1) {
      return "fixed point " + short_num(po->points.front(), 8) + ", multiplier " + short_num(po->multiplier);
    }
    std::string s = "period " + std::to_string(po->period) + ", points ";
    for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? ";" : "") + short_num(pts[i], 8);
    return s + ", multiplier " + short_num(po->multiplier);
  }
  if (const auto* w = std::get_if<ChaosWitness>(&ev)) {
    std::string s = "witness x0=" + short_num(w->x0, 8) + ", iterates ";
    for (std::size_t i = 0; i < 4; ++i) s += (i ? ";" : "") + short_num(w->iterates[i], 8);
    return s;
  }
  if (const auto* d = std::get_if<DivergenceEvidence>(&ev)) {
    return "divergence at step " + std::to_string(d->step);
  }
  return "";
}

// --- orbit -------------------------------------------------------------------

struct OrbitArgs {
  double a = 0.0;
  double z0 = 0.1;
  std::size_t steps = 1000;
  std::size_t min_length = ClassifierConfig{}.min_length;
  OutputOptions out;
};

int cmd_orbit(const OrbitArgs& args, std::ostream& out, RunSummary& summary) {
  const MapParam a(args.a);
  if (!std::isfinite(args.z0)) throw InvalidParam("z0 must be finite");
  if (args.steps == 0) throw InvalidParam("steps must be >= 1");
  const double a_star = estimate_chaos_onset();
  const Orbit orbit = iterate_orbit(a, args.z0, args.steps);
  const Phase analytic = classify_by_parameter(args.a, a_star);

  ClassifierConfig cfg;
  cfg.min_length = args.min_length;
  std::string empirical;
  std::string evidence;
  try {
    const PhaseReport rep = classify_trajectory(orbit, cfg, a_star);
    empirical = std::string(to_string(rep.phase));
    evidence = describe_evidence(rep.evidence);
  } catch (const InconclusiveError&) {
    empirical = "inconclusive";
    evidence = "fewer than " + std::to_string(cfg.min_length) + " points";
  }

  Metadata meta;
  meta.add("command", "orbit").add("a", args.a).add("z0", args.z0).add("steps", static_cast<unsigned long long>(args.steps));
  auto csv = open_out(args.out.file(".csv"));
  meta.write(csv);
  csv << "step,z,abs_z\n";
  const auto pts = orbit.points();
  for (std::size_t t = 0; t < pts.size(); ++t) {
    csv << t << ',' << format_double(pts[t]) << ',' << format_double(std::abs(pts[t])) << '\n';
  }
  csv << "# analytic_phase=" << to_string(analytic) << '\n';
  csv << "# a_star_estimate=" << format_double(a_star) << '\n';
  csv << "# empirical_phase=" << empirical << '\n';
  if (!evidence.empty()) csv << "# evidence=" << evidence << '\n';
  csv << "# diverged=" << (orbit.terminated_divergent() ? "true" : "false") << '\n';
  if (orbit.divergence_step()) csv << "# divergence_step=" << *orbit.divergence_step() << '\n';

  if (args.out.svg()) {
    PlotSeries s;
    for (std::size_t t = 0; t < pts.size(); ++t) {
      s.x.push_back(static_cast<double>(t));
      s.y.push_back(pts[t]);
    }
    s.label = "a = " + short_num(args.a);
    write_svg(args.out.file(".svg"), {s}, {"Orbit of f_a", "step", "z", false});
  }

  out << "a=" << short_num(args.a) << " analytic=" << to_string(analytic) << " empirical=" << empirical;
  if (orbit.terminated_divergent()) out << " diverged at step " << *orbit.divergence_step();
  out << '\n';
  summary.set("analytic_phase", std::string(to_string(analytic)));
  summary.set("empirical_phase", empirical);
  summary.set("diverged", orbit.terminated_divergent() ? "true" : "false");
  return kExitOk;
}

// --- bifurcation ---------------------------------------------------------------

struct BifurcationArgs {
  SweepGrid grid;
  std::size_t lyapunov_n = 0;
  OutputOptions out;
};

int cmd_bifurcation(const BifurcationArgs& args, std::ostream& out, RunSummary& summary) {
  args.grid.validate();
  const auto cells = bifurcation_sweep(args.grid);
  const auto lyap = lyapunov_sweep(args.grid, args.lyapunov_n);

  Metadata meta;
  meta.add("command", "bifurcation")
      .add("a_min", args.grid.a_min)
      .add("a_max", args.grid.a_max)
      .add("steps", static_cast<unsigned long long>(args.grid.steps))
      .add("z0", args.grid.z0)
      .add("burn_in", static_cast<unsigned long long>(args.grid.burn_in))
      .add("keep", static_cast<unsigned long long>(args.grid.keep))
      .add("lyapunov_n", static_cast<unsigned long long>(args.lyapunov_n ? args.lyapunov_n : args.grid.keep));

  std::size_t diverged = 0;
  {
    auto csv = open_out(args.out.file(".csv"));
    meta.write(csv);
    csv << "a,z\n";
    for (const auto& c : cells) {
      if (c.diverged) {
        ++diverged;
        continue;
      }
      const std::string a = format_double(c.a);
      for (double z : c.attractor) csv << a << ',' << format_double(z) << '\n';
    }
    csv << "# diverged_cells=" << diverged << '\n';
  }
  {
    auto csv = open_out(args.out.file("_lyapunov.csv"));
    meta.write(csv);
    csv << "a,lyapunov,flag\n";
    for (const auto& c : lyap) {
      const char* flag = c.flag == LyapunovFlag::Finite ? "finite"
                         : c.flag == LyapunovFlag::NegInfinity ? "neg_infinity"
                                                               : "diverged";
      csv << format_double(c.a) << ',' << (c.flag == LyapunovFlag::Finite ? format_double(c.lambda) : "")
          << ',' << flag << '\n';
    }
  }
  if (args.out.svg()) {
    PlotSeries s;
    s.scatter = true;
    for (const auto& c : cells) {
      for (double z : c.attractor) {
        s.x.push_back(c.a);
        s.y.push_back(z);
      }
    }
    write_svg(args.out.file(".svg"), {s}, {"Bifurcation diagram", "a", "z", false, 900, 520, 0.35});
    PlotSeries l;
    l.label = "Lyapunov exponent";
    for (const auto& c : lyap) {
      l.x.push_back(c.a);
      l.y.push_back(c.flag == LyapunovFlag::Finite ? c.lambda : std::nan(""));
    }
    write_svg(args.out.file("_lyapunov.svg"), {l}, {"Lyapunov exponent", "a", "lambda", false});
  }
  out << "bifurcation: " << cells.size() << " cells, " << diverged << " diverged\n";
  summary.set("cells", std::to_string(cells.size()));
  summary.set("diverged_cells", std::to_string(diverged));
  return kExitOk;
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
  std::string model = "quadnet";
  std::string data = "orthogonal";
  std::string dataset;
  std::string save_dataset;
  long long d = 100;
  long long m = 25;
  long long n = 80;
  double noise_var = 0.0;
  double gamma = 2.0;
  double c = 0.0;
  std::optional<double> eta;
  std::optional<double> target_amax;
  std::optional<int> eta_fraction;
  std::size_t tune_trial_steps = 200;
  std::size_t steps = 2000;
  std::uint64_t seed = 0;
  std::optional<double> init_scale;
  long long n_test = 500;
  std::size_t z_stride = 1;
  std::size_t avg_burn_in = 0;
  OutputOptions out;
};

int cmd_train(const TrainArgs& args, std::ostream& out, RunSummary& summary) {
  const bool qn = args.model == "quadnet";
  if (!args.dataset.empty() && !std::filesystem::exists(args.dataset)) {
    throw DataError("dataset not found: " + args.dataset);
  }
  const int eta_sources = args.eta.has_value() + args.target_amax.has_value() + args.eta_fraction.has_value();
  if (eta_sources != 1) throw InvalidParam("give exactly one of --eta, --target-amax, --eta-fraction");
  if (args.eta_fraction && (*args.eta_fraction < 1 || *args.eta_fraction > 5)) {
    throw InvalidParam("--eta-fraction must be in 1..5");
  }
  if (args.steps == 0) throw InvalidParam("steps must be >= 1");
  if (args.z_stride == 0) throw InvalidParam("z-stride must be >= 1");
  if (args.n_test < 0) throw InvalidParam("n-test must be >= 0");

  DatasetConfig dcfg;
  dcfg.kind = data_kind_from_string(args.data);
  dcfg.labels = qn ? LabelModel::QuadNet : LabelModel::PhaseRetrieval;
  dcfg.n = args.n;
  dcfg.d = args.d;
  dcfg.m = args.m;
  dcfg.noise_var = args.noise_var;
  dcfg.gamma = args.gamma;
  dcfg.c = args.c;
  dcfg.seed = args.seed;
  if (args.noise_var < 0.0) throw InvalidParam("noise-var must be >= 0");

  Dataset ds;
  if (!args.dataset.empty()) {
    ds = load_dataset(args.dataset);
    dcfg.kind = ds.kind;
    dcfg.n = ds.n();
    dcfg.d = ds.d();
    if (qn && ds.m() > 0) dcfg.m = ds.m();
  } else {
    if (dcfg.kind == DataKind::OrthonormalRows && dcfg.n > dcfg.d) {
      throw InvalidParam("orthogonal data needs n <= d");
    }
    ds = make_dataset(dcfg);
  }
  if (!args.save_dataset.empty()) save_dataset(ds, args.save_dataset);

  RecordConfig rec;
  rec.stride = args.z_stride;
  rec.avg_burn_in = args.avg_burn_in;
  std::optional<Dataset> test;
  if (args.n_test > 0 && ds.ground_truth) {
    test = make_test_set(dcfg, ds, args.n_test);
    rec.test_X = test->X;
    rec.test_y = test->y;
  }

  const std::uint64_t init_seed = derive_seed(args.seed, 5);
  const double init_scale = args.init_scale.value_or(qn ? 1.0 : 0.1);
  const bool orthogonal = ds.n() == 1 || is_row_orthogonal(ds.X);

  PhaseRetrievalSpec pr_spec;
  QuadNetSpec qn_spec;
  if (qn) {
    qn_spec = QuadNetSpec{ds.X, ds.y, dcfg.m};
    qn_spec.validate();
  } else {
    pr_spec = PhaseRetrievalSpec::with_scalar_c(args.gamma, args.c, ds.X, ds.y);
    pr_spec.validate();
  }
  const Eigen::VectorXd w0 = qn ? Eigen::VectorXd() : init_pr_weights(ds.d(), init_seed, init_scale);
  const Eigen::MatrixXd U0 = qn ? init_qn_weights(ds.d(), dcfg.m, init_seed, init_scale) : Eigen::MatrixXd();

  auto train = [&](double eta, std::size_t steps, const RecordConfig& r) {
    return qn ? train_qn(qn_spec, eta, steps, U0, r) : train_pr(pr_spec, eta, steps, w0, r);
  };
  auto eta_for = [&](double target) {
    return qn ? eta_for_target_amax(qn_spec, target) : eta_for_target_amax(pr_spec, target);
  };

  double eta = 0.0;
  std::string eta_source;
  std::optional<double> eta_max;
  if (args.eta) {
    eta = *args.eta;
    eta_source = "explicit";
  } else if (args.target_amax) {
    if (!orthogonal) {
      throw InvalidParam("--target-amax needs orthogonal data; use --eta or --eta-fraction");
    }
    eta = eta_for(*args.target_amax);
    eta_source = "target_amax";
  } else {
    RecordConfig trial;
    const auto diverges = [&](double e) { return train(e, args.tune_trial_steps, trial).diverged; };
    eta_max = tune_eta_max(diverges, eta_for(0.05), eta_for(2.0));
    eta = eta_fractions(*eta_max)[static_cast<std::size_t>(*args.eta_fraction - 1)];
    eta_source = "tuned_fraction";
  }
  if (!(std::isfinite(eta) && eta > 0.0)) throw InvalidParam("eta must be finite and > 0");

  const TrainTrace tr = train(eta, args.steps, rec);

  std::string loss_phase = "inconclusive";
  std::string loss_detail;
  try {
    const auto rep = classify_loss_curve(tr.loss, tr.diverged);
    loss_phase = std::string(to_string(rep.phase));
    loss_detail = "increases=" + std::to_string(rep.increases) + " activity_ratio=" + format_double(rep.activity_ratio);
    if (rep.period) loss_detail += " period=" + std::to_string(*rep.period);
  } catch (const InconclusiveError&) {
  }

  Metadata meta;
  meta.add("command", "train")
      .add("model", args.model)
      .add("data", std::string(to_string(ds.kind)))
      .add("dataset", args.dataset.empty() ? std::string("generated") : args.dataset)
      .add("d", static_cast<long long>(ds.d()))
      .add("n", static_cast<long long>(ds.n()));
  if (qn) meta.add("m", static_cast<long long>(dcfg.m));
  if (!qn) meta.add("gamma", args.gamma).add("c", args.c);
  meta.add("noise_var", ds.noise_var)
      .add("seed", static_cast<unsigned long long>(args.seed))
      .add("steps", static_cast<unsigned long long>(args.steps))
      .add("eta", eta)
      .add("eta_source", eta_source);
  if (args.target_amax) meta.add("target_amax", *args.target_amax);
  if (eta_max) {
    meta.add("eta_max", *eta_max)
        .add("eta_fraction", static_cast<long long>(*args.eta_fraction))
        .add("tune_trial_steps", static_cast<unsigned long long>(args.tune_trial_steps));
  }
  meta.add("init_scale", init_scale)
      .add("orthogonal", orthogonal ? "true" : "false")
      .add("amax", tr.a.maxCoeff())
      .add("nonpositive_a", static_cast<unsigned long long>(tr.nonpositive.size()))
      .add("z0_min", tr.z.front().minCoeff())
      .add("z0_max", tr.z.front().maxCoeff())
      .add("n_test", static_cast<long long>(test ? test->n() : 0))
      .add("z_stride", static_cast<unsigned long long>(args.z_stride))
      .add("avg_burn_in", static_cast<unsigned long long>(args.avg_burn_in));

  std::size_t clipped = 0;
  for (double l : tr.loss) clipped += (l <= kLogClip);
  {
    auto csv = open_out(args.out.file(".csv"));
    meta.write(csv);
    csv << "step,train_loss,sharpness,test_loss_raw,test_loss_avg\n";
    const bool has_test = !tr.test_loss_raw.empty();
    for (std::size_t t = 0; t < tr.loss.size(); ++t) {
      csv << t << ',' << format_double(tr.loss[t]) << ',' << format_double(tr.sharpness[t]) << ','
          << (has_test ? format_double(tr.test_loss_raw[t]) : "nan") << ','
          << (has_test ? format_double(tr.test_loss_avg[t]) : "nan") << '\n';
    }
    csv << "# diverged=" << (tr.diverged ? "true" : "false") << '\n';
    if (tr.divergence_step) csv << "# divergence_step=" << *tr.divergence_step << '\n';
    csv << "# loss_phase=" << loss_phase << (loss_detail.empty() ? "" : " " + loss_detail) << '\n';
    if (args.out.svg() && clipped) {
      csv << "# note=" << clipped << " loss values <= 1e-300 clipped to 1e-300 in the log-scale plot\n";
    }
  }
  {
    auto csv = open_out(args.out.file("_z.csv"));
    meta.write(csv);
    csv << "step,i,z_i\n";
    for (std::size_t k = 0; k < tr.z.size(); ++k) {
      for (Eigen::Index i = 0; i < tr.z[k].size(); ++i) {
        csv << tr.z_steps[k] << ',' << i << ',' << format_double(tr.z[k](i)) << '\n';
      }
    }
  }
  if (args.out.svg()) {
    PlotSeries train_s{{}, {}, "train loss", false};
    PlotSeries raw_s{{}, {}, "test loss", false};
    PlotSeries avg_s{{}, {}, "test loss (averaged)", false};
    for (std::size_t t = 0; t < tr.loss.size(); ++t) {
      train_s.x.push_back(static_cast<double>(t));
      train_s.y.push_back(tr.loss[t]);
      if (!tr.test_loss_raw.empty()) {
        raw_s.x.push_back(static_cast<double>(t));
        raw_s.y.push_back(tr.test_loss_raw[t]);
        avg_s.x.push_back(static_cast<double>(t));
        avg_s.y.push_back(tr.test_loss_avg[t]);
      }
    }
    const std::string title = "eta = " + short_num(eta) + ", max a_i = " + short_num(tr.a.maxCoeff(), 4);
    write_svg(args.out.file(".svg"), {train_s}, {title, "step", "training loss", true});
    if (!tr.test_loss_raw.empty()) {
      write_svg(args.out.file("_test.svg"), {raw_s, avg_s}, {title, "step", "test loss", false});
    }
  }

  out << "train " << args.model << ": eta=" << short_num(eta) << " amax=" << short_num(tr.a.maxCoeff(), 4)
      << " final_loss=" << short_num(tr.loss.back()) << " phase=" << loss_phase
      << (tr.diverged ? " diverged at step " + std::to_string(*tr.divergence_step) : std::string()) << '\n';
  summary.set("eta", format_double(eta));
  summary.set("amax", format_double(tr.a.maxCoeff()));
  summary.set("final_loss", format_double(tr.loss.back()));
  summary.set("diverged", tr.diverged ? "true" : "false");
  summary.set("loss_phase", loss_phase);
  return kExitOk;
}

// --- phase ---------------------------------------------------------------------

struct PhaseArgs {
  std::optional<double> a;
  std::string trajectory;
  std::size_t min_length = ClassifierConfig{}.min_length;
};

int cmd_phase(const PhaseArgs& args, std::ostream& out, RunSummary& summary) {
  if (args.a.has_value() == !args.trajectory.empty()) throw InvalidParam("give exactly one of --a or --trajectory");
  const double a_star = estimate_chaos_onset();
  const std::string a_star_text = "a* estimate " + short_num(a_star, 5);
  PhaseReport rep;
  if (args.a) {
    MapParam(*args.a);
    rep = analyze_parameter(*args.a, a_star);
  } else {
    if (!std::filesystem::exists(args.trajectory)) throw DataError("trajectory not found: " + args.trajectory);
    const CsvTable t = read_csv(args.trajectory);
    const auto a_text = t.meta.get("a");
    if (!a_text) throw ParseError("trajectory metadata has no 'a' entry", 1, 1);
    const auto a = parse_double(*a_text);
    if (!a) throw ParseError("trajectory metadata 'a' is not a number", 1, 1);
    const std::size_t col = t.column("z");
    std::vector<double> z;
    z.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto v = parse_double(t.rows[r][col]);
      if (!v) throw ParseError("bad z value '" + t.rows[r][col] + "'", r + 1, col + 1);
      z.push_back(*v);
    }
    if (z.empty()) throw ParseError("trajectory has no rows", 1, 1);
    ClassifierConfig cfg;
    cfg.min_length = args.min_length;
    rep = classify_trajectory(Orbit::from_points(MapParam(*a), std::move(z)), cfg, a_star);
  }
  std::string ev = describe_evidence(rep.evidence);
  out << to_string(rep.phase);
  if (ev.rfind("period ", 0) == 0) {
    const auto comma = ev.find(", ");
    out << ", " << ev.substr(0, comma);
    ev.erase(0, comma + 2);
  }
  out << " (" << (ev.empty() ? "" : ev + ", ") << a_star_text << ")\n";
  summary.set("phase", std::string(to_string(rep.phase)));
  return kExitOk;
}

// --- sweep ---------------------------------------------------------------------

struct SweepArgs {
  std::string manifest;
  std::filesystem::path out_dir = "sweep_out";
  std::vector<std::string> only;
  std::size_t threads = 0;
};

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err, RunSummary& summary) {
  if (!std::filesystem::exists(args.manifest)) throw DataError("manifest not found: " + args.manifest);
  const Manifest m = load_manifest(args.manifest);
  std::vector<const ManifestEntry*> selected;
  for (const auto& e : m.entries) {
    if (args.only.empty() || std::find(args.only.begin(), args.only.end(), e.name) != args.only.end()) {
      selected.push_back(&e);
    }
  }
  for (const auto& name : args.only) {
    const bool found = std::any_of(m.entries.begin(), m.entries.end(), [&](const auto& e) { return e.name == name; });
    if (!found) throw InvalidParam("--only names an unknown entry '" + name + "'");
  }
  if (selected.empty()) {
    out << "sweep: nothing to run\n";
    summary.set("entries", "0");
    return kExitOk;
  }
  std::filesystem::create_directories(args.out_dir);

  struct Result {
    int code = 0;
    std::string message;
    RunSummary summary;
  };
  std::vector<Result> results(selected.size());
  parallel_for(
      selected.size(),
      [&](std::size_t i) {
        std::ostringstream o, e;
        results[i].code = run(entry_arguments(*selected[i], args.out_dir), o, e, &results[i].summary);
        results[i].message = e.str();
        while (!results[i].message.empty() && results[i].message.back() == '\n') results[i].message.pop_back();
      },
      args.threads ? args.threads : worker_count());

  int worst = kExitOk;
  auto csv = open_out(args.out_dir / "summary.csv");
  Metadata meta;
  meta.add("command", "sweep").add("manifest", std::filesystem::path(args.manifest).filename().string());
  meta.write(csv);
  csv << "name,command,exit_code,eta,amax,final_loss,diverged,loss_phase\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-12s %-4s %-12s %s\n", "entry", "command", "exit", "phase", "detail");
  out << line;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto& r = results[i];
    const auto& s = r.summary;
    if (r.code != kExitOk && worst == kExitOk) worst = r.code;
    csv << selected[i]->name << ',' << selected[i]->command << ',' << r.code << ',' << s.get("eta") << ','
        << s.get("amax") << ',' << s.get("final_loss") << ',' << s.get("diverged") << ',' << s.get("loss_phase")
        << '\n';
    std::string phase = s.get("loss_phase");
    if (phase.empty()) phase = s.get("empirical_phase");
    if (phase.empty()) phase = "-";
    std::string detail = r.code == kExitOk ? "eta=" + s.get("eta") : r.message;
    if (r.code == kExitOk && s.get("eta").empty()) detail = "";
    std::snprintf(line, sizeof line, "%-28s %-12s %-4d %-12s ", selected[i]->name.c_str(),
                  selected[i]->command.c_str(), r.code, phase.c_str());
    out << line << detail << '\n';
    if (r.code != kExitOk) err << "entry '" << selected[i]->name << "' failed: " << r.message << '\n';
  }
  summary.set("entries", std::to_string(selected.size()));
  return worst;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, RunSummary* summary) {
  RunSummary local;
  RunSummary& sum = summary ? *summary : local;

  CLI::App app{"Cubic-map phase analysis and edge-of-stability experiments", std::string(kToolName)};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolName) + " " + std::string(kToolVersion));

  OrbitArgs orbit;
  auto* c_orbit = app.add_subcommand("orbit", "Iterate f_a and report its phase");
  c_orbit->add_option("--a", orbit.a, "Map parameter (> 0)")->required();
  c_orbit->add_option("--z0", orbit.z0, "Initial point")->capture_default_str();
  c_orbit->add_option("--steps", orbit.steps, "Iterations")->capture_default_str();
  c_orbit->add_option("--min-length", orbit.min_length, "Shortest orbit the classifier accepts")->capture_default_str();
  add_output_options(c_orbit, orbit.out, "orbit");

  BifurcationArgs bif;
  auto* c_bif = app.add_subcommand("bifurcation", "Bifurcation diagram and Lyapunov exponents over a");
  c_bif->add_option("--a-min", bif.grid.a_min)->capture_default_str();
  c_bif->add_option("--a-max", bif.grid.a_max)->capture_default_str();
  c_bif->add_option("--steps", bif.grid.steps, "Grid points")->capture_default_str();
  c_bif->add_option("--z0", bif.grid.z0)->capture_default_str();
  c_bif->add_option("--burn-in", bif.grid.burn_in)->capture_default_str();
  c_bif->add_option("--keep", bif.grid.keep, "Iterates kept per cell")->capture_default_str();
  c_bif->add_option("--lyapunov-n", bif.lyapunov_n, "Terms in each Lyapunov average (0 = keep)")->capture_default_str();
  add_output_options(c_bif, bif.out, "bifurcation");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Gradient descent on a quadratic model");
  c_train->add_option("--model", tr.model)->check(CLI::IsMember({"quadnet", "pr"}))->capture_default_str();
  c_train->add_option("--data", tr.data)
      ->check(CLI::IsMember({"orthogonal", "orthonormal_rows", "gaussian"}))
      ->capture_default_str();
  c_train->add_option("--dataset", tr.dataset, "Load a dataset CSV instead of generating one");
  c_train->add_option("--save-dataset", tr.save_dataset, "Write the dataset used to this path");
  c_train->add_option("--d", tr.d)->capture_default_str();
  c_train->add_option("--m", tr.m)->capture_default_str();
  c_train->add_option("--n", tr.n)->capture_default_str();
  c_train->add_option("--noise-var", tr.noise_var)->capture_default_str();
  c_train->add_option("--gamma", tr.gamma)->capture_default_str();
  c_train->add_option("--c", tr.c)->capture_default_str();
  c_train->add_option("--eta", tr.eta, "Step size");
  c_train->add_option("--target-amax", tr.target_amax, "Choose eta so that max a_i equals this");
  c_train->add_option("--eta-fraction", tr.eta_fraction, "Use k/5 of the tuned largest stable eta (k = 1..5)");
  c_train->add_option("--tune-trial-steps", tr.tune_trial_steps)->capture_default_str();
  c_train->add_option("--steps", tr.steps)->capture_default_str();
  c_train->add_option("--seed", tr.seed)->capture_default_str();
  c_train->add_option("--init-scale", tr.init_scale, "Initial weight scale (default 1 for quadnet, 0.1 for pr)");
  c_train->add_option("--n-test", tr.n_test)->capture_default_str();
  c_train->add_option("--z-stride", tr.z_stride, "Write z every k steps")->capture_default_str();
  c_train->add_option("--avg-burn-in", tr.avg_burn_in, "Iterates skipped by the averaged predictor")
      ->capture_default_str();
  add_output_options(c_train, tr.out, "train");

  PhaseArgs ph;
  auto* c_phase = app.add_subcommand("phase", "Phase of a parameter or of a recorded orbit");
  c_phase->add_option("--a", ph.a);
  c_phase->add_option("--trajectory", ph.trajectory, "Orbit CSV written by 'orbit'");
  c_phase->add_option("--min-length", ph.min_length)->capture_default_str();

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Run every entry of a manifest");
  c_sweep->add_option("manifest", sw.manifest, "Manifest file")->required();
  c_sweep->add_option("--out-dir", sw.out_dir)->capture_default_str();
  c_sweep->add_option("--only", sw.only, "Run only the named entries");
  c_sweep->add_option("--threads", sw.threads, "Worker threads (default: EDGE_DYNAMICS_THREADS or all cores)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolName << ' ' << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitParam;
  }

  try {
    if (*c_orbit) return cmd_orbit(orbit, out, sum);
    if (*c_bif) return cmd_bifurcation(bif, out, sum);
    if (*c_train) return cmd_train(tr, out, sum);
    if (*c_phase) return cmd_phase(ph, out, sum);
    if (*c_sweep) return cmd_sweep(sw, out, err, sum);
  } catch (const InvalidParam& e) {
    err << "error: invalid parameter: " << e.what() << '\n';
    return kExitParam;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ParseError& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return kExitData;
  } catch (const OrthogonalityError& e) {
    err << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const NoPositiveLabelError& e) {
    err << "error: data: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitParam;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace edyn::cli
