#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "edyn/cli.hpp"
#include "edyn/csv.hpp"
#include "edyn/cubic_map.hpp"
#include "edyn/errors.hpp"
#include "edyn/rng.hpp"
#include "edyn/svg.hpp"

using namespace edyn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "edyn_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

bool has_footer(const CsvTable& t, const std::string& line) {
  for (const auto& f : t.footer) {
    if (f == line) return true;
  }
  return false;
}

std::vector<double> numeric_column(const CsvTable& t, const std::string& name) {
  const std::size_t c = t.column(name);
  std::vector<double> v;
  for (const auto& row : t.rows) v.push_back(*parse_double(row[c]));
  return v;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run_cli({}).code == cli::kExitParam);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitParam);
  CHECK(run_cli({"orbit"}).code == cli::kExitParam);
  CHECK(run_cli({"orbit", "--a", "abc"}).code == cli::kExitParam);

  const auto zero = run_cli({"orbit", "--a", "0", "--out-dir", fresh_dir("zero").string()});
  CHECK(zero.code == cli::kExitParam);
  CHECK(zero.err.find("a must be") != std::string::npos);

  const auto v = run_cli({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("edgedyn 1.0.0") != std::string::npos);
  CHECK(run_cli({"train", "--help"}).code == 0);

  CHECK(run_cli({"bifurcation", "--a-min", "1", "--a-max", "1"}).code == cli::kExitParam);
  CHECK(run_cli({"bifurcation", "--a-min", "1.5", "--a-max", "1"}).code == cli::kExitParam);
  CHECK(run_cli({"train", "--eta", "1", "--target-amax", "1"}).code == cli::kExitParam);
  CHECK(run_cli({"train", "--eta-fraction", "6"}).code == cli::kExitParam);
  CHECK(run_cli({"train", "--model", "mlp", "--eta", "1"}).code == cli::kExitParam);
  CHECK(run_cli({"phase"}).code == cli::kExitParam);
  CHECK(run_cli({"phase", "--a", "-1"}).code == cli::kExitParam);

  const auto missing = run_cli({"train", "--dataset", "/definitely/not/here.csv", "--eta", "1"});
  CHECK(missing.code == cli::kExitData);
  CHECK(missing.err.find("/definitely/not/here.csv") != std::string::npos);
  CHECK(run_cli({"phase", "--trajectory", "/definitely/not/here.csv"}).code == cli::kExitData);
}

TEST_CASE("orbit output") {
  const fs::path dir = fresh_dir("orbit");
  const auto r = run_cli({"orbit", "--a", "1.2", "--z0", "1.9", "--steps", "200", "--min-length", "100",
                          "--out-dir", dir.string(), "--format", "csv+svg"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Periodic") != std::string::npos);
  CHECK(fs::exists(dir / "orbit.svg"));

  const CsvTable t = read_csv(dir / "orbit.csv");
  CHECK(t.header == std::vector<std::string>{"step", "z", "abs_z"});
  CHECK(t.meta.get("a") == "1.2");
  CHECK(t.meta.get("command") == "orbit");
  REQUIRE(t.rows.size() == 201);
  const Orbit o = iterate_orbit(MapParam(1.2), 1.9, 200);
  const auto z = numeric_column(t, "z");
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == o.points()[i]);
  CHECK(has_footer(t, "analytic_phase=Periodic"));
  CHECK(has_footer(t, "empirical_phase=Periodic"));
  CHECK(has_footer(t, "diverged=false"));

  SUBCASE("phase of the recorded trajectory") {
    const auto p = run_cli({"phase", "--trajectory", (dir / "orbit.csv").string(), "--min-length", "100"});
    CHECK(p.code == 0);
    CHECK(p.out.rfind("Periodic, period 2", 0) == 0);
  }
}

TEST_CASE("divergent orbit is flagged, not an error") {
  const fs::path dir = fresh_dir("orbit_div");
  const auto r = run_cli({"orbit", "--a", "2.1", "--z0", "0.1", "--out-dir", dir.string()});
  CHECK(r.code == 0);
  const CsvTable t = read_csv(dir / "orbit.csv");
  CHECK(has_footer(t, "diverged=true"));
  CHECK(has_footer(t, "analytic_phase=Divergent"));
}

TEST_CASE("phase reports") {
  const auto c = run_cli({"phase", "--a", "1.6"});
  CHECK(c.code == 0);
  CHECK(c.out.rfind("Chaotic (witness x0=", 0) == 0);
  CHECK(c.out.find("a* estimate 1.5981") != std::string::npos);
  CHECK(run_cli({"phase", "--a", "0.9"}).out.rfind("Catapult", 0) == 0);
  CHECK(run_cli({"phase", "--a", "0.5"}).out.rfind("Monotonic", 0) == 0);
  CHECK(run_cli({"phase", "--a", "1.2"}).out.rfind("Periodic", 0) == 0);
  CHECK(run_cli({"phase", "--a", "2.1"}).out.rfind("Divergent", 0) == 0);
}

TEST_CASE("bifurcation output") {
  const fs::path dir = fresh_dir("bif");
  const auto r = run_cli({"bifurcation", "--a-min", "0.5", "--a-max", "1.9", "--steps", "2", "--out-dir",
                          dir.string()});
  REQUIRE(r.code == 0);
  const CsvTable pts = read_csv(dir / "bifurcation.csv");
  CHECK(pts.header == std::vector<std::string>{"a", "z"});
  CHECK(pts.rows.size() == 400);
  const CsvTable ly = read_csv(dir / "bifurcation_lyapunov.csv");
  CHECK(ly.header == std::vector<std::string>{"a", "lyapunov", "flag"});
  REQUIRE(ly.rows.size() == 2);
  CHECK(ly.rows[0][2] == "neg_infinity");
  CHECK(ly.rows[0][1].empty());
  CHECK(ly.rows[1][2] == "finite");
  CHECK(*parse_double(ly.rows[1][1]) > 0.0);
}

TEST_CASE("train output and determinism") {
  const fs::path d1 = fresh_dir("train1");
  const fs::path d2 = fresh_dir("train2");
  const std::vector<std::string> base = {"train", "--d", "20", "--m", "3", "--n", "10", "--noise-var", "0.25",
                                         "--target-amax", "0.3", "--steps", "700", "--n-test", "30",
                                         "--format", "csv+svg", "--seed", "5"};
  auto a1 = base;
  a1.insert(a1.end(), {"--out-dir", d1.string()});
  auto a2 = base;
  a2.insert(a2.end(), {"--out-dir", d2.string()});
  REQUIRE(run_cli(a1).code == 0);
  REQUIRE(run_cli(a2).code == 0);
  for (const char* f : {"train.csv", "train_z.csv", "train.svg", "train_test.svg"}) {
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }

  const CsvTable t = read_csv(d1 / "train.csv");
  CHECK(t.header ==
        std::vector<std::string>{"step", "train_loss", "sharpness", "test_loss_raw", "test_loss_avg"});
  CHECK(t.rows.size() == 701);
  CHECK(t.meta.get("target_amax") == "0.3");
  CHECK(t.meta.get("seed") == "5");
  CHECK(t.meta.get("orthogonal") == "true");
  const auto loss = numeric_column(t, "train_loss");
  for (std::size_t i = 0; i + 1 < loss.size(); ++i) CHECK(loss[i + 1] <= loss[i] * (1.0 + 1e-12));
  CHECK(has_footer(t, "diverged=false"));
  bool monotone = false;
  for (const auto& f : t.footer) monotone = monotone || f.rfind("loss_phase=Monotonic", 0) == 0;
  CHECK(monotone);

  const CsvTable z = read_csv(d1 / "train_z.csv");
  CHECK(z.header == std::vector<std::string>{"step", "i", "z_i"});
  CHECK(z.rows.size() == 701 * 10);

  const fs::path d3 = fresh_dir("train3");
  auto a3 = base;
  a3[a3.size() - 1] = "6";
  a3.insert(a3.end(), {"--out-dir", d3.string()});
  REQUIRE(run_cli(a3).code == 0);
  CHECK(slurp(d3 / "train.csv") != slurp(d1 / "train.csv"));
}

TEST_CASE("train variants") {
  const fs::path dir = fresh_dir("variants");
  SUBCASE("classical phase retrieval, single point") {
    const auto r = run_cli({"train", "--model", "pr", "--n", "1", "--d", "5", "--gamma", "2", "--c", "0", "--eta",
                            "0.5", "--steps", "50", "--out-dir", dir.string(), "--prefix", "pr"});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "pr.csv"));
  }
  SUBCASE("dataset round trip through the CLI") {
    const std::string ds = (dir / "ds.csv").string();
    REQUIRE(run_cli({"train", "--d", "12", "--m", "2", "--n", "6", "--eta", "10", "--steps", "20", "--save-dataset",
                     ds, "--out-dir", dir.string(), "--prefix", "a"})
                .code == 0);
    REQUIRE(run_cli({"train", "--dataset", ds, "--eta", "10", "--steps", "20", "--out-dir", dir.string(), "--prefix",
                     "b"})
                .code == 0);
    const auto la = numeric_column(read_csv(dir / "a.csv"), "train_loss");
    const auto lb = numeric_column(read_csv(dir / "b.csv"), "train_loss");
    CHECK(la == lb);
  }
  SUBCASE("malformed dataset is a data error") {
    spit(dir / "bad.csv", "# kind=gaussian\nnot,a,dataset\n1,2\n");
    CHECK(run_cli({"train", "--dataset", (dir / "bad.csv").string(), "--eta", "1"}).code == cli::kExitData);
  }
  SUBCASE("target amax on gaussian data is refused") {
    CHECK(run_cli({"train", "--data", "gaussian", "--d", "10", "--n", "5", "--m", "2", "--target-amax", "1",
                   "--out-dir", dir.string()})
              .code == cli::kExitParam);
  }
  SUBCASE("tuned eta fraction on gaussian data") {
    const auto r = run_cli({"train", "--data", "gaussian", "--d", "10", "--n", "5", "--m", "2", "--eta-fraction", "5",
                            "--tune-trial-steps", "100", "--steps", "100", "--out-dir", dir.string(), "--prefix",
                            "tuned"});
    CHECK(r.code == 0);
    const CsvTable t = read_csv(dir / "tuned.csv");
    CHECK(t.meta.get("eta_source") == "tuned_fraction");
    CHECK(has_footer(t, "diverged=false"));
  }
  SUBCASE("divergence is exit 0 with a flag") {
    const auto r = run_cli({"train", "--d", "20", "--m", "3", "--n", "10", "--target-amax", "3", "--steps", "500",
                            "--out-dir", dir.string(), "--prefix", "div"});
    CHECK(r.code == 0);
    CHECK(has_footer(read_csv(dir / "div.csv"), "diverged=true"));
  }
}

TEST_CASE("sweep") {
  const fs::path dir = fresh_dir("sweep");
  SUBCASE("empty manifest is a no-op") {
    spit(dir / "empty.ini", "; nothing here\n");
    const auto r = run_cli({"sweep", (dir / "empty.ini").string(), "--out-dir", (dir / "out").string()});
    CHECK(r.code == 0);
  }
  SUBCASE("missing dataset names the path") {
    spit(dir / "missing.ini", "command = train\neta = 1\n\n[one]\ndataset = nowhere.csv\n");
    const auto r = run_cli({"sweep", (dir / "missing.ini").string(), "--out-dir", (dir / "out").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find((dir / "nowhere.csv").string()) != std::string::npos);
  }
  SUBCASE("entries run and are summarised") {
    spit(dir / "m.ini",
         "command = train\nd = 12\nm = 2\nn = 6\nsteps = 30\n\n[low]\ntarget_amax = 0.3\n\n[high]\ntarget-amax = 1.2\n");
    const auto r = run_cli({"sweep", (dir / "m.ini").string(), "--out-dir", (dir / "out").string(), "--threads", "2"});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "out" / "low.csv"));
    CHECK(fs::exists(dir / "out" / "high.csv"));
    const CsvTable s = read_csv(dir / "out" / "summary.csv");
    CHECK(s.header.front() == "name");
    REQUIRE(s.rows.size() == 2);
    CHECK(s.rows[0][0] == "low");
    CHECK(s.rows[0][2] == "0");

    const auto only = run_cli({"sweep", (dir / "m.ini").string(), "--out-dir", (dir / "out2").string(), "--only",
                               "high"});
    CHECK(only.code == 0);
    CHECK(slurp(dir / "out2" / "high.csv") == slurp(dir / "out" / "high.csv"));
    CHECK_FALSE(fs::exists(dir / "out2" / "low.csv"));
  }
  SUBCASE("malformed manifests") {
    spit(dir / "dup.ini", "[a]\ncommand = orbit\na = 1\n[a]\ncommand = orbit\n");
    CHECK(run_cli({"sweep", (dir / "dup.ini").string()}).code == cli::kExitData);
    spit(dir / "nocmd.ini", "[a]\na = 1\n");
    CHECK(run_cli({"sweep", (dir / "nocmd.ini").string()}).code == cli::kExitData);
    spit(dir / "reserved.ini", "[a]\ncommand = orbit\nout-dir = /tmp\n");
    CHECK(run_cli({"sweep", (dir / "reserved.ini").string()}).code == cli::kExitData);
    CHECK(run_cli({"sweep", (dir / "absent.ini").string()}).code == cli::kExitData);
  }
  SUBCASE("failing entry sets the exit code") {
    spit(dir / "bad.ini", "[ok]\ncommand = orbit\na = 1.2\n\n[bad]\ncommand = orbit\na = -1\n");
    const auto r = run_cli({"sweep", (dir / "bad.ini").string(), "--out-dir", (dir / "out3").string()});
    CHECK(r.code == cli::kExitParam);
    CHECK(fs::exists(dir / "out3" / "ok.csv"));
  }
}

TEST_CASE("manifest parsing") {
  const fs::path dir = fresh_dir("manifest");
  spit(dir / "m.ini", "command = train\nseed = 3\n\n[x]\nnoise_var = 0.5\nseed = 4\nsave_svg = false\nverbose = true\n");
  const auto m = cli::load_manifest(dir / "m.ini");
  REQUIRE(m.entries.size() == 1);
  const auto& e = m.entries[0];
  CHECK(e.name == "x");
  CHECK(e.command == "train");
  CHECK(e.line == 4);
  const auto args = cli::entry_arguments(e, "outdir");
  const std::vector<std::string> want = {"train", "--noise-var", "0.5", "--seed", "4", "--verbose",
                                         "--out-dir", "outdir", "--prefix", "x"};
  CHECK(args == want);

  spit(dir / "bad.ini", "[x]\ncommand = orbit\n[y\n");
  try {
    cli::load_manifest(dir / "bad.ini");
    FAIL("expected ParseError");
  } catch (const ParseError& err) {
    CHECK(err.line() == 3);
  }
}

TEST_CASE("csv number format round-trips") {
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.uniform(-300.0, 300.0)));
    CHECK(*parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(HUGE_VAL) == "inf");
  CHECK(std::isnan(*parse_double("nan")));
  CHECK_FALSE(parse_double("1.5x"));
  CHECK_FALSE(parse_double(""));
}

TEST_CASE("csv reader") {
  const fs::path dir = fresh_dir("csv");
  spit(dir / "ok.csv", "# tool=edgedyn 1.0.0\n# k=v\na,b\n1,2\n3,4\n# end=1\n");
  const CsvTable t = read_csv(dir / "ok.csv");
  CHECK(t.meta.get("k") == "v");
  CHECK(t.rows.size() == 2);
  CHECK(t.footer == std::vector<std::string>{"end=1"});
  CHECK(t.column("b") == 1);
  CHECK_THROWS_AS(t.column("c"), ParseError);

  spit(dir / "ragged.csv", "a,b\n1,2\n3\n");
  try {
    read_csv(dir / "ragged.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("svg rendering") {
  PlotSeries s;
  s.x = {0, 1, 2, 3, 4};
  s.y = {1.0, 0.0, -1.0, NAN, 1e-5};
  PlotOptions o;
  o.log_y = true;
  o.title = "loss <test>";
  const std::string svg = render_svg({s}, o);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("inf") == std::string::npos);
  CHECK(svg.find("&lt;test&gt;") != std::string::npos);
}
