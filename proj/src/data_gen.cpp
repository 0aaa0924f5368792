#include "edyn/data_gen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "edyn/csv.hpp"
#include "edyn/errors.hpp"
#include "edyn/rng.hpp"

namespace edyn {

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

enum Stream : std::uint64_t { kDataStream = 0, kTruthStream = 1, kNoiseStream = 2, kTestDataStream = 3,
                              kTestNoiseStream = 4 };

}  // namespace

std::string_view to_string(DataKind k) noexcept {
  return k == DataKind::OrthonormalRows ? "orthonormal_rows" : "gaussian";
}

DataKind data_kind_from_string(std::string_view s) {
  if (s == "orthonormal_rows" || s == "orthogonal") return DataKind::OrthonormalRows;
  if (s == "gaussian") return DataKind::Gaussian;
  throw InvalidParam("unknown data kind '" + std::string(s) + "'");
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n < 0 || d < 0) throw InvalidParam("gaussian_matrix: negative dimension");
  Rng rng(seed);
  Eigen::MatrixXd M(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) M(i, j) = rng.normal();
  }
  return M;
}

Eigen::MatrixXd random_orthonormal_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n > d) throw InvalidShape("random_orthonormal_rows: need n <= d");
  if (n < 0) throw InvalidParam("random_orthonormal_rows: negative n");
  const Eigen::MatrixXd G = gaussian_matrix(d, d, seed);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd& R = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q.topRows(n);
}

Eigen::VectorXd generate_labels(const Eigen::MatrixXd& X, const Eigen::MatrixXd& u_star,
                                double noise_var, std::uint64_t seed) {
  if (u_star.rows() != X.cols()) throw DimensionError("generate_labels: U* must have d rows");
  if (!(noise_var >= 0.0)) throw InvalidParam("generate_labels: noise_var must be >= 0");
  const double scale = 1.0 / (std::sqrt(static_cast<double>(u_star.cols())) * static_cast<double>(X.cols()));
  Eigen::VectorXd y = scale * (X * u_star).rowwise().squaredNorm();
  if (noise_var > 0.0) {
    Rng rng(seed);
    const double sd = std::sqrt(noise_var);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sd * rng.normal();
  }
  return y;
}

Eigen::VectorXd generate_pr_labels(const Eigen::MatrixXd& X, const Eigen::VectorXd& w_star,
                                   double gamma, double c, double noise_var, std::uint64_t seed) {
  if (w_star.size() != X.cols()) throw DimensionError("generate_pr_labels: w* must have d entries");
  if (!(noise_var >= 0.0)) throw InvalidParam("generate_pr_labels: noise_var must be >= 0");
  const Eigen::VectorXd proj = X * w_star;
  Eigen::VectorXd y = (0.5 * gamma * proj.array().square() + c * proj.array()).matrix();
  if (noise_var > 0.0) {
    Rng rng(seed);
    const double sd = std::sqrt(noise_var);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sd * rng.normal();
  }
  return y;
}

bool has_orthogonal_rows(const Eigen::MatrixXd& X, double off_tol) {
  const Eigen::MatrixXd G = X * X.transpose();
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    for (Eigen::Index j = 0; j < G.cols(); ++j) {
      if (i != j && std::abs(G(i, j)) > off_tol) return false;
    }
  }
  return true;
}

bool has_orthonormal_rows(const Eigen::MatrixXd& X, double row_tol, double off_tol) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (std::abs(X.row(i).squaredNorm() - 1.0) > row_tol) return false;
  }
  return has_orthogonal_rows(X, off_tol);
}

Dataset make_dataset(const DatasetConfig& cfg) {
  if (cfg.n <= 0 || cfg.d <= 0) throw InvalidParam("dataset needs n >= 1 and d >= 1");
  if (cfg.labels == LabelModel::QuadNet && cfg.m <= 0) throw InvalidParam("dataset needs m >= 1");
  Dataset ds;
  ds.kind = cfg.kind;
  ds.noise_var = cfg.noise_var;
  ds.seed = cfg.seed;
  const auto data_seed = derive_seed(cfg.seed, kDataStream);
  ds.X = cfg.kind == DataKind::OrthonormalRows ? random_orthonormal_rows(cfg.n, cfg.d, data_seed)
                                               : gaussian_matrix(cfg.n, cfg.d, data_seed);
  const auto noise_seed = derive_seed(cfg.seed, kNoiseStream);
  if (cfg.labels == LabelModel::QuadNet) {
    ds.ground_truth = gaussian_matrix(cfg.d, cfg.m, derive_seed(cfg.seed, kTruthStream));
    ds.y = generate_labels(ds.X, *ds.ground_truth, cfg.noise_var, noise_seed);
  } else {
    ds.ground_truth = gaussian_matrix(cfg.d, 1, derive_seed(cfg.seed, kTruthStream));
    ds.y = generate_pr_labels(ds.X, ds.ground_truth->col(0), cfg.gamma, cfg.c, cfg.noise_var,
                              noise_seed);
  }
  return ds;
}

Dataset make_test_set(const DatasetConfig& cfg, const Dataset& train, Eigen::Index n_test) {
  if (!train.ground_truth) throw InvalidParam("test set needs a ground truth");
  if (n_test <= 0) throw InvalidParam("test set needs n_test >= 1");
  Dataset ts;
  ts.kind = DataKind::Gaussian;
  ts.noise_var = train.noise_var;
  ts.seed = train.seed;
  ts.ground_truth = train.ground_truth;
  ts.X = gaussian_matrix(n_test, train.d(), derive_seed(train.seed, kTestDataStream));
  const auto noise_seed = derive_seed(train.seed, kTestNoiseStream);
  if (cfg.labels == LabelModel::QuadNet) {
    ts.y = generate_labels(ts.X, *ts.ground_truth, ts.noise_var, noise_seed);
  } else {
    ts.y = generate_pr_labels(ts.X, ts.ground_truth->col(0), cfg.gamma, cfg.c, ts.noise_var, noise_seed);
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Persistence

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# kind=" << to_string(ds.kind) << '\n';
  out << "# seed=" << ds.seed << '\n';
  out << "# noise_var=" << format_double(ds.noise_var) << '\n';
  out << "# d=" << ds.d() << " m=" << ds.m() << " n=" << ds.n() << '\n';
  for (Eigen::Index j = 0; j < ds.d(); ++j) out << "x_" << (j + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << format_double(ds.X(i, j)) << ',';
    out << format_double(ds.y(i)) << '\n';
  }
  if (ds.ground_truth) {
    out << "# ground_truth\n";
    const auto& U = *ds.ground_truth;
    for (Eigen::Index r = 0; r < U.rows(); ++r) {
      for (Eigen::Index c = 0; c < U.cols(); ++c) {
        if (c) out << ',';
        out << format_double(U(r, c));
      }
      out << '\n';
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;
  std::string line;

  bool next() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg, std::size_t col = 1) const {
    throw ParseError(msg, line_no, col);
  }
};

std::string header_value(LineReader& r, std::string_view key) {
  if (!r.next()) r.fail("unexpected end of file; expected header '" + std::string(key) + "'");
  const std::string prefix = "# " + std::string(key) + "=";
  if (r.line.rfind(prefix, 0) != 0) r.fail("expected header field '" + std::string(key) + "'");
  return r.line.substr(prefix.size());
}

template <class T>
T parse_number(LineReader& r, std::string_view text, std::string_view field, std::size_t col) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    r.fail("invalid number '" + std::string(text) + "' for field '" + std::string(field) + "'", col);
  }
  return v;
}

std::vector<double> parse_row(LineReader& r, std::size_t expected, std::string_view what) {
  std::vector<double> vals;
  vals.reserve(expected);
  std::size_t pos = 0;
  const std::string& s = r.line;
  while (true) {
    const std::size_t comma = s.find(',', pos);
    const std::string_view cell(s.data() + pos, (comma == std::string::npos ? s.size() : comma) - pos);
    vals.push_back(parse_number<double>(r, cell, what, pos + 1));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (vals.size() != expected) {
    r.fail(std::string(what) + " row has " + std::to_string(vals.size()) + " values, expected " +
           std::to_string(expected));
  }
  return vals;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  LineReader r{in, 0, {}};
  Dataset ds;

  try {
    ds.kind = data_kind_from_string(header_value(r, "kind"));
  } catch (const InvalidParam& e) {
    r.fail(std::string("field 'kind': ") + e.what());
  }
  {
    const std::string v = header_value(r, "seed");
    ds.seed = parse_number<std::uint64_t>(r, v, "seed", 8);
  }
  {
    const std::string v = header_value(r, "noise_var");
    ds.noise_var = parse_number<double>(r, v, "noise_var", 13);
  }
  long long d = 0;
  long long m = 0;
  long long n = 0;
  {
    if (!r.next()) r.fail("unexpected end of file; expected dimension header");
    std::istringstream ss(r.line);
    std::string hash, fd, fm, fn;
    ss >> hash >> fd >> fm >> fn;
    auto field = [&](const std::string& tok, std::string_view key) {
      const std::string prefix = std::string(key) + "=";
      if (tok.rfind(prefix, 0) != 0) r.fail("dimension header missing field '" + std::string(key) + "'");
      return parse_number<long long>(r, std::string_view(tok).substr(prefix.size()), key, 1);
    };
    if (hash != "#") r.fail("expected '# d=.. m=.. n=..' header");
    d = field(fd, "d");
    m = field(fm, "m");
    n = field(fn, "n");
    if (d <= 0 || n <= 0 || m < 0) r.fail("dimension header has non-positive field 'd' or 'n'");
  }
  if (!r.next()) r.fail("unexpected end of file; expected column header");
  {
    const std::size_t cols = static_cast<std::size_t>(std::count(r.line.begin(), r.line.end(), ',')) + 1;
    if (cols != static_cast<std::size_t>(d) + 1) {
      r.fail("column header has " + std::to_string(cols) + " columns but field 'd' says " +
             std::to_string(d + 1));
    }
  }

  ds.X.resize(n, d);
  ds.y.resize(n);
  for (long long i = 0; i < n; ++i) {
    if (!r.next()) r.fail("truncated file: expected " + std::to_string(n) + " rows (field 'n')");
    if (!r.line.empty() && r.line[0] == '#') {
      r.fail("found comment after " + std::to_string(i) + " rows; field 'n' says " + std::to_string(n));
    }
    const auto vals = parse_row(r, static_cast<std::size_t>(d) + 1, "data");
    for (long long j = 0; j < d; ++j) ds.X(i, j) = vals[static_cast<std::size_t>(j)];
    ds.y(i) = vals.back();
  }

  if (r.next()) {
    if (r.line != "# ground_truth") r.fail("unexpected content after data rows (field 'n' = " + std::to_string(n) + ")");
    if (m <= 0) r.fail("ground_truth block present but field 'm' is 0");
    Eigen::MatrixXd U(d, m);
    for (long long i = 0; i < d; ++i) {
      if (!r.next()) r.fail("truncated ground_truth block: expected " + std::to_string(d) + " rows");
      const auto vals = parse_row(r, static_cast<std::size_t>(m), "ground_truth");
      for (long long j = 0; j < m; ++j) U(i, j) = vals[static_cast<std::size_t>(j)];
    }
    ds.ground_truth = std::move(U);
    while (r.next()) {
      if (!r.line.empty()) r.fail("unexpected content after ground_truth block");
    }
  } else if (m > 0) {
    r.fail("missing ground_truth block although field 'm' = " + std::to_string(m));
  }

  if (ds.kind == DataKind::OrthonormalRows && !has_orthonormal_rows(ds.X)) {
    throw ParseError("rows are not orthonormal although kind=orthonormal_rows", 5, 1);
  }
  return ds;
}

}  // namespace edyn
