#include "edyn/quad_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edyn/errors.hpp"
#include "edyn/predictor.hpp"
#include "edyn/rng.hpp"

namespace edyn {

namespace {

void check_eta(double eta) {
  if (!(std::isfinite(eta) && eta > 0.0)) throw InvalidParam("eta must be finite and > 0");
}

void check_index(Eigen::Index i, Eigen::Index n) {
  if (i < 0 || i >= n) throw DimensionError("sample index " + std::to_string(i) + " out of range");
}

double qn_scale(const QuadNetSpec& spec) {
  return 1.0 / (std::sqrt(static_cast<double>(spec.m)) * static_cast<double>(spec.d()));
}

}  // namespace

PhaseRetrievalSpec PhaseRetrievalSpec::with_scalar_c(double gamma, double c, Eigen::MatrixXd X,
                                                     Eigen::VectorXd y) {
  PhaseRetrievalSpec s;
  s.gamma = gamma;
  s.c = Eigen::VectorXd::Constant(X.rows(), c);
  s.X = std::move(X);
  s.y = std::move(y);
  return s;
}

void PhaseRetrievalSpec::validate() const {
  if (!(std::isfinite(gamma) && gamma != 0.0)) throw InvalidParam("gamma must be finite and non-zero");
  if (X.rows() == 0 || X.cols() == 0) throw DimensionError("X must be non-empty");
  if (y.size() != X.rows()) throw DimensionError("y must have one entry per row of X");
  if (c.size() != X.rows()) throw DimensionError("c must have one entry per row of X");
}

void QuadNetSpec::validate() const {
  if (m < 1) throw InvalidParam("m must be >= 1");
  if (X.rows() == 0 || X.cols() == 0) throw DimensionError("X must be non-empty");
  if (y.size() != X.rows()) throw DimensionError("y must have one entry per row of X");
}

bool is_row_orthogonal(const Eigen::MatrixXd& X, double tol) {
  const Eigen::MatrixXd G = X * X.transpose();
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < G.cols(); ++j) {
      if (std::abs(G(i, j)) > tol) return false;
    }
  }
  return true;
}

// --- phase retrieval -------------------------------------------------------

double pr_forward(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w, Eigen::Index i) {
  if (w.size() != spec.d()) throw DimensionError("w must have d entries");
  check_index(i, spec.n());
  const double p = spec.X.row(i).dot(w);
  return 0.5 * spec.gamma * p * p + spec.c(i) * p;
}

Eigen::VectorXd pr_predict(double gamma, const Eigen::VectorXd& c, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& w) {
  if (w.size() != X.cols()) throw DimensionError("w must have d entries");
  if (c.size() != X.rows()) throw DimensionError("c must have one entry per row of X");
  const Eigen::ArrayXd p = (X * w).array();
  return (0.5 * gamma * p.square() + c.array() * p).matrix();
}

Eigen::VectorXd pr_residuals(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w) {
  spec.validate();
  return pr_predict(spec.gamma, spec.c, spec.X, w) - spec.y;
}

double pr_loss(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w) {
  return 0.5 * pr_residuals(spec, w).squaredNorm() / static_cast<double>(spec.n());
}

Eigen::VectorXd pr_gradient(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w) {
  const Eigen::VectorXd e = pr_residuals(spec, w);
  const Eigen::VectorXd alpha = spec.c + spec.gamma * (spec.X * w);
  const Eigen::VectorXd coef = e.cwiseProduct(alpha) / static_cast<double>(spec.n());
  return spec.X.transpose() * coef;
}

Eigen::VectorXd gd_step_pr(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w, double eta) {
  check_eta(eta);
  return w - eta * pr_gradient(spec, w);
}

MapCoordinates derive_map_params_pr(const PhaseRetrievalSpec& spec, double eta, const Eigen::VectorXd& w,
                                    bool require_orthogonal) {
  check_eta(eta);
  spec.validate();
  if (require_orthogonal && spec.n() > 1 && !is_row_orthogonal(spec.X)) {
    throw OrthogonalityError("phase retrieval map coordinates need X X^T diagonal");
  }
  const double n = static_cast<double>(spec.n());
  MapCoordinates mc;
  mc.kappa = (eta * spec.gamma / n) * spec.X.rowwise().squaredNorm();
  const Eigen::VectorXd beta = spec.y + spec.c.cwiseAbs2() / (2.0 * spec.gamma);
  mc.a = beta.cwiseProduct(mc.kappa);
  mc.z = mc.kappa.cwiseProduct(pr_residuals(spec, w));
  for (Eigen::Index i = 0; i < mc.a.size(); ++i) {
    if (!(mc.a(i) > 0.0)) mc.nonpositive.push_back(i);
  }
  return mc;
}

// --- network ---------------------------------------------------------------

double qn_forward(const QuadNetSpec& spec, const Eigen::MatrixXd& U, Eigen::Index j) {
  if (U.rows() != spec.d() || U.cols() != spec.m) throw DimensionError("U must be d x m");
  check_index(j, spec.n());
  return qn_scale(spec) * (spec.X.row(j) * U).squaredNorm();
}

Eigen::VectorXd qn_predict(const Eigen::MatrixXd& X, const Eigen::MatrixXd& U) {
  if (U.rows() != X.cols()) throw DimensionError("U must have d rows");
  const double scale = 1.0 / (std::sqrt(static_cast<double>(U.cols())) * static_cast<double>(X.cols()));
  return scale * (X * U).rowwise().squaredNorm();
}

Eigen::VectorXd qn_residuals(const QuadNetSpec& spec, const Eigen::MatrixXd& U) {
  spec.validate();
  if (U.rows() != spec.d() || U.cols() != spec.m) throw DimensionError("U must be d x m");
  return qn_predict(spec.X, U) - spec.y;
}

double qn_loss(const QuadNetSpec& spec, const Eigen::MatrixXd& U) {
  return 0.5 * qn_residuals(spec, U).squaredNorm() / static_cast<double>(spec.n());
}

Eigen::MatrixXd qn_gradient(const QuadNetSpec& spec, const Eigen::MatrixXd& U) {
  const Eigen::VectorXd e = qn_residuals(spec, U);
  const double k = 2.0 * qn_scale(spec) / static_cast<double>(spec.n());
  return k * (spec.X.transpose() * (e.asDiagonal() * (spec.X * U)));
}

Eigen::MatrixXd gd_step_qn(const QuadNetSpec& spec, const Eigen::MatrixXd& U, double eta) {
  check_eta(eta);
  return U - eta * qn_gradient(spec, U);
}

MapCoordinates derive_map_params_qn(const QuadNetSpec& spec, double eta, const Eigen::MatrixXd& U,
                                    bool require_orthogonal) {
  check_eta(eta);
  spec.validate();
  if (require_orthogonal && !is_row_orthogonal(spec.X)) {
    throw OrthogonalityError("network map coordinates need X X^T diagonal");
  }
  const double k = 2.0 * eta * qn_scale(spec) / static_cast<double>(spec.n());
  MapCoordinates mc;
  mc.kappa = k * spec.X.rowwise().squaredNorm();
  mc.a = mc.kappa.cwiseProduct(spec.y);
  mc.z = mc.kappa.cwiseProduct(qn_residuals(spec, U));
  for (Eigen::Index i = 0; i < mc.a.size(); ++i) {
    if (!(mc.a(i) > 0.0)) mc.nonpositive.push_back(i);
  }
  return mc;
}

// --- shared ----------------------------------------------------------------

double loss_from_z(const Eigen::VectorXd& z, const Eigen::VectorXd& kappa) {
  if (z.size() != kappa.size()) throw DimensionError("z and kappa differ in size");
  if (z.size() == 0) return 0.0;
  return 0.5 * z.cwiseQuotient(kappa).squaredNorm() / static_cast<double>(z.size());
}

double sharpness_formula(const Eigen::VectorXd& z, const Eigen::VectorXd& a, double eta) {
  check_eta(eta);
  if (z.size() != a.size() || z.size() == 0) throw DimensionError("z and a must be non-empty and equal in size");
  return (3.0 * z + 2.0 * a).maxCoeff() / eta;
}

namespace {

double eta_from_coefficients(const Eigen::VectorXd& coef, double target) {
  if (!(std::isfinite(target) && target > 0.0)) throw InvalidParam("target must be > 0");
  const double best = coef.size() ? coef.maxCoeff() : 0.0;
  if (!(best > 0.0)) throw NoPositiveLabelError("no sample has a positive map coefficient");
  return target / best;
}

}  // namespace

double eta_for_target_amax(const PhaseRetrievalSpec& spec, double target) {
  return eta_from_coefficients(derive_map_params_pr(spec, 1.0, Eigen::VectorXd::Zero(spec.d()), false).a, target);
}

double eta_for_target_amax(const QuadNetSpec& spec, double target) {
  return eta_from_coefficients(derive_map_params_qn(spec, 1.0, Eigen::MatrixXd::Zero(spec.d(), spec.m), false).a,
                               target);
}

double tune_eta_max(const std::function<bool(double)>& diverges, double lo, double hi) {
  if (!(lo > 0.0 && lo < hi && std::isfinite(hi))) throw InvalidParam("tune_eta_max needs 0 < lo < hi");
  if (diverges(lo)) throw BracketError("training diverges at the lower end eta = " + num(lo));
  int doublings = 0;
  while (!diverges(hi)) {
    if (++doublings > 60) throw BracketError("no divergent step size found after 60 doublings");
    lo = hi;
    hi *= 2.0;
  }
  while (hi > 1.01 * lo) {
    const double mid = 0.5 * (lo + hi);
    if (diverges(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

std::vector<double> eta_fractions(double eta_max) {
  std::vector<double> out;
  for (int i = 0; i < 5; ++i) out.push_back(static_cast<double>(i + 1) / 5.0 * eta_max);
  return out;
}

GradientFn pr_gradient_fn(PhaseRetrievalSpec spec) {
  spec.validate();
  return [spec = std::move(spec)](const Eigen::VectorXd& w) { return pr_gradient(spec, w); };
}

GradientFn qn_gradient_fn(QuadNetSpec spec) {
  spec.validate();
  return [spec = std::move(spec)](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
    if (theta.size() != spec.d() * spec.m) throw DimensionError("parameter vector must have d*m entries");
    const Eigen::Map<const Eigen::MatrixXd> U(theta.data(), spec.d(), spec.m);
    const Eigen::MatrixXd G = qn_gradient(spec, U);
    return Eigen::Map<const Eigen::VectorXd>(G.data(), G.size());
  };
}

double hessian_sharpness_oracle(const GradientFn& gradient, const Eigen::VectorXd& params,
                                const OracleConfig& cfg) {
  if (cfg.fd_step < 0.0 || !std::isfinite(cfg.fd_step)) throw InvalidParam("fd_step must be > 0");
  if (params.size() == 0) throw DimensionError("empty parameter vector");
  const double h = cfg.fd_step > 0.0 ? cfg.fd_step : 1e-5 * (1.0 + params.lpNorm<Eigen::Infinity>());

  auto hvp = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return (gradient(params + h * v) - gradient(params - h * v)) / (2.0 * h);
  };

  // Power iteration on H - shift I; returns its dominant Rayleigh quotient.
  auto power = [&](double shift) -> double {
    Rng rng(cfg.seed);
    Eigen::VectorXd v(params.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    v.normalize();
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < cfg.power_iters; ++k) {
      const Eigen::VectorXd w = hvp(v) - shift * v;
      const double rq = v.dot(w);
      const double nw = w.norm();
      if (nw == 0.0) return 0.0;
      if (std::abs(rq - prev) <= cfg.rel_tol * std::max(std::abs(rq), 1e-300)) return rq;
      prev = rq;
      v = w / nw;
    }
    throw NonConvergedError("power iteration did not settle within " + std::to_string(cfg.power_iters) +
                            " iterations");
  };

  const double dominant = power(0.0);
  if (dominant >= 0.0) return dominant;
  return power(dominant) + dominant;
}

// --- training --------------------------------------------------------------

Eigen::VectorXd init_pr_weights(Eigen::Index d, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Eigen::VectorXd w(d);
  for (Eigen::Index i = 0; i < d; ++i) w(i) = scale * rng.normal();
  return w;
}

Eigen::MatrixXd init_qn_weights(Eigen::Index d, Eigen::Index m, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Eigen::MatrixXd U(d, m);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) U(i, j) = scale * rng.normal();
  }
  return U;
}

namespace {

/// Shared per-step bookkeeping for both trainers.
class Recorder {
 public:
  Recorder(TrainTrace& trace, const RecordConfig& rec, Eigen::Index n_test)
      : trace_(trace), rec_(rec) {
    if (rec_.stride == 0) throw InvalidParam("record stride must be >= 1");
    if (rec_.test_X.has_value() != rec_.test_y.has_value()) {
      throw InvalidParam("test_X and test_y must be given together");
    }
    if (rec_.test_X) {
      if (rec_.test_y->size() != n_test) throw DimensionError("test_y must match test_X rows");
      mean_.emplace(n_test);
    }
  }

  bool has_test() const noexcept { return mean_.has_value(); }

  /// Returns false when the run has diverged and must stop.
  bool record(std::size_t t, double loss, const MapCoordinates& mc, double eta,
              const Eigen::VectorXd* test_pred) {
    trace_.loss.push_back(loss);
    if (!std::isfinite(loss) || loss > kLossDivergeThreshold) {
      trace_.diverged = true;
      trace_.divergence_step = t;
      trace_.sharpness.push_back(std::numeric_limits<double>::quiet_NaN());
      if (test_pred) {
        trace_.test_loss_raw.push_back(std::numeric_limits<double>::quiet_NaN());
        trace_.test_loss_avg.push_back(std::numeric_limits<double>::quiet_NaN());
      }
      return false;
    }
    trace_.sharpness.push_back(sharpness_formula(mc.z, mc.a, eta));
    if (t % rec_.stride == 0) {
      trace_.z_steps.push_back(t);
      trace_.z.push_back(mc.z);
    }
    if (test_pred) {
      const double raw = half_mse(*test_pred, *rec_.test_y);
      if (t >= 1 && t > rec_.avg_burn_in) mean_->add(*test_pred);
      trace_.test_loss_raw.push_back(raw);
      trace_.test_loss_avg.push_back(mean_->count() ? half_mse(mean_->mean(), *rec_.test_y) : raw);
    }
    return true;
  }

 private:
  TrainTrace& trace_;
  const RecordConfig& rec_;
  std::optional<RunningMean> mean_;
};

void start_trace(TrainTrace& tr, double eta, bool orthogonal, const MapCoordinates& mc, std::size_t steps) {
  tr.eta = eta;
  tr.orthogonal = orthogonal;
  tr.a = mc.a;
  tr.kappa = mc.kappa;
  tr.nonpositive = mc.nonpositive;
  tr.loss.reserve(steps + 1);
  tr.sharpness.reserve(steps + 1);
}

}  // namespace

TrainTrace train_pr(const PhaseRetrievalSpec& spec, double eta, std::size_t steps, const Eigen::VectorXd& w0,
                    const RecordConfig& rec) {
  spec.validate();
  check_eta(eta);
  if (w0.size() != spec.d()) throw DimensionError("w0 must have d entries");
  const bool orthogonal = spec.n() == 1 || is_row_orthogonal(spec.X);
  if (rec.require_orthogonal && !orthogonal) throw OrthogonalityError("training data rows are not orthogonal");

  Eigen::VectorXd test_c;
  if (rec.test_X) {
    if (rec.test_X->cols() != spec.d()) throw DimensionError("test_X must have d columns");
    if (rec.test_c) {
      test_c = *rec.test_c;
    } else {
      if ((spec.c.array() != spec.c(0)).any()) throw InvalidParam("per-sample c needs an explicit test_c");
      test_c = Eigen::VectorXd::Constant(rec.test_X->rows(), spec.c(0));
    }
  }

  TrainTrace tr;
  Recorder recorder(tr, rec, rec.test_X ? rec.test_X->rows() : 0);
  Eigen::VectorXd w = w0;
  for (std::size_t t = 0;; ++t) {
    const MapCoordinates mc = derive_map_params_pr(spec, eta, w, false);
    if (t == 0) start_trace(tr, eta, orthogonal, mc, steps);
    const double loss = pr_loss(spec, w);
    std::optional<Eigen::VectorXd> pred;
    if (recorder.has_test()) pred = pr_predict(spec.gamma, test_c, *rec.test_X, w);
    if (!recorder.record(t, loss, mc, eta, pred ? &*pred : nullptr) || t == steps) break;
    w = gd_step_pr(spec, w, eta);
  }
  tr.final_w = std::move(w);
  return tr;
}

TrainTrace train_qn(const QuadNetSpec& spec, double eta, std::size_t steps, const Eigen::MatrixXd& U0,
                    const RecordConfig& rec) {
  spec.validate();
  check_eta(eta);
  if (U0.rows() != spec.d() || U0.cols() != spec.m) throw DimensionError("U0 must be d x m");
  const bool orthogonal = is_row_orthogonal(spec.X);
  if (rec.require_orthogonal && !orthogonal) throw OrthogonalityError("training data rows are not orthogonal");
  if (rec.test_X && rec.test_X->cols() != spec.d()) throw DimensionError("test_X must have d columns");

  TrainTrace tr;
  Recorder recorder(tr, rec, rec.test_X ? rec.test_X->rows() : 0);
  Eigen::MatrixXd U = U0;
  for (std::size_t t = 0;; ++t) {
    const MapCoordinates mc = derive_map_params_qn(spec, eta, U, false);
    if (t == 0) start_trace(tr, eta, orthogonal, mc, steps);
    const double loss = qn_loss(spec, U);
    std::optional<Eigen::VectorXd> pred;
    if (recorder.has_test()) pred = qn_predict(*rec.test_X, U);
    if (!recorder.record(t, loss, mc, eta, pred ? &*pred : nullptr) || t == steps) break;
    U = gd_step_qn(spec, U, eta);
  }
  tr.final_U = std::move(U);
  return tr;
}

}  // namespace edyn
