#pragma once

// Gradient descent on the two quadratic regression models whose residuals
// follow the cubic map exactly on orthogonal data: generalised phase
// retrieval g(w; X) = gamma (X^T w)^2 / 2 + c X^T w, and the two-layer
// network g(U; X) = ||U^T X||^2 / (sqrt(m) d) with fixed outer weights.
// Both use the mean loss (1/2n) sum (g - y)^2.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace edyn {

struct PhaseRetrievalSpec {
  double gamma = 2.0;
  Eigen::VectorXd c;  ///< per-sample linear coefficient
  Eigen::MatrixXd X;  ///< n x d
  Eigen::VectorXd y;

  static PhaseRetrievalSpec with_scalar_c(double gamma, double c, Eigen::MatrixXd X, Eigen::VectorXd y);

  Eigen::Index n() const noexcept { return X.rows(); }
  Eigen::Index d() const noexcept { return X.cols(); }
  /// Throws InvalidParam for gamma == 0 and DimensionError for mismatched sizes.
  void validate() const;
};

struct QuadNetSpec {
  Eigen::MatrixXd X;  ///< n x d
  Eigen::VectorXd y;
  Eigen::Index m = 1;

  Eigen::Index n() const noexcept { return X.rows(); }
  Eigen::Index d() const noexcept { return X.cols(); }
  void validate() const;
};

/// X X^T diagonal within tol.
bool is_row_orthogonal(const Eigen::MatrixXd& X, double tol = 1e-10);

/// Per-sample cubic-map coordinates: z_i = kappa_i e_i with parameter a_i.
struct MapCoordinates {
  Eigen::VectorXd a;
  Eigen::VectorXd z;
  Eigen::VectorXd kappa;
  std::vector<Eigen::Index> nonpositive;  ///< samples with a_i <= 0, outside the theory
};

// --- phase retrieval -------------------------------------------------------

double pr_forward(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w, Eigen::Index i);
/// Model outputs on arbitrary inputs, with c given per row.
Eigen::VectorXd pr_predict(double gamma, const Eigen::VectorXd& c, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& w);
Eigen::VectorXd pr_residuals(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w);
double pr_loss(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w);
/// (1/n) sum e_i alpha_i X_i with alpha_i = c_i + gamma X_i^T w.
Eigen::VectorXd pr_gradient(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w);
/// w - eta * pr_gradient. With n = 1 the mean is the single term, which is
/// the single-sample update without a 1/n factor.
Eigen::VectorXd gd_step_pr(const PhaseRetrievalSpec& spec, const Eigen::VectorXd& w, double eta);

/// kappa_i = eta gamma ||X_i||^2 / n, beta_i = y_i + c_i^2 / (2 gamma),
/// a_i = beta_i kappa_i, z_i = kappa_i e_i. When require_orthogonal is set and
/// n > 1, throws OrthogonalityError unless X X^T is diagonal.
MapCoordinates derive_map_params_pr(const PhaseRetrievalSpec& spec, double eta, const Eigen::VectorXd& w,
                                    bool require_orthogonal = true);

// --- two-layer quadratic network -------------------------------------------

double qn_forward(const QuadNetSpec& spec, const Eigen::MatrixXd& U, Eigen::Index j);
Eigen::VectorXd qn_predict(const Eigen::MatrixXd& X, const Eigen::MatrixXd& U);
Eigen::VectorXd qn_residuals(const QuadNetSpec& spec, const Eigen::MatrixXd& U);
double qn_loss(const QuadNetSpec& spec, const Eigen::MatrixXd& U);
/// (2 / (sqrt(m) d n)) X^T diag(e) X U.
Eigen::MatrixXd qn_gradient(const QuadNetSpec& spec, const Eigen::MatrixXd& U);
/// (I - A) U with A = (2 eta / (sqrt(m) d n)) sum_j e_j X_j X_j^T, applied as
/// a rank-n update.
Eigen::MatrixXd gd_step_qn(const QuadNetSpec& spec, const Eigen::MatrixXd& U, double eta);

/// kappa_i = 2 eta ||X_i||^2 / (sqrt(m) d n), a_i = kappa_i y_i, z_i = kappa_i e_i.
MapCoordinates derive_map_params_qn(const QuadNetSpec& spec, double eta, const Eigen::MatrixXd& U,
                                    bool require_orthogonal = true);

// --- shared -----------------------------------------------------------------

/// (1/2n) sum z_i^2 / kappa_i^2.
double loss_from_z(const Eigen::VectorXd& z, const Eigen::VectorXd& kappa);

/// max_i (3 z_i + 2 a_i) / eta.
double sharpness_formula(const Eigen::VectorXd& z, const Eigen::VectorXd& a, double eta);

/// eta with max_i a_i(eta) = target; a_i is linear in eta. Throws
/// NoPositiveLabelError when no sample has a positive coefficient.
double eta_for_target_amax(const PhaseRetrievalSpec& spec, double target);
double eta_for_target_amax(const QuadNetSpec& spec, double target);

/// Largest eta in the bracket for which `diverges` is false, assuming
/// divergence is monotone in eta. hi is doubled (at most 60 times) until it
/// diverges; then bisection runs until hi <= 1.01 lo, and lo is returned.
/// Throws BracketError if lo diverges or no divergent hi is found.
double tune_eta_max(const std::function<bool(double)>& diverges, double lo, double hi);

/// The step-size grid (i+1)/5 * eta_max, i = 0..4.
std::vector<double> eta_fractions(double eta_max);

using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

GradientFn pr_gradient_fn(PhaseRetrievalSpec spec);
/// Parameters are vec(U), column-major.
GradientFn qn_gradient_fn(QuadNetSpec spec);

struct OracleConfig {
  double fd_step = 0.0;  ///< 0 selects 1e-5 (1 + ||params||_inf)
  std::size_t power_iters = 20000;
  double rel_tol = 1e-11;  ///< stop when the Rayleigh quotient moves less than this, relatively
  std::uint64_t seed = 0x5eed;
};

/// Largest eigenvalue of the loss Hessian by power iteration on central
/// finite-difference Hessian-vector products of `gradient`. A negative
/// dominant eigenvalue triggers a second, shifted run. Throws
/// NonConvergedError if the Rayleigh quotient does not settle.
double hessian_sharpness_oracle(const GradientFn& gradient, const Eigen::VectorXd& params,
                                const OracleConfig& cfg = {});

// --- training -----------------------------------------------------------------

inline constexpr double kLossDivergeThreshold = 1e12;

struct RecordConfig {
  std::optional<Eigen::MatrixXd> test_X;
  std::optional<Eigen::VectorXd> test_y;
  std::optional<Eigen::VectorXd> test_c;  ///< phase retrieval only; defaults to spec.c(0)
  std::size_t stride = 1;                 ///< z snapshots every `stride` steps
  std::size_t avg_burn_in = 0;            ///< iterates excluded from the running mean
  bool require_orthogonal = false;        ///< throw instead of flagging non-orthogonal data
};

struct TrainTrace {
  double eta = 0.0;
  bool orthogonal = false;
  std::vector<double> loss;       ///< loss after t steps, t = 0..steps
  std::vector<double> sharpness;  ///< sharpness_formula after t steps
  std::vector<std::size_t> z_steps;
  std::vector<Eigen::VectorXd> z;
  Eigen::VectorXd a;
  Eigen::VectorXd kappa;
  std::vector<Eigen::Index> nonpositive;
  std::vector<double> test_loss_raw;  ///< aligned with loss; empty without a test set
  std::vector<double> test_loss_avg;
  bool diverged = false;
  std::optional<std::size_t> divergence_step;
  Eigen::VectorXd final_w;  ///< phase retrieval
  Eigen::MatrixXd final_U;  ///< network
};

/// Coordinate-wise N(0, scale^2) initialisation.
Eigen::VectorXd init_pr_weights(Eigen::Index d, std::uint64_t seed, double scale = 0.1);
Eigen::MatrixXd init_qn_weights(Eigen::Index d, Eigen::Index m, std::uint64_t seed, double scale = 1.0);

/// Runs `steps` GD iterations, stopping early when the loss exceeds
/// kLossDivergeThreshold or stops being finite.
TrainTrace train_pr(const PhaseRetrievalSpec& spec, double eta, std::size_t steps, const Eigen::VectorXd& w0,
                    const RecordConfig& rec = {});
TrainTrace train_qn(const QuadNetSpec& spec, double eta, std::size_t steps, const Eigen::MatrixXd& U0,
                    const RecordConfig& rec = {});

}  // namespace edyn
