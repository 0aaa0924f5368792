#pragma once

// Dataset synthesis for the quadratic-model experiments and its CSV
// persistence.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace edyn {

enum class DataKind { OrthonormalRows, Gaussian };

std::string_view to_string(DataKind k) noexcept;
/// Accepts "orthonormal_rows"/"orthogonal" and "gaussian".
DataKind data_kind_from_string(std::string_view s);

struct Dataset {
  Eigen::MatrixXd X;  ///< n x d
  Eigen::VectorXd y;  ///< n
  DataKind kind = DataKind::Gaussian;
  double noise_var = 0.0;
  std::uint64_t seed = 0;
  std::optional<Eigen::MatrixXd> ground_truth;  ///< d x m

  Eigen::Index n() const noexcept { return X.rows(); }
  Eigen::Index d() const noexcept { return X.cols(); }
  Eigen::Index m() const noexcept { return ground_truth ? ground_truth->cols() : 0; }
};

/// First n rows of a Haar-random d x d orthogonal matrix (Householder QR of a
/// seeded Gaussian matrix, column signs fixed by diag(R) > 0). Throws
/// InvalidShape if n > d.
Eigen::MatrixXd random_orthonormal_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

/// n x d matrix of i.i.d. standard normals, filled row-major from the stream.
Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

/// y_i = (1/(sqrt(m) d)) sum_j (X_i^T u*_j)^2 + eps_i, eps_i ~ N(0, noise_var).
Eigen::VectorXd generate_labels(const Eigen::MatrixXd& X, const Eigen::MatrixXd& u_star,
                                double noise_var, std::uint64_t seed);

/// y_i = gamma (X_i^T w*)^2 / 2 + c X_i^T w* + eps_i, for the phase-retrieval model.
Eigen::VectorXd generate_pr_labels(const Eigen::MatrixXd& X, const Eigen::VectorXd& w_star,
                                   double gamma, double c, double noise_var, std::uint64_t seed);

/// True when every row has unit norm within row_tol and the rows are pairwise
/// orthogonal within off_tol.
bool has_orthonormal_rows(const Eigen::MatrixXd& X, double row_tol = 1e-12, double off_tol = 1e-10);

/// True when X X^T is diagonal within off_tol.
bool has_orthogonal_rows(const Eigen::MatrixXd& X, double off_tol = 1e-10);

enum class LabelModel { QuadNet, PhaseRetrieval };

struct DatasetConfig {
  DataKind kind = DataKind::OrthonormalRows;
  LabelModel labels = LabelModel::QuadNet;
  Eigen::Index n = 80;
  Eigen::Index d = 100;
  Eigen::Index m = 25;  ///< ground-truth width (ignored for phase retrieval)
  double noise_var = 0.0;
  double gamma = 2.0;   ///< phase retrieval only
  double c = 0.0;       ///< phase retrieval only
  std::uint64_t seed = 0;
};

/// Training set: X from the configured kind, ground truth with standard-normal
/// entries (d x m for the network, d x 1 for phase retrieval), labels with
/// noise. All randomness is derived from cfg.seed.
Dataset make_dataset(const DatasetConfig& cfg);

/// Held-out Gaussian inputs labelled by the same ground truth and noise level.
Dataset make_test_set(const DatasetConfig& cfg, const Dataset& train, Eigen::Index n_test);

/// CSV with a '#'-prefixed header (kind, seed, noise_var, dimensions), a
/// column header, one row per sample, then an optional ground-truth block.
/// Numbers are written in shortest round-trip form.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

/// Inverse of save_dataset. Throws ParseError (with line/column) on malformed
/// input, and when an orthonormal-rows dataset fails the orthonormality check.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace edyn
