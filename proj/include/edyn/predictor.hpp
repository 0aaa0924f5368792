#pragma once

// Ergodic trajectory averaging: predict with the running mean of the model
// outputs along the gradient-descent trajectory.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace edyn {

/// Online mean of equally sized vectors, updated as
/// m_t = m_{t-1} + (x_t - m_{t-1}) / t.
class RunningMean {
 public:
  explicit RunningMean(Eigen::Index size) : mean_(Eigen::VectorXd::Zero(size)) {}

  void add(const Eigen::VectorXd& x);
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  std::size_t count() const noexcept { return count_; }

 private:
  Eigen::VectorXd mean_;
  std::size_t count_ = 0;
};

/// Row t of the result is the mean of rows 0..t of `raw` (one row per step).
/// Throws InvalidParam on an empty matrix.
Eigen::MatrixXd ergodic_average(const Eigen::MatrixXd& raw);

/// (1 / 2n) sum (pred - y)^2.
double half_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y);

/// Per-row half_mse of the raw rows, or of their running means when
/// `averaged`. Throws DimensionError when the column count differs from y.
std::vector<double> test_loss_series(const Eigen::MatrixXd& raw, const Eigen::VectorXd& y_test,
                                     bool averaged);

/// Population variance of the last `window` values (all values if fewer).
double tail_variance(std::span<const double> series, std::size_t window);

}  // namespace edyn
