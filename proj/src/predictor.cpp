#include "edyn/predictor.hpp"

#include <algorithm>
#include <string>

#include "edyn/errors.hpp"

namespace edyn {

void RunningMean::add(const Eigen::VectorXd& x) {
  if (x.size() != mean_.size()) throw DimensionError("RunningMean: size mismatch");
  ++count_;
  mean_ += (x - mean_) / static_cast<double>(count_);
}

Eigen::MatrixXd ergodic_average(const Eigen::MatrixXd& raw) {
  if (raw.rows() == 0) throw InvalidParam("ergodic_average: empty prediction matrix");
  Eigen::MatrixXd avg(raw.rows(), raw.cols());
  RunningMean rm(raw.cols());
  for (Eigen::Index t = 0; t < raw.rows(); ++t) {
    rm.add(raw.row(t).transpose());
    avg.row(t) = rm.mean().transpose();
  }
  return avg;
}

double half_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  if (pred.size() != y.size()) throw DimensionError("half_mse: size mismatch");
  if (y.size() == 0) return 0.0;
  return 0.5 * (pred - y).squaredNorm() / static_cast<double>(y.size());
}

std::vector<double> test_loss_series(const Eigen::MatrixXd& raw, const Eigen::VectorXd& y_test,
                                     bool averaged) {
  if (raw.cols() != y_test.size()) {
    throw DimensionError("test_loss_series: " + std::to_string(raw.cols()) + " prediction columns vs " +
                         std::to_string(y_test.size()) + " labels");
  }
  const Eigen::MatrixXd& src = raw;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(raw.rows()));
  if (averaged) {
    const Eigen::MatrixXd avg = ergodic_average(src);
    for (Eigen::Index t = 0; t < avg.rows(); ++t) out.push_back(half_mse(avg.row(t).transpose(), y_test));
  } else {
    for (Eigen::Index t = 0; t < src.rows(); ++t) out.push_back(half_mse(src.row(t).transpose(), y_test));
  }
  return out;
}

double tail_variance(std::span<const double> series, std::size_t window) {
  if (series.empty()) return 0.0;
  const std::size_t w = std::min(window, series.size());
  const auto tail = series.last(w);
  double mean = 0.0;
  for (double v : tail) mean += v;
  mean /= static_cast<double>(w);
  double var = 0.0;
  for (double v : tail) var += (v - mean) * (v - mean);
  return var / static_cast<double>(w);
}

}  // namespace edyn
