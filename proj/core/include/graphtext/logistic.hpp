#pragma once

#include "graphtext/autodiff.hpp"

#include <vector>

namespace graphtext {

struct LogisticConfig {
  /// Inverse regularization: objective = 0.5 * |W|^2 + C * sum of log-losses.
  /// The intercept is not penalized.
  double inverse_l2 = 1.0;
  int max_iters = 10000;
  double grad_tol = 1e-6;
  int history = 10;
};

/// Multinomial logistic regression fitted with L-BFGS from a zero start.
class LogisticRegression {
 public:
  explicit LogisticRegression(LogisticConfig config = {}) : config_(config) {}

  /// Labels must lie in [0, num_classes).
  void fit(const Matrix& x, const std::vector<int>& y, int num_classes);

  Matrix predict_proba(const Matrix& x) const;
  /// Arg-max class, ties to the lower id.
  std::vector<int> predict(const Matrix& x) const;

  const Matrix& weights() const { return weights_; }
  const Eigen::RowVectorXd& intercept() const { return intercept_; }
  int iterations() const { return iterations_; }
  double final_grad_norm() const { return grad_norm_; }
  bool converged() const { return grad_norm_ < config_.grad_tol; }

 private:
  LogisticConfig config_;
  Matrix weights_;  // features x classes
  Eigen::RowVectorXd intercept_;
  int iterations_ = 0;
  double grad_norm_ = 0.0;
};

}  // namespace graphtext
