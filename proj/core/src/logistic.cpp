#include "graphtext/logistic.hpp"

#include "graphtext/errors.hpp"

#include <cmath>
#include <deque>

namespace graphtext {

namespace {

struct Problem {
  const Matrix& x;
  const std::vector<int>& y;
  Index d;
  Index k;
  double c;

  Index size() const { return d * k + k; }

  // Objective and gradient at theta = [vec(W) row-major | b].
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    Eigen::Map<const Matrix> w(theta.data(), d, k);
    Eigen::Map<const Eigen::RowVectorXd> b(theta.data() + d * k, k);
    Matrix z = x * w;
    z.rowwise() += b;
    double loss = 0.0;
    for (Index i = 0; i < z.rows(); ++i) {
      const double m = z.row(i).maxCoeff();
      z.row(i) = (z.row(i).array() - m).exp();
      const double s = z.row(i).sum();
      loss += std::log(s) + m - (std::log(z(i, y[i])) + m);
      z.row(i) /= s;
      z(i, y[i]) -= 1.0;
    }
    grad.resize(size());
    Eigen::Map<Matrix> gw(grad.data(), d, k);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + d * k, k);
    gw = w + c * (x.transpose() * z);
    gb = c * z.colwise().sum();
    return 0.5 * w.squaredNorm() + c * loss;
  }
};

}  // namespace

void LogisticRegression::fit(const Matrix& x, const std::vector<int>& y, int num_classes) {
  if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ConfigError("logistic regression needs one label per non-empty feature row");
  }
  if (num_classes < 1) throw ConfigError("logistic regression needs at least one class");
  for (int label : y) {
    if (label < 0 || label >= num_classes) throw ConfigError("label out of range");
  }
  if (!x.allFinite()) throw NumericError("logistic regression features are not finite");

  const Problem prob{x, y, x.cols(), num_classes, config_.inverse_l2};
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(prob.size());
  Eigen::VectorXd grad;
  double f = prob.eval(theta, grad);
  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  iterations_ = 0;
  grad_norm_ = grad.norm();
  while (grad_norm_ >= config_.grad_tol && iterations_ < config_.max_iters) {
    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, grad_norm_);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += s_hist[i] * (alpha[i] - beta);
    }
    Eigen::VectorXd dir = -q;
    double slope = grad.dot(dir);
    if (slope >= 0.0) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -grad / std::max(1.0, grad_norm_);
      slope = grad.dot(dir);
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    Eigen::VectorXd next;
    Eigen::VectorXd next_grad;
    double next_f = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      next = theta + step * dir;
      next_f = prob.eval(next, next_grad);
      if (std::isfinite(next_f) && next_f <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iterations_;
    if (!accepted) break;

    Eigen::VectorXd s = next - theta;
    Eigen::VectorXd yv = next_grad - grad;
    const double sy = s.dot(yv);
    theta = std::move(next);
    grad = std::move(next_grad);
    const double previous = f;
    f = next_f;
    grad_norm_ = grad.norm();
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config_.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (previous - f <= 0.0 && grad_norm_ >= config_.grad_tol) break;
  }

  weights_ = Eigen::Map<const Matrix>(theta.data(), prob.d, prob.k);
  intercept_ = Eigen::Map<const Eigen::RowVectorXd>(theta.data() + prob.d * prob.k, prob.k);
}

Matrix LogisticRegression::predict_proba(const Matrix& x) const {
  if (x.cols() != weights_.rows()) throw ConfigError("feature width does not match the fitted model");
  Matrix z = x * weights_;
  z.rowwise() += intercept_;
  for (Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

std::vector<int> LogisticRegression::predict(const Matrix& x) const {
  if (x.cols() != weights_.rows()) throw ConfigError("feature width does not match the fitted model");
  Matrix z = x * weights_;
  z.rowwise() += intercept_;
  std::vector<int> out(z.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < z.cols(); ++j) {
      if (z(i, j) > z(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace graphtext
