#include "doctest.h"

#include "graphtext/errors.hpp"
#include "graphtext/logistic.hpp"

#include <cmath>
#include <random>

using namespace graphtext;

namespace {

struct Blobs {
  Matrix x;
  std::vector<int> y;
};

Blobs gaussian_blobs(int per_class, int classes, double spread, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, spread);
  Blobs b;
  b.x.resize(per_class * classes, 3);
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      b.x(r, 0) = 3.0 * std::cos(2.0 * c) + normal(rng);
      b.x(r, 1) = 3.0 * std::sin(2.0 * c) + normal(rng);
      b.x(r, 2) = normal(rng);
      b.y.push_back(c);
    }
  }
  return b;
}

/// Gradient of 0.5 |W|^2 + C * sum_i -log p(y_i | x_i), written out directly.
double objective_gradient_norm(const LogisticRegression& m, const Matrix& x, const std::vector<int>& y, double c) {
  const Matrix& w = m.weights();
  const Index k = w.cols();
  Matrix gw = w;
  Eigen::RowVectorXd gb = Eigen::RowVectorXd::Zero(k);
  for (Index i = 0; i < x.rows(); ++i) {
    std::vector<double> z(static_cast<std::size_t>(k));
    double top = -1e300;
    for (Index j = 0; j < k; ++j) {
      z[j] = m.intercept()(j);
      for (Index f = 0; f < x.cols(); ++f) z[j] += x(i, f) * w(f, j);
      top = std::max(top, z[j]);
    }
    double total = 0.0;
    for (double& v : z) total += (v = std::exp(v - top));
    for (Index j = 0; j < k; ++j) {
      const double err = z[j] / total - (y[i] == j ? 1.0 : 0.0);
      gb(j) += c * err;
      for (Index f = 0; f < x.cols(); ++f) gw(f, j) += c * err * x(i, f);
    }
  }
  return std::sqrt(gw.squaredNorm() + gb.squaredNorm());
}

}  // namespace

TEST_SUITE("logistic") {

TEST_CASE("separable blobs are classified perfectly") {
  const Blobs b = gaussian_blobs(30, 3, 0.3, 1);
  LogisticRegression m;
  m.fit(b.x, b.y, 3);
  CHECK(m.converged());
  CHECK(m.predict(b.x) == b.y);
  const Matrix p = m.predict_proba(b.x);
  CHECK(p.rows() == 90);
  CHECK(p.cols() == 3);
  for (Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("fitted parameters are a stationary point of the objective") {
  for (double c : {0.1, 1.0, 10.0}) {
    const Blobs b = gaussian_blobs(20, 4, 1.5, 2);
    LogisticConfig cfg;
    cfg.inverse_l2 = c;
    LogisticRegression m(cfg);
    m.fit(b.x, b.y, 4);
    CHECK(objective_gradient_norm(m, b.x, b.y, c) < 1e-5);
  }
}

TEST_CASE("constant features predict the most frequent class") {
  Matrix x = Matrix::Ones(10, 2);
  std::vector<int> y{0, 1, 1, 1, 0, 1, 1, 0, 1, 1};
  LogisticRegression m;
  m.fit(x, y, 2);
  for (int p : m.predict(x)) CHECK(p == 1);
}

TEST_CASE("a single class collapses to that class") {
  const Matrix x = Matrix::Random(6, 3);
  LogisticRegression m;
  m.fit(x, std::vector<int>(6, 0), 1);
  for (int p : m.predict(x)) CHECK(p == 0);
}

TEST_CASE("fitting is deterministic") {
  const Blobs b = gaussian_blobs(15, 3, 1.0, 3);
  LogisticRegression a;
  LogisticRegression c;
  a.fit(b.x, b.y, 3);
  c.fit(b.x, b.y, 3);
  CHECK(a.weights() == c.weights());
  CHECK(a.intercept() == c.intercept());
}

TEST_CASE("invalid inputs are rejected") {
  LogisticRegression m;
  CHECK_THROWS_AS(m.fit(Matrix::Ones(3, 2), {0, 1}, 2), ConfigError);
  CHECK_THROWS_AS(m.fit(Matrix::Ones(2, 2), {0, 2}, 2), ConfigError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(m.fit(bad, {0, 1}, 2), NumericError);
  m.fit(Matrix::Ones(2, 2), {0, 1}, 2);
  CHECK_THROWS_AS(m.predict(Matrix::Ones(2, 3)), ConfigError);
}

}  // TEST_SUITE
