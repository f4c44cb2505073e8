#include "graphtext/nn.hpp"

#include <cmath>
#include <random>

namespace graphtext {

Matrix normal_matrix(Index rows, Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  round_to_float(m);
  return m;
}

Matrix uniform_matrix(Index rows, Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> uniform(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng);
  round_to_float(m);
  return m;
}

LinearParams::LinearParams(const std::string& name, Index in, Index out, Rng& rng)
    : weight(name + ".weight", normal_matrix(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
      bias(name + ".bias", uniform_matrix(1, out, 1.0 / std::sqrt(static_cast<double>(in)), rng)) {}

LayerNormParams::LayerNormParams(const std::string& name, Index dim)
    : gain(name + ".gain", Matrix::Ones(1, dim)), bias(name + ".bias", Matrix::Zero(1, dim)) {}

}  // namespace graphtext
