#pragma once

// Parameter containers shared by the encoders and adapters.

#include "graphtext/autodiff.hpp"

#include <string>

namespace graphtext {

/// Gaussian N(0, stddev^2) entries, rounded to float32.
Matrix normal_matrix(Index rows, Index cols, double stddev, Rng& rng);

/// Uniform U(-bound, bound) entries, rounded to float32.
Matrix uniform_matrix(Index rows, Index cols, double bound, Rng& rng);

struct LinearParams {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

  LinearParams() = default;
  /// Weights ~ N(0, 1/in), bias ~ U(-1/sqrt(in), 1/sqrt(in)).
  LinearParams(const std::string& name, Index in, Index out, Rng& rng);

  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }

  template <class Self>
  static ad::Var apply(Self& self, ad::Tape& t, const ad::Var& x) {
    return ad::linear(x, t.parameter(self.weight), t.parameter(self.bias));
  }
  void collect(ParameterRefs& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

struct LayerNormParams {
  Parameter gain;  // 1 x d, ones
  Parameter bias;  // 1 x d, zeros

  LayerNormParams() = default;
  LayerNormParams(const std::string& name, Index dim);

  template <class Self>
  static ad::Var apply(Self& self, ad::Tape& t, const ad::Var& x) {
    return ad::layer_norm(x, t.parameter(self.gain), t.parameter(self.bias));
  }
  void collect(ParameterRefs& out) {
    out.push_back(&gain);
    out.push_back(&bias);
  }
};

}  // namespace graphtext
