#pragma once

#include "graphtext/autodiff.hpp"

#include <vector>

namespace graphtext {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// AdamW with decoupled weight decay. After each step the parameter values
/// are rounded to float32 (the storage precision of checkpoints).
class AdamW {
 public:
  AdamW(ParameterRefs params, AdamWConfig config);

  void step();
  long steps() const { return steps_; }
  const ParameterRefs& params() const { return params_; }
  const AdamWConfig& config() const { return config_; }

 private:
  ParameterRefs params_;
  AdamWConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long steps_ = 0;
};

/// L2 norm of all gradients taken together.
double global_grad_norm(const ParameterRefs& params);

/// Rescales gradients so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(const ParameterRefs& params, double max_norm);

}  // namespace graphtext
