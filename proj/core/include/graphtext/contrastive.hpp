#pragma once

#include "graphtext/autodiff.hpp"
#include "graphtext/nn.hpp"
#include "graphtext/similarity.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace graphtext {

struct AdapterConfig {
  Index in_dim = 64;
  Index out_dim = 64;
  double dropout = 0.3;
};

/// linear -> GeLU -> linear -> layer norm -> dropout, mapping an encoder's
/// output into the shared embedding space.
class Adapter {
 public:
  Adapter() = default;
  Adapter(const std::string& name, AdapterConfig config, Rng& rng);

  const AdapterConfig& config() const { return config_; }

  ad::Var forward(ad::Tape& tape, const ad::Var& x, bool train, Rng& rng);
  ad::Var forward(ad::Tape& tape, const ad::Var& x, bool train, Rng& rng) const;

  ParameterRefs parameters();

 private:
  template <class Self>
  static ad::Var forward_impl(Self& self, ad::Tape& tape, const ad::Var& x, bool train, Rng& rng);

  AdapterConfig config_;
  LinearParams fc1_;
  LinearParams fc2_;
  LayerNormParams norm_;
};

/// Eval-mode adapter output.
Matrix adapt(const Adapter& adapter, const Matrix& embeddings);

inline const double kLogTemperatureBound = std::log(100.0);

/// Trainable log-temperature; logits are scaled by exp(tau).
struct Temperature {
  Parameter log_tau;
  double lo = -kLogTemperatureBound;
  double hi = kLogTemperatureBound;

  explicit Temperature(double init = 3.5);

  double value() const { return log_tau.value(0, 0); }
  /// Clamps tau into [lo, hi].
  void project();
};

/// C[i][j] = cos(text_i, node_j) * exp(tau). Rows are texts, columns nodes.
ad::Var cosine_logits(const ad::Var& text_embs, const ad::Var& node_embs, const ad::Var& log_tau);
Matrix cosine_logit_matrix(const Matrix& text_embs, const Matrix& node_embs, double log_tau);

/// Row-stochastic targets for the text->node rows (text) and node->text
/// columns (node) of the logit matrix.
struct TargetDistributions {
  Matrix text;
  Matrix node;
  double alpha = 0.0;
};

/// Row i = (1 - alpha) * onehot(i) + alpha * similarity row i; degenerate
/// similarity rows fall back to the pure one-hot row. Similarity rows may be
/// null only when alpha == 0.
TargetDistributions target_distributions(const std::vector<Index>& batch_nodes, double alpha,
                                         const BatchSimilarityRows* text_rows, const BatchSimilarityRows* node_rows);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // dLoss/dC
};

/// (1 / 2N) * sum_i [ H(softmax(C[i,:]), D_T[i]) + H(softmax(C[:,i]), D_G[i]) ]
/// with H(p, q) = -sum_j q_j log p_j.
LossAndGrad contrastive_loss_and_grad(const Matrix& logits, const TargetDistributions& targets);
double contrastive_loss(const Matrix& logits, const TargetDistributions& targets);
ad::Var contrastive_loss(const ad::Var& logits, const TargetDistributions& targets);

}  // namespace graphtext
