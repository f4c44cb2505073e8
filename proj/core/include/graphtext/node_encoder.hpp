#pragma once

#include "graphtext/autodiff.hpp"
#include "graphtext/graph.hpp"
#include "graphtext/nn.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace graphtext {

struct GatConfig {
  /// Width of the (zero-padded) input node features.
  Index in_dim = kDefaultFeatureRank;
  Index hidden = 64;
  int heads = 2;
  int layers = 3;
  Index out_dim = 64;
  double negative_slope = 0.2;

  void validate() const;
};

/// Per-layer, per-head attention weights aligned with the neighbor index
/// used for the forward pass (self-loops included).
struct GatAttention {
  NeighborIndex neighbors;
  std::vector<std::vector<std::vector<double>>> weights;  // [layer][head][slot]
};

/// Graph attention network. Hidden attention layers concatenate their heads
/// and are followed by ELU, a linear layer and layer normalization; the
/// output layer averages its heads.
class GatEncoder {
 public:
  struct AttentionLayer {
    Parameter weight;   // in x heads*F
    Parameter att_src;  // heads x F
    Parameter att_dst;  // heads x F
    Parameter bias;     // 1 x (concat ? heads*F : F)
    bool concat = true;
  };
  struct Mixer {
    LinearParams linear;
    LayerNormParams norm;
  };

  GatEncoder() = default;
  GatEncoder(GatConfig config, Rng& rng);

  const GatConfig& config() const { return config_; }

  /// Node embeddings |V| x out_dim. Self-loops are always added; for directed
  /// graphs messages flow src -> dst.
  ad::Var forward(ad::Tape& tape, const Graph& graph, const NodeFeatures& features,
                  GatAttention* attention = nullptr);
  ad::Var forward(ad::Tape& tape, const Graph& graph, const NodeFeatures& features,
                  GatAttention* attention = nullptr) const;

  ParameterRefs parameters();

 private:
  template <class Self>
  static ad::Var forward_impl(Self& self, ad::Tape& tape, const Graph& graph, const NodeFeatures& features,
                              GatAttention* attention);

  GatConfig config_;
  std::vector<AttentionLayer> layers_;
  std::vector<Mixer> mixers_;
};

/// Features padded with zero columns to `width`; ConfigError when wider.
Matrix pad_features(const NodeFeatures& features, Index width);

/// Eval-mode node embeddings.
Matrix encode_nodes(const GatEncoder& encoder, const Graph& graph, const NodeFeatures& features);

double sigmoid(double x);

/// sigmoid(emb_i . emb_j) for every pair.
std::vector<double> inner_product_decode(const Matrix& node_embs, const std::vector<std::pair<Index, Index>>& pairs);

struct GaeConfig {
  GatConfig gat;
  int max_epochs = 200;
  double learning_rate = 0.01;
  /// Applied to the output embeddings during training.
  double dropout = 0.3;
  int patience = 5;
  double min_delta = 0.001;
  std::uint64_t seed = 0;
};

struct GaeResult {
  GatEncoder encoder;  // parameters of the best validation epoch
  std::vector<double> train_loss;
  std::vector<double> val_auc;
  int best_epoch = -1;
};

/// Graph-autoencoder training: binary cross-entropy of inner-product decoding
/// over all edges and an equal number of freshly sampled non-edges per epoch;
/// early stopping on validation AUC. Without a usable validation graph the
/// training graph is scored with fixed negatives instead.
GaeResult train_gae_baseline(const Graph& graph, const NodeFeatures& features, const GaeConfig& config,
                             const Graph* val_graph = nullptr, const NodeFeatures* val_features = nullptr);

}  // namespace graphtext
