#pragma once

#include "graphtext/contrastive.hpp"
#include "graphtext/datasets.hpp"
#include "graphtext/graph.hpp"
#include "graphtext/node_encoder.hpp"
#include "graphtext/similarity.hpp"
#include "graphtext/text_encoder.hpp"
#include "graphtext/tokenizer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace graphtext {

struct TrainConfig {
  int batch_size = 36;
  double learning_rate = 1e-4;
  int max_epochs = 10;
  double grad_clip_norm = 1.0;
  double alpha = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.0;
  double dropout = 0.3;
  std::uint64_t seed = 0;
  double tau_init = 3.5;
  bool directed = false;
  /// Width of the shared embedding space.
  Index embedding_dim = 64;
  SimilarityKind similarity = SimilarityKind::MutualNeighborCosine;

  TokenizerMode tokenizer_mode = TokenizerMode::Whitespace;
  int min_token_count = 2;
  int max_vocab = 8192;
  /// vocab_size is filled in from the tokenizer.
  TextEncoderConfig text;
  GatConfig gat;

  /// Eigen worker threads; results are bit-reproducible only with 1.
  int threads = 1;

  void validate() const;
};

/// Node-unique minibatch: texts[i] belongs to nodes[i].
struct Batch {
  std::vector<Index> nodes;
  std::vector<Index> texts;
};

struct EpochBatches {
  std::vector<Batch> batches;
  std::size_t dropped = 0;
};

/// Seeded node shuffle, round-robin interleaving of every node's shuffled
/// texts, consecutive slices of batch_size, then removal of repeated nodes
/// within each slice. `pairs` holds (node, text) indices.
EpochBatches build_epoch_batches(const std::vector<std::pair<Index, Index>>& pairs, int batch_size,
                                 std::uint64_t seed);

/// Everything the joint model consumes for one split, in split-local indices.
struct SplitData {
  Graph graph;
  NodeFeatures features;
  std::vector<std::vector<int>> sequences;
  std::vector<Index> text_nodes;
  /// Present when alpha > 0.
  std::optional<SimilarityMatrix> similarity;

  std::vector<std::pair<Index, Index>> pairs() const;
};

/// Vocabulary built from the texts of the training split only.
Tokenizer build_tokenizer(const Dataset& dataset, const DataSplit& split, const TrainConfig& config);

/// `features` overrides the SVD features computed from the split graph.
SplitData make_split_data(const Dataset& dataset, const DataSplit& split, SplitName which,
                          const Tokenizer& tokenizer, const TrainConfig& config,
                          const NodeFeatures* features = nullptr);

/// Text encoder, node encoder, their adapters and the temperature.
struct JointModel {
  TrainConfig config;
  Tokenizer tokenizer;
  TextEncoder text_encoder;
  GatEncoder node_encoder;
  Adapter text_adapter;
  Adapter node_adapter;
  Temperature temperature;

  JointModel() = default;
  /// Freshly initialized from config.seed.
  JointModel(TrainConfig config, Tokenizer tokenizer);

  ParameterRefs parameters();
  std::vector<const Parameter*> parameters() const;

  /// Eval-mode, post-adapter embeddings.
  Matrix embed_texts(const std::vector<std::vector<int>>& sequences, Index chunk = 256) const;
  Matrix embed_nodes(const Graph& graph, const NodeFeatures& features) const;
};

/// Contrastive loss of one batch on the tape.
ad::Var batch_loss(JointModel& model, ad::Tape& tape, const SplitData& data, const Batch& batch, bool train, Rng& rng);
ad::Var batch_loss(const JointModel& model, ad::Tape& tape, const SplitData& data, const Batch& batch, Rng& rng);

/// Mean eval-mode loss over a fixed batching of the split.
double evaluate_loss(const JointModel& model, const SplitData& data, std::uint64_t seed);

/// Model plus training metadata; the unit of save/load.
struct Checkpoint {
  JointModel model;
  int epoch = 0;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

/// Epoch-zero checkpoint around a freshly initialized model.
inline Checkpoint initial_checkpoint(JointModel model) {
  Checkpoint c;
  c.model = std::move(model);
  return c;
}

struct StepRecord {
  int epoch = 0;
  int step = 0;
  std::size_t batch_size = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double clipped_grad_norm = 0.0;
  double log_temperature = 0.0;
  const Batch* batch = nullptr;
};

using StepCallback = std::function<void(const StepRecord&)>;

struct TrainResult {
  Checkpoint final_state;
  /// Lowest validation loss (training loss without validation data).
  Checkpoint best;
};

/// Runs config.max_epochs epochs starting from `start`, appending to its
/// loss history. Throws NumericError naming the batch on a non-finite loss.
TrainResult train_joint(Checkpoint start, const SplitData& train, const SplitData* val = nullptr,
                        const StepCallback& on_step = {});

}  // namespace graphtext
