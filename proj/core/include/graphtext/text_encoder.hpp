#pragma once

#include "graphtext/autodiff.hpp"
#include "graphtext/nn.hpp"
#include "graphtext/tokenizer.hpp"

#include <vector>

namespace graphtext {

struct TextEncoderConfig {
  int vocab_size = 0;
  int layers = 2;
  int heads = 2;
  int d_model = 64;
  int ff_width = 128;
  int max_len = 64;
  /// Causal (left-to-right) attention; bidirectional otherwise.
  bool causal = true;

  void validate() const;
};

/// Pre-layer-norm transformer over learned token and absolute position
/// embeddings. Sequence outputs are mean-pooled over unmasked positions.
class TextEncoder {
 public:
  struct Block {
    LayerNormParams ln_attn;
    LinearParams qkv;
    LinearParams attn_out;
    LayerNormParams ln_ff;
    LinearParams ff_in;
    LinearParams ff_out;
  };

  struct Output {
    ad::Var hidden;  // packed unmasked positions x d_model
    std::vector<Segment> segments;
    ad::Var pooled;  // batch x d_model
  };

  TextEncoder() = default;
  TextEncoder(TextEncoderConfig config, Rng& rng);

  const TextEncoderConfig& config() const { return config_; }
  Index output_dim() const { return config_.d_model; }

  /// Gradient-tracking forward pass.
  Output forward(ad::Tape& tape, const TextBatch& batch);
  /// Inference-only forward pass.
  Output forward(ad::Tape& tape, const TextBatch& batch) const;

  ParameterRefs parameters();

 private:
  template <class Self>
  static Output forward_impl(Self& self, ad::Tape& tape, const TextBatch& batch);

  TextEncoderConfig config_;
  Parameter token_embedding_;
  Parameter position_embedding_;
  std::vector<Block> blocks_;
  LayerNormParams ln_final_;
};

/// Pooled eval-mode embeddings, one row per batch row.
Matrix encode_texts(const TextEncoder& encoder, const TextBatch& batch);

/// Output projection from hidden states to vocabulary logits.
struct LmHead {
  LinearParams proj;

  LmHead() = default;
  LmHead(Index d_model, int vocab_size, Rng& rng);

  ad::Var logits(ad::Tape& tape, const ad::Var& hidden) { return LinearParams::apply(proj, tape, hidden); }
  ad::Var logits(ad::Tape& tape, const ad::Var& hidden) const { return LinearParams::apply(proj, tape, hidden); }
  ParameterRefs parameters();
};

/// Next-token targets over packed positions: position t predicts token t+1;
/// the last position of each sequence gets -1.
std::vector<int> next_token_targets(const TextBatch& batch);

/// Mean next-token negative log-likelihood of every text, given packed
/// logits aligned with batch.segments().
std::vector<double> per_text_nll(const Matrix& logits, const TextBatch& batch);

/// exp(mean over texts of per-text mean next-token NLL). Requires a causal
/// encoder (ConfigError otherwise).
double lm_perplexity(const TextEncoder& encoder, const LmHead& head, const TextBatch& batch);

/// Per-text mean NLL for `lm_perplexity`-style scoring in chunks.
std::vector<double> lm_text_nll(const TextEncoder& encoder, const LmHead& head,
                                const std::vector<std::vector<int>>& sequences, Index chunk = 64);

enum class LmObjective { NextToken, MaskedToken };

struct LmTrainConfig {
  int epochs = 1;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double grad_clip_norm = 1.0;
  double mask_prob = 0.15;
  LmObjective objective = LmObjective::NextToken;
  std::uint64_t seed = 0;
};

/// Unimodal language-model training of encoder + head on encoded sequences.
/// Returns the mean training loss of each epoch.
std::vector<double> train_language_model(TextEncoder& encoder, LmHead& head,
                                         const std::vector<std::vector<int>>& sequences, const LmTrainConfig& config);

}  // namespace graphtext
