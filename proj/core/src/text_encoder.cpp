#include "graphtext/text_encoder.hpp"

#include "graphtext/errors.hpp"
#include "graphtext/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace graphtext {

void TextEncoderConfig::validate() const {
  if (vocab_size <= Tokenizer::kNumReserved) throw ConfigError("text encoder vocab_size too small");
  if (layers < 1 || heads < 1 || d_model < 1 || ff_width < 1) throw ConfigError("text encoder dimensions must be positive");
  if (d_model % heads != 0) throw ConfigError("text encoder d_model must be divisible by heads");
  if (max_len < 3) throw ConfigError("text encoder max_len must be >= 3");
}

TextEncoder::TextEncoder(TextEncoderConfig config, Rng& rng) : config_(config) {
  config_.validate();
  const Index d = config_.d_model;
  token_embedding_ = Parameter("token_embedding", normal_matrix(config_.vocab_size, d, 0.1, rng));
  position_embedding_ = Parameter("position_embedding", normal_matrix(config_.max_len, d, 0.1, rng));
  blocks_.reserve(static_cast<std::size_t>(config_.layers));
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    blocks_.push_back(Block{
        LayerNormParams(p + "ln_attn", d),
        LinearParams(p + "qkv", d, 3 * d, rng),
        LinearParams(p + "attn_out", d, d, rng),
        LayerNormParams(p + "ln_ff", d),
        LinearParams(p + "ff_in", d, config_.ff_width, rng),
        LinearParams(p + "ff_out", config_.ff_width, d, rng),
    });
  }
  ln_final_ = LayerNormParams("ln_final", d);
}

template <class Self>
TextEncoder::Output TextEncoder::forward_impl(Self& self, ad::Tape& tape, const TextBatch& batch) {
  const auto& cfg = self.config_;
  if (batch.width() > cfg.max_len) {
    throw ConfigError("sequence length " + std::to_string(batch.width()) + " exceeds max_len " +
                      std::to_string(cfg.max_len));
  }
  Output out;
  out.segments = batch.segments();
  std::vector<int> tokens;
  std::vector<int> positions;
  for (Index r = 0; r < batch.size(); ++r) {
    const Index len = out.segments[r].length;
    if (len < 1) throw ConfigError("text batch row " + std::to_string(r) + " has no unmasked position");
    for (Index p = 0; p < len; ++p) {
      const int id = batch.ids[r][p];
      if (id < 0 || id >= cfg.vocab_size) throw ConfigError("token id " + std::to_string(id) + " outside vocabulary");
      tokens.push_back(id);
      positions.push_back(static_cast<int>(p));
    }
  }

  ad::Var x = ad::add(ad::embedding(tape.parameter(self.token_embedding_), tokens),
                      ad::embedding(tape.parameter(self.position_embedding_), positions));
  for (auto& block : self.blocks_) {
    ad::Var h = LayerNormParams::apply(block.ln_attn, tape, x);
    ad::Var qkv = LinearParams::apply(block.qkv, tape, h);
    ad::Var attn = ad::segment_attention(qkv, out.segments, cfg.heads, cfg.causal);
    x = ad::add(x, LinearParams::apply(block.attn_out, tape, attn));
    h = LayerNormParams::apply(block.ln_ff, tape, x);
    ad::Var f = ad::gelu(LinearParams::apply(block.ff_in, tape, h));
    x = ad::add(x, LinearParams::apply(block.ff_out, tape, f));
  }
  out.hidden = LayerNormParams::apply(self.ln_final_, tape, x);
  out.pooled = ad::segment_mean(out.hidden, out.segments);
  return out;
}

TextEncoder::Output TextEncoder::forward(ad::Tape& tape, const TextBatch& batch) {
  return forward_impl(*this, tape, batch);
}

TextEncoder::Output TextEncoder::forward(ad::Tape& tape, const TextBatch& batch) const {
  return forward_impl(*this, tape, batch);
}

ParameterRefs TextEncoder::parameters() {
  ParameterRefs out{&token_embedding_, &position_embedding_};
  for (auto& b : blocks_) {
    b.ln_attn.collect(out);
    b.qkv.collect(out);
    b.attn_out.collect(out);
    b.ln_ff.collect(out);
    b.ff_in.collect(out);
    b.ff_out.collect(out);
  }
  ln_final_.collect(out);
  return out;
}

Matrix encode_texts(const TextEncoder& encoder, const TextBatch& batch) {
  ad::Tape tape;
  return encoder.forward(tape, batch).pooled.value();
}

LmHead::LmHead(Index d_model, int vocab_size, Rng& rng) : proj("lm_head", d_model, vocab_size, rng) {}

ParameterRefs LmHead::parameters() {
  ParameterRefs out;
  proj.collect(out);
  return out;
}

std::vector<int> next_token_targets(const TextBatch& batch) {
  std::vector<int> targets;
  for (Index r = 0; r < batch.size(); ++r) {
    const Index len = batch.length(r);
    for (Index p = 0; p < len; ++p) targets.push_back(p + 1 < len ? batch.ids[r][p + 1] : -1);
  }
  return targets;
}

std::vector<double> per_text_nll(const Matrix& logits, const TextBatch& batch) {
  const auto segments = batch.segments();
  const auto targets = next_token_targets(batch);
  if (static_cast<Index>(targets.size()) != logits.rows()) throw Error("per_text_nll: logits do not match batch");
  std::vector<double> out;
  out.reserve(segments.size());
  for (const Segment& s : segments) {
    double total = 0.0;
    int count = 0;
    for (Index r = s.offset; r < s.offset + s.length; ++r) {
      if (targets[r] < 0) continue;
      const double m = logits.row(r).maxCoeff();
      const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
      total += lse - logits(r, targets[r]);
      ++count;
    }
    out.push_back(count > 0 ? total / count : 0.0);
  }
  return out;
}

std::vector<double> lm_text_nll(const TextEncoder& encoder, const LmHead& head,
                                const std::vector<std::vector<int>>& sequences, Index chunk) {
  if (!encoder.config().causal) throw ConfigError("perplexity requires a causal text encoder");
  std::vector<double> out;
  out.reserve(sequences.size());
  for (std::size_t b = 0; b < sequences.size(); b += static_cast<std::size_t>(chunk)) {
    const auto last = std::min(sequences.size(), b + static_cast<std::size_t>(chunk));
    const TextBatch batch = make_text_batch({sequences.begin() + static_cast<std::ptrdiff_t>(b),
                                             sequences.begin() + static_cast<std::ptrdiff_t>(last)});
    ad::Tape tape;
    auto enc = encoder.forward(tape, batch);
    const auto nll = per_text_nll(head.logits(tape, enc.hidden).value(), batch);
    out.insert(out.end(), nll.begin(), nll.end());
  }
  return out;
}

double lm_perplexity(const TextEncoder& encoder, const LmHead& head, const TextBatch& batch) {
  if (!encoder.config().causal) throw ConfigError("perplexity requires a causal text encoder");
  ad::Tape tape;
  auto enc = encoder.forward(tape, batch);
  const auto nll = per_text_nll(head.logits(tape, enc.hidden).value(), batch);
  if (nll.empty()) throw ConfigError("perplexity of an empty batch");
  return std::exp(std::accumulate(nll.begin(), nll.end(), 0.0) / static_cast<double>(nll.size()));
}

std::vector<double> train_language_model(TextEncoder& encoder, LmHead& head,
                                         const std::vector<std::vector<int>>& sequences, const LmTrainConfig& config) {
  if (sequences.empty()) throw ConfigError("language-model training needs at least one sequence");
  if (config.objective == LmObjective::NextToken && !encoder.config().causal) {
    throw ConfigError("next-token training requires a causal encoder");
  }
  ParameterRefs params = encoder.parameters();
  for (Parameter* p : head.parameters()) params.push_back(p);
  AdamW opt(params, AdamWConfig{config.learning_rate});
  Rng rng(config.seed);
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> history;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const auto last = std::min(order.size(), b + static_cast<std::size_t>(config.batch_size));
      std::vector<std::vector<int>> seqs;
      for (std::size_t i = b; i < last; ++i) seqs.push_back(sequences[order[i]]);
      TextBatch input = make_text_batch(seqs);
      std::vector<int> targets;
      std::vector<double> weights;
      if (config.objective == LmObjective::NextToken) {
        targets = next_token_targets(input);
        const auto segs = input.segments();
        for (const Segment& s : segs) {
          for (Index p = 0; p < s.length; ++p) {
            weights.push_back(1.0 / (static_cast<double>(s.length - 1) * static_cast<double>(segs.size())));
          }
        }
      } else {
        std::bernoulli_distribution pick(config.mask_prob);
        int masked = 0;
        for (Index r = 0; r < input.size(); ++r) {
          const Index len = input.length(r);
          for (Index p = 0; p < len; ++p) {
            const int id = input.ids[r][p];
            const bool special = id == Tokenizer::kStart || id == Tokenizer::kEnd;
            if (!special && pick(rng)) {
              targets.push_back(id);
              input.ids[r][p] = Tokenizer::kMask;
              ++masked;
            } else {
              targets.push_back(-1);
            }
          }
        }
        if (masked == 0) continue;
        weights.assign(targets.size(), 1.0 / masked);
      }
      zero_grads(params);
      ad::Tape tape;
      auto enc = encoder.forward(tape, input);
      ad::Var loss = ad::weighted_cross_entropy(head.logits(tape, enc.hidden), targets, weights);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) throw NumericError("language-model loss is not finite");
      tape.backward(loss);
      clip_grad_norm(params, config.grad_clip_norm);
      opt.step();
      epoch_loss += value;
      ++batches;
    }
    history.push_back(batches > 0 ? epoch_loss / batches : 0.0);
  }
  return history;
}

}  // namespace graphtext
