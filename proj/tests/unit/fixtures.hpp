#pragma once

#include "graphtext/datasets.hpp"
#include "graphtext/trainer.hpp"

namespace testing {

using namespace graphtext;

/// Small encoders so that a training epoch takes milliseconds.
inline TrainConfig tiny_config(std::uint64_t seed = 0) {
  TrainConfig c;
  c.seed = seed;
  c.batch_size = 8;
  c.max_epochs = 2;
  c.learning_rate = 1e-3;
  c.embedding_dim = 8;
  c.min_token_count = 1;
  c.text.layers = 1;
  c.text.heads = 2;
  c.text.d_model = 8;
  c.text.ff_width = 16;
  c.text.max_len = 12;
  c.gat.in_dim = 8;
  c.gat.hidden = 8;
  c.gat.heads = 2;
  c.gat.layers = 2;
  c.gat.out_dim = 8;
  return c;
}

inline SbmSpec tiny_sbm(std::uint64_t seed = 0) {
  SbmSpec s;
  s.communities = 3;
  s.nodes_per_community = 10;
  s.p_in = 0.6;
  s.p_out = 0.05;
  s.community_vocab = 6;
  s.shared_vocab = 4;
  s.texts_per_node = 2;
  s.min_text_len = 3;
  s.max_text_len = 6;
  s.seed = seed;
  return s;
}

struct TinySetup {
  Dataset dataset;
  DataSplit split;
  Tokenizer tokenizer;
  SplitData train;
  SplitData val;
};

inline TinySetup tiny_setup(const TrainConfig& config, std::uint64_t seed = 0) {
  TinySetup s;
  s.dataset = generate_sbm_corpus(tiny_sbm(seed));
  s.split = make_splits(s.dataset.graph, {0.7, 0.1, 0.2}, seed);
  s.tokenizer = build_tokenizer(s.dataset, s.split, config);
  s.train = make_split_data(s.dataset, s.split, SplitName::Train, s.tokenizer, config);
  s.val = make_split_data(s.dataset, s.split, SplitName::Val, s.tokenizer, config);
  return s;
}

}  // namespace testing
