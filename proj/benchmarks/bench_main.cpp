#include <benchmark/benchmark.h>

#include "graphtext/contrastive.hpp"
#include "graphtext/datasets.hpp"
#include "graphtext/node_encoder.hpp"
#include "graphtext/similarity.hpp"
#include "graphtext/text_encoder.hpp"
#include "graphtext/trainer.hpp"

using namespace graphtext;

namespace {

const Dataset& sbm() {
  static const Dataset ds = generate_sbm_corpus(SbmSpec{});
  return ds;
}

void BM_ContrastiveLoss(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(1);
  const Matrix logits = normal_matrix(n, n, 1.0, rng);
  std::vector<Index> nodes(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) nodes[i] = i;
  const TargetDistributions targets = target_distributions(nodes, 0.0, nullptr, nullptr);
  for (auto _ : state) benchmark::DoNotOptimize(contrastive_loss_and_grad(logits, targets));
}
BENCHMARK(BM_ContrastiveLoss)->Arg(8)->Arg(36)->Arg(128);

void BM_SimRank(benchmark::State& state) {
  const Graph& g = sbm().graph;
  for (auto _ : state) benchmark::DoNotOptimize(simrank(g));
}
BENCHMARK(BM_SimRank)->Unit(benchmark::kMillisecond);

void BM_MutualNeighbor(benchmark::State& state) {
  const Graph& g = sbm().graph;
  for (auto _ : state) benchmark::DoNotOptimize(mutual_neighbor_similarity(g));
}
BENCHMARK(BM_MutualNeighbor)->Unit(benchmark::kMillisecond);

void BM_GatForward(benchmark::State& state) {
  const Graph& g = sbm().graph;
  const NodeFeatures f = svd_features(g);
  Rng rng(2);
  const GatEncoder enc(GatConfig{}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(encode_nodes(enc, g, f));
}
BENCHMARK(BM_GatForward)->Unit(benchmark::kMillisecond);

void BM_TextEncoder(benchmark::State& state) {
  const TrainConfig cfg;
  const DataSplit split = make_splits(sbm().graph, {}, 0);
  const Tokenizer tok = build_tokenizer(sbm(), split, cfg);
  std::vector<std::vector<int>> seqs;
  for (Index i = 0; i < state.range(0); ++i) {
    seqs.push_back(tok.encode_sequence(sbm().corpus[static_cast<std::size_t>(i)].text, cfg.text.max_len));
  }
  TextEncoderConfig tc = cfg.text;
  tc.vocab_size = tok.vocab_size();
  Rng rng(3);
  const TextEncoder enc(tc, rng);
  const TextBatch batch = make_text_batch(seqs);
  for (auto _ : state) benchmark::DoNotOptimize(encode_texts(enc, batch));
}
BENCHMARK(BM_TextEncoder)->Arg(36)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.alpha = 0.1;
  const DataSplit split = make_splits(sbm().graph, {}, 0);
  const Tokenizer tok = build_tokenizer(sbm(), split, cfg);
  const SplitData data = make_split_data(sbm(), split, SplitName::Train, tok, cfg);
  JointModel model(cfg, tok);
  const EpochBatches eb = build_epoch_batches(data.pairs(), cfg.batch_size, 0);
  Rng rng(4);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var loss = batch_loss(model, tape, data, eb.batches.front(), true, rng);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
