#include "graphtext/trainer.hpp"

#include "graphtext/errors.hpp"
#include "graphtext/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace graphtext {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (alpha > 0.0 && directed) {
    throw ConfigError("alpha > 0 requires an undirected graph: similarity-mixed targets are not defined for directed graphs");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(std::abs(tau_init) <= kLogTemperatureBound)) throw ConfigError("tau_init must lie within +-ln 100");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (min_token_count < 1 || max_vocab < 1) throw ConfigError("tokenizer limits must be positive");
  TextEncoderConfig t = text;
  t.vocab_size = std::max(t.vocab_size, Tokenizer::kNumReserved + 1);
  t.validate();
  gat.validate();
}

EpochBatches build_epoch_batches(const std::vector<std::pair<Index, Index>>& pairs, int batch_size,
                                 std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  std::map<Index, std::vector<Index>> by_node;
  for (const auto& [node, text] : pairs) by_node[node].push_back(text);

  Rng rng(seed);
  std::vector<Index> nodes;
  nodes.reserve(by_node.size());
  for (auto& [node, texts] : by_node) nodes.push_back(node);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::size_t rounds = 0;
  for (Index v : nodes) {
    auto& texts = by_node[v];
    std::shuffle(texts.begin(), texts.end(), rng);
    rounds = std::max(rounds, texts.size());
  }

  std::vector<std::pair<Index, Index>> order;
  order.reserve(pairs.size());
  for (std::size_t r = 0; r < rounds; ++r) {
    for (Index v : nodes) {
      const auto& texts = by_node[v];
      if (r < texts.size()) order.emplace_back(v, texts[r]);
    }
  }

  EpochBatches out;
  const auto size = static_cast<std::size_t>(batch_size);
  for (std::size_t b = 0; b < order.size(); b += size) {
    Batch batch;
    std::unordered_set<Index> seen;
    for (std::size_t i = b; i < std::min(order.size(), b + size); ++i) {
      if (seen.insert(order[i].first).second) {
        batch.nodes.push_back(order[i].first);
        batch.texts.push_back(order[i].second);
      } else {
        ++out.dropped;
      }
    }
    out.batches.push_back(std::move(batch));
  }
  return out;
}

std::vector<std::pair<Index, Index>> SplitData::pairs() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(text_nodes.size());
  for (std::size_t t = 0; t < text_nodes.size(); ++t) out.emplace_back(text_nodes[t], static_cast<Index>(t));
  return out;
}

Tokenizer build_tokenizer(const Dataset& dataset, const DataSplit& split, const TrainConfig& config) {
  std::vector<bool> in_train(static_cast<std::size_t>(dataset.graph.num_nodes()), false);
  for (Index v : split.train) in_train[v] = true;
  const std::vector<Index> owners = dataset.text_nodes();
  std::vector<std::string> texts;
  for (std::size_t t = 0; t < owners.size(); ++t) {
    if (in_train[owners[t]]) texts.push_back(dataset.corpus[t].text);
  }
  return Tokenizer::build(texts, config.tokenizer_mode, config.min_token_count,
                          static_cast<std::size_t>(config.max_vocab));
}

SplitData make_split_data(const Dataset& dataset, const DataSplit& split, SplitName which,
                          const Tokenizer& tokenizer, const TrainConfig& config, const NodeFeatures* features) {
  const auto& nodes = split.nodes(which);
  SplitData out;
  out.graph = induced_subgraph(dataset.graph, nodes);
  std::unordered_map<Index, Index> local;
  for (std::size_t i = 0; i < nodes.size(); ++i) local.emplace(nodes[i], static_cast<Index>(i));
  const std::vector<Index> owners = dataset.text_nodes();
  for (std::size_t t = 0; t < owners.size(); ++t) {
    auto it = local.find(owners[t]);
    if (it == local.end()) continue;
    out.sequences.push_back(tokenizer.encode_sequence(dataset.corpus[t].text, config.text.max_len));
    out.text_nodes.push_back(it->second);
  }
  if (features != nullptr) {
    if (features->rows() != out.graph.num_nodes()) {
      throw DataError(std::string(split_name(which)) + " features do not match the split's node count");
    }
    out.features = *features;
  } else {
    out.features = svd_features(out.graph, config.gat.in_dim);
  }
  if (config.alpha > 0.0) {
    out.similarity = config.similarity == SimilarityKind::SimRank ? simrank(out.graph)
                                                                  : mutual_neighbor_similarity(out.graph);
  }
  return out;
}

// ---------------------------------------------------------------------------

JointModel::JointModel(TrainConfig cfg, Tokenizer tok) : config(std::move(cfg)), tokenizer(std::move(tok)) {
  config.text.vocab_size = tokenizer.vocab_size();
  config.validate();
  Rng rng(config.seed);
  text_encoder = TextEncoder(config.text, rng);
  node_encoder = GatEncoder(config.gat, rng);
  text_adapter = Adapter("text_adapter", {config.text.d_model, config.embedding_dim, config.dropout}, rng);
  node_adapter = Adapter("node_adapter", {config.gat.out_dim, config.embedding_dim, config.dropout}, rng);
  temperature = Temperature(config.tau_init);
}

ParameterRefs JointModel::parameters() {
  ParameterRefs out;
  auto append = [&](ParameterRefs p) { out.insert(out.end(), p.begin(), p.end()); };
  append(text_encoder.parameters());
  append(node_encoder.parameters());
  append(text_adapter.parameters());
  append(node_adapter.parameters());
  out.push_back(&temperature.log_tau);
  return out;
}

std::vector<const Parameter*> JointModel::parameters() const {
  const ParameterRefs refs = const_cast<JointModel*>(this)->parameters();
  return {refs.begin(), refs.end()};
}

Matrix JointModel::embed_texts(const std::vector<std::vector<int>>& sequences, Index chunk) const {
  Matrix out(static_cast<Index>(sequences.size()), config.embedding_dim);
  for (std::size_t b = 0; b < sequences.size(); b += static_cast<std::size_t>(chunk)) {
    const auto last = std::min(sequences.size(), b + static_cast<std::size_t>(chunk));
    const TextBatch batch = make_text_batch({sequences.begin() + static_cast<std::ptrdiff_t>(b),
                                             sequences.begin() + static_cast<std::ptrdiff_t>(last)});
    out.middleRows(static_cast<Index>(b), static_cast<Index>(last - b)) =
        adapt(text_adapter, encode_texts(text_encoder, batch));
  }
  return out;
}

Matrix JointModel::embed_nodes(const Graph& graph, const NodeFeatures& features) const {
  return adapt(node_adapter, encode_nodes(node_encoder, graph, features));
}

namespace {

template <class Model>
ad::Var batch_loss_impl(Model& model, ad::Tape& tape, const SplitData& data, const Batch& batch, bool train,
                        Rng& rng) {
  if (batch.nodes.size() != batch.texts.size() || batch.nodes.empty()) throw ConfigError("malformed batch");
  std::vector<std::vector<int>> seqs;
  seqs.reserve(batch.texts.size());
  for (Index t : batch.texts) seqs.push_back(data.sequences.at(static_cast<std::size_t>(t)));
  const TextBatch text_batch = make_text_batch(seqs);

  auto text_out = model.text_encoder.forward(tape, text_batch);
  ad::Var text = model.text_adapter.forward(tape, text_out.pooled, train, rng);
  ad::Var all_nodes = model.node_encoder.forward(tape, data.graph, data.features);
  ad::Var node = model.node_adapter.forward(tape, ad::gather_rows(all_nodes, batch.nodes), train, rng);
  ad::Var logits = cosine_logits(text, node, tape.parameter(model.temperature.log_tau));

  const double alpha = model.config.alpha;
  if (alpha > 0.0) {
    if (!data.similarity) throw ConfigError("alpha > 0 requires a precomputed similarity matrix");
    const BatchSimilarityRows rows = batch_similarity_rows(*data.similarity, batch.nodes);
    return contrastive_loss(logits, target_distributions(batch.nodes, alpha, &rows, &rows));
  }
  return contrastive_loss(logits, target_distributions(batch.nodes, 0.0, nullptr, nullptr));
}

std::string describe(const Batch& batch, const SplitData& data, int epoch, int step) {
  std::string msg = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(step) + " (nodes";
  const std::size_t shown = std::min<std::size_t>(batch.nodes.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) msg += " " + data.graph.node_ids()[batch.nodes[i]];
  if (shown < batch.nodes.size()) msg += " ...";
  return msg + ")";
}

bool usable(const SplitData& data) {
  std::unordered_set<Index> nodes(data.text_nodes.begin(), data.text_nodes.end());
  return nodes.size() >= 2;
}

}  // namespace

ad::Var batch_loss(JointModel& model, ad::Tape& tape, const SplitData& data, const Batch& batch, bool train,
                   Rng& rng) {
  return batch_loss_impl(model, tape, data, batch, train, rng);
}

ad::Var batch_loss(const JointModel& model, ad::Tape& tape, const SplitData& data, const Batch& batch, Rng& rng) {
  return batch_loss_impl(model, tape, data, batch, false, rng);
}

double evaluate_loss(const JointModel& model, const SplitData& data, std::uint64_t seed) {
  const EpochBatches eb = build_epoch_batches(data.pairs(), model.config.batch_size, seed);
  Rng unused(0);
  double total = 0.0;
  int count = 0;
  for (const Batch& b : eb.batches) {
    if (b.nodes.size() < 2) continue;
    ad::Tape tape;
    total += batch_loss(model, tape, data, b, unused).value()(0, 0);
    ++count;
  }
  if (count == 0) throw ConfigError("split has no batch with at least two nodes");
  return total / count;
}

TrainResult train_joint(Checkpoint start, const SplitData& train, const SplitData* val, const StepCallback& on_step) {
  JointModel& model = start.model;
  const TrainConfig& cfg = model.config;
  cfg.validate();
  if (!usable(train)) throw ConfigError("training split needs at least two nodes with texts");
  if (cfg.alpha > 0.0 && !train.similarity) throw ConfigError("alpha > 0 requires a precomputed similarity matrix");
  if (val != nullptr && !usable(*val)) val = nullptr;
  Eigen::setNbThreads(cfg.threads);

  ParameterRefs params = model.parameters();
  AdamW opt(params, AdamWConfig{cfg.learning_rate, cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay});
  const auto pairs = train.pairs();
  Rng rng(mix_seed(cfg.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(start.epoch)));

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < cfg.max_epochs; ++e) {
    const int epoch = start.epoch;
    const EpochBatches eb = build_epoch_batches(pairs, cfg.batch_size, mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    double total = 0.0;
    int steps = 0;
    for (std::size_t s = 0; s < eb.batches.size(); ++s) {
      const Batch& batch = eb.batches[s];
      if (batch.nodes.size() < 2) continue;
      zero_grads(params);
      ad::Tape tape;
      ad::Var loss;
      try {
        loss = batch_loss(model, tape, train, batch, true, rng);
      } catch (const NumericError& err) {
        throw NumericError(std::string(err.what()) + " at " + describe(batch, train, epoch, static_cast<int>(s)));
      }
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at " + describe(batch, train, epoch, static_cast<int>(s)));
      }
      tape.backward(loss);
      StepRecord rec;
      try {
        rec.grad_norm = clip_grad_norm(params, cfg.grad_clip_norm);
      } catch (const NumericError& err) {
        throw NumericError(std::string(err.what()) + " at " + describe(batch, train, epoch, static_cast<int>(s)));
      }
      rec.clipped_grad_norm = global_grad_norm(params);
      opt.step();
      model.temperature.project();

      total += value;
      ++steps;
      if (on_step) {
        rec.epoch = epoch;
        rec.step = static_cast<int>(s);
        rec.batch_size = batch.nodes.size();
        rec.loss = value;
        rec.log_temperature = model.temperature.value();
        rec.batch = &batch;
        on_step(rec);
      }
    }
    if (steps == 0) throw ConfigError("no training batch holds two or more nodes");
    const double train_loss = total / steps;
    const double val_loss = val != nullptr ? evaluate_loss(model, *val, mix_seed(cfg.seed, 0x7a1ULL))
                                           : std::numeric_limits<double>::quiet_NaN();
    start.train_loss.push_back(train_loss);
    start.val_loss.push_back(val_loss);
    start.epoch = epoch + 1;
    const double criterion = val != nullptr ? val_loss : train_loss;
    if (criterion < best) {
      best = criterion;
      result.best = start;
    }
  }
  if (cfg.max_epochs == 0) result.best = start;
  result.final_state = std::move(start);
  return result;
}

}  // namespace graphtext
