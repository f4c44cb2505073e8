#include "graphtext/node_encoder.hpp"

#include "graphtext/errors.hpp"
#include "graphtext/evaluation.hpp"
#include "graphtext/optim.hpp"

#include <cmath>

namespace graphtext {

void GatConfig::validate() const {
  if (in_dim < 1 || hidden < 1 || out_dim < 1) throw ConfigError("GAT dimensions must be positive");
  if (heads < 1 || layers < 1) throw ConfigError("GAT needs at least one layer and one head");
  if (hidden % heads != 0) throw ConfigError("GAT hidden width must be divisible by heads");
}

GatEncoder::GatEncoder(GatConfig config, Rng& rng) : config_(config) {
  config_.validate();
  Index in = config_.in_dim;
  for (int l = 0; l < config_.layers; ++l) {
    const bool last = l + 1 == config_.layers;
    const Index f = last ? config_.out_dim : config_.hidden / config_.heads;
    const Index width = config_.heads * f;
    const std::string p = "gat" + std::to_string(l) + ".";
    AttentionLayer layer;
    layer.weight = Parameter(p + "weight", normal_matrix(in, width, 1.0 / std::sqrt(static_cast<double>(in)), rng));
    layer.att_src = Parameter(p + "att_src", normal_matrix(config_.heads, f, 1.0 / std::sqrt(static_cast<double>(f)), rng));
    layer.att_dst = Parameter(p + "att_dst", normal_matrix(config_.heads, f, 1.0 / std::sqrt(static_cast<double>(f)), rng));
    layer.concat = !last;
    layer.bias = Parameter(p + "bias", Matrix::Zero(1, last ? f : width));
    layers_.push_back(std::move(layer));
    if (!last) {
      const std::string m = "mix" + std::to_string(l);
      mixers_.push_back(Mixer{LinearParams(m + ".linear", width, config_.hidden, rng), LayerNormParams(m + ".norm", config_.hidden)});
      in = config_.hidden;
    }
  }
}

Matrix pad_features(const NodeFeatures& features, Index width) {
  if (features.rank() > width) {
    throw ConfigError("node features have " + std::to_string(features.rank()) + " columns; encoder expects at most " +
                      std::to_string(width));
  }
  Matrix out = Matrix::Zero(features.rows(), width);
  out.leftCols(features.rank()) = features.matrix;
  return out;
}

template <class Self>
ad::Var GatEncoder::forward_impl(Self& self, ad::Tape& tape, const Graph& graph, const NodeFeatures& features,
                                 GatAttention* attention) {
  if (features.rows() != graph.num_nodes()) {
    throw ConfigError("feature rows (" + std::to_string(features.rows()) + ") do not match node count (" +
                      std::to_string(graph.num_nodes()) + ")");
  }
  const auto& cfg = self.config_;
  const NeighborIndex nbrs = graph.in_neighbors(true);
  if (attention != nullptr) {
    attention->neighbors = nbrs;
    attention->weights.clear();
  }
  ad::Var x = tape.constant(pad_features(features, cfg.in_dim));
  for (std::size_t l = 0; l < self.layers_.size(); ++l) {
    auto& layer = self.layers_[l];
    ad::Var h = ad::matmul(x, tape.parameter(layer.weight));
    std::vector<std::vector<double>> weights;
    ad::Var a = ad::gat_attention(h, tape.parameter(layer.att_src), tape.parameter(layer.att_dst), nbrs, cfg.heads,
                                  layer.concat, cfg.negative_slope, attention != nullptr ? &weights : nullptr);
    if (attention != nullptr) attention->weights.push_back(std::move(weights));
    x = ad::add_bias(a, tape.parameter(layer.bias));
    if (l < self.mixers_.size()) {
      auto& mix = self.mixers_[l];
      x = LayerNormParams::apply(mix.norm, tape, LinearParams::apply(mix.linear, tape, ad::elu(x)));
    }
  }
  return x;
}

ad::Var GatEncoder::forward(ad::Tape& tape, const Graph& graph, const NodeFeatures& features, GatAttention* attention) {
  return forward_impl(*this, tape, graph, features, attention);
}

ad::Var GatEncoder::forward(ad::Tape& tape, const Graph& graph, const NodeFeatures& features,
                            GatAttention* attention) const {
  return forward_impl(*this, tape, graph, features, attention);
}

ParameterRefs GatEncoder::parameters() {
  ParameterRefs out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    out.insert(out.end(), {&layer.weight, &layer.att_src, &layer.att_dst, &layer.bias});
    if (l < mixers_.size()) {
      mixers_[l].linear.collect(out);
      mixers_[l].norm.collect(out);
    }
  }
  return out;
}

Matrix encode_nodes(const GatEncoder& encoder, const Graph& graph, const NodeFeatures& features) {
  ad::Tape tape;
  return encoder.forward(tape, graph, features).value();
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> inner_product_decode(const Matrix& node_embs, const std::vector<std::pair<Index, Index>>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= node_embs.rows() || j >= node_embs.rows()) throw ConfigError("pair index out of range");
    out.push_back(sigmoid(node_embs.row(i).dot(node_embs.row(j))));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::pair<Index, Index>> as_pairs(const std::vector<Edge>& edges) {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) out.emplace_back(e.src, e.dst);
  return out;
}

struct AucProbe {
  const Graph* graph = nullptr;
  const NodeFeatures* features = nullptr;
  EvalPairs pairs;
};

}  // namespace

GaeResult train_gae_baseline(const Graph& graph, const NodeFeatures& features, const GaeConfig& config,
                             const Graph* val_graph, const NodeFeatures* val_features) {
  if (graph.num_edges() == 0) throw ConfigError("graph autoencoder training needs at least one edge");
  Rng rng(config.seed);
  GaeResult result;
  result.encoder = GatEncoder(config.gat, rng);
  GatEncoder& enc = result.encoder;
  ParameterRefs params = enc.parameters();
  AdamW opt(params, AdamWConfig{config.learning_rate});

  AucProbe probe;
  const bool use_val = val_graph != nullptr && val_features != nullptr && val_graph->num_edges() > 0;
  probe.graph = use_val ? val_graph : &graph;
  probe.features = use_val ? val_features : &features;
  {
    Rng probe_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    probe.pairs.positives = as_pairs(probe.graph->edges());
    probe.pairs.negatives = as_pairs(sample_non_edges(*probe.graph, probe.pairs.positives.size(), probe_rng));
  }

  const auto positives = as_pairs(graph.edges());
  GatEncoder best = enc;
  double best_auc = -1.0;
  int since_best = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto pairs = positives;
    const auto negatives = as_pairs(sample_non_edges(graph, positives.size(), rng));
    pairs.insert(pairs.end(), negatives.begin(), negatives.end());
    std::vector<double> labels(positives.size(), 1.0);
    labels.resize(pairs.size(), 0.0);

    zero_grads(params);
    ad::Tape tape;
    ad::Var z = ad::dropout(enc.forward(tape, graph, features), config.dropout, true, rng);
    ad::Var loss = ad::bce_with_logits(ad::pair_dot(z, pairs), labels);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) throw NumericError("graph autoencoder loss is not finite at epoch " + std::to_string(epoch));
    tape.backward(loss);
    opt.step();
    result.train_loss.push_back(value);

    const double auc = link_prediction_auc(encode_nodes(enc, *probe.graph, *probe.features), probe.pairs);
    result.val_auc.push_back(auc);
    if (auc > best_auc + config.min_delta || best_auc < 0.0) {
      best_auc = auc;
      best = enc;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.encoder = std::move(best);
  return result;
}

}  // namespace graphtext
