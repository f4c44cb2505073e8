#include "graphtext/evaluation.hpp"

#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"
#include "graphtext/logistic.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

namespace graphtext {

double roc_auc(const std::vector<double>& positive_scores, const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) throw ConfigError("AUC needs positive and negative scores");
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) all.push_back({s, true});
  for (double s : negative_scores) all.push_back({s, false});
  for (const auto& s : all) {
    if (std::isnan(s.score)) throw NumericError("AUC score is NaN");
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].positive) rank_sum += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positive_scores.size());
  const double n = static_cast<double>(negative_scores.size());
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

namespace {

std::vector<double> pair_logits(const Matrix& embs, const IndexPairs& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= embs.rows() || b >= embs.rows()) throw ConfigError("pair endpoint outside embeddings");
    out.push_back(embs.row(a).dot(embs.row(b)));
  }
  return out;
}

Matrix normalized_rows(const Matrix& m) {
  Matrix out = m;
  for (Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n == 0.0) throw NumericError("zero-norm embedding row " + std::to_string(i));
    out.row(i) /= n;
  }
  return out;
}

void check_truth(const std::vector<Index>& truth, Index num_texts, Index num_nodes) {
  if (static_cast<Index>(truth.size()) != num_texts) throw ConfigError("every text needs a truth entry");
  for (Index v : truth) {
    if (v < 0 || v >= num_nodes) throw ConfigError("truth entry refers to a missing node");
  }
}

}  // namespace

double link_prediction_auc(const Matrix& node_embs, const EvalPairs& pairs) {
  if (pairs.positives.empty()) throw ConfigError("link prediction needs at least one positive pair");
  return roc_auc(pair_logits(node_embs, pairs.positives), pair_logits(node_embs, pairs.negatives));
}

EvalPairs sample_eval_pairs(const Graph& graph, const DataSplit& split, std::uint64_t seed, SplitName s) {
  const Graph sub = induced_subgraph(graph, split.nodes(s));
  if (sub.num_edges() == 0) {
    throw ConfigError(std::string(split_name(s)) + " split has no induced edges to evaluate");
  }
  EvalPairs out;
  out.seed = seed;
  for (const Edge& e : sub.edges()) out.positives.emplace_back(e.src, e.dst);
  Rng rng(seed);
  for (const Edge& e : sample_non_edges(sub, out.positives.size(), rng)) out.negatives.emplace_back(e.src, e.dst);
  return out;
}

std::vector<double> topk_accuracy(const Matrix& text_embs, const Matrix& node_embs, const std::vector<Index>& truth,
                                  int k_max) {
  if (k_max < 1) throw ConfigError("k_max must be at least 1");
  if (text_embs.rows() == 0) throw ConfigError("top-k accuracy needs at least one text");
  check_truth(truth, text_embs.rows(), node_embs.rows());
  const Matrix sims = normalized_rows(text_embs) * normalized_rows(node_embs).transpose();
  std::vector<double> hits(k_max, 0.0);
  for (Index i = 0; i < sims.rows(); ++i) {
    const Index t = truth[i];
    const double st = sims(i, t);
    Index rank = 1;
    for (Index j = 0; j < sims.cols(); ++j) {
      if (sims(i, j) > st || (sims(i, j) == st && j < t)) ++rank;
    }
    for (Index k = rank; k <= k_max; ++k) hits[k - 1] += 1.0;
  }
  for (double& h : hits) h /= static_cast<double>(sims.rows());
  return hits;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("correlation needs two equal-length series of length >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

IndexPairs text_pairs(Index num_texts, std::size_t max_pairs, std::uint64_t seed) {
  if (num_texts < 2) throw ConfigError("need at least two texts to form pairs");
  const auto n = static_cast<std::uint64_t>(num_texts);
  const std::uint64_t total = n * (n - 1) / 2;
  IndexPairs out;
  if (total <= max_pairs) {
    out.reserve(total);
    for (Index i = 0; i < num_texts; ++i) {
      for (Index j = i + 1; j < num_texts; ++j) out.emplace_back(i, j);
    }
    return out;
  }
  Rng rng(seed);
  std::uniform_int_distribution<Index> pick(0, num_texts - 1);
  std::unordered_set<std::uint64_t> seen;
  out.reserve(max_pairs);
  while (out.size() < max_pairs) {
    Index a = pick(rng);
    Index b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert(static_cast<std::uint64_t>(a) * n + static_cast<std::uint64_t>(b)).second) out.emplace_back(a, b);
  }
  return out;
}

double distance_coupling(const Matrix& text_embs, const Matrix& node_embs, const std::vector<Index>& truth,
                         std::size_t max_pairs, std::uint64_t seed) {
  check_truth(truth, text_embs.rows(), node_embs.rows());
  const Matrix t = normalized_rows(text_embs);
  const Matrix v = normalized_rows(node_embs);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [i, j] : text_pairs(text_embs.rows(), max_pairs, seed)) {
    xs.push_back(t.row(i).dot(t.row(j)));
    ys.push_back(v.row(truth[i]).dot(v.row(truth[j])));
  }
  return pearson(xs, ys);
}

double text_simrank_correlation(const Matrix& text_embs, const SimilarityMatrix& simrank,
                                const std::vector<Index>& truth, std::size_t max_pairs, std::uint64_t seed) {
  check_truth(truth, text_embs.rows(), simrank.size());
  const Matrix t = normalized_rows(text_embs);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [i, j] : text_pairs(text_embs.rows(), max_pairs, seed)) {
    xs.push_back(t.row(i).dot(t.row(j)));
    ys.push_back(simrank.values(truth[i], truth[j]));
  }
  return pearson(xs, ys);
}

// ---------------------------------------------------------------------------

Matrix text_mean_embeddings(const Matrix& text_embs, const std::vector<Index>& truth, Index num_nodes) {
  check_truth(truth, text_embs.rows(), num_nodes);
  Matrix out = Matrix::Zero(num_nodes, text_embs.cols());
  std::vector<int> counts(num_nodes, 0);
  for (Index i = 0; i < text_embs.rows(); ++i) {
    out.row(truth[i]) += text_embs.row(i);
    ++counts[truth[i]];
  }
  for (Index v = 0; v < num_nodes; ++v) {
    if (counts[v] == 0) throw ConfigError("node " + std::to_string(v) + " has no texts");
    out.row(v) /= counts[v];
  }
  return out;
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw ConfigError("macro-F1 needs equal, non-empty label lists");
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  double total = 0.0;
  for (int c : classes) {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predicted[i] == c && truth[i] == c) tp += 1.0;
      else if (predicted[i] == c) fp += 1.0;
      else if (truth[i] == c) fn += 1.0;
    }
    const double denom = 2.0 * tp + fp + fn;
    total += denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  }
  return total / static_cast<double>(classes.size());
}

namespace {

double accuracy(const std::vector<int>& truth, const std::vector<int>& predicted) {
  double hits = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i] ? 1.0 : 0.0;
  return hits / static_cast<double>(truth.size());
}

}  // namespace

ClassificationScores classify_embeddings(const std::string& kind, const Matrix& features,
                                         const std::vector<int>& labels, std::uint64_t seed) {
  if (static_cast<Index>(labels.size()) != features.rows()) throw ConfigError("one label per embedding row required");
  ClassificationScores out;
  out.kind = kind;
  std::vector<Index> labeled;
  std::set<int> class_set;
  for (Index i = 0; i < features.rows(); ++i) {
    if (labels[i] >= 0) {
      labeled.push_back(i);
      class_set.insert(labels[i]);
    }
  }
  if (labeled.size() < 2) throw ConfigError("classification needs at least two labeled nodes");
  const std::vector<int> classes(class_set.begin(), class_set.end());
  auto dense = [&](int label) {
    return static_cast<int>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
  };

  Rng rng(seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  const std::size_t n_train = (labeled.size() + 1) / 2;
  std::vector<Index> train(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Index> test(labeled.begin() + static_cast<std::ptrdiff_t>(n_train), labeled.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  std::vector<int> counts(classes.size(), 0);
  for (Index i : train) ++counts[dense(labels[i])];
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (counts[c] == 0) {
      out.skipped = true;
      out.reason = "class " + std::to_string(classes[c]) + " absent from the training half";
      return out;
    }
  }

  Matrix x_train(static_cast<Index>(train.size()), features.cols());
  std::vector<int> y_train;
  for (std::size_t r = 0; r < train.size(); ++r) {
    x_train.row(static_cast<Index>(r)) = features.row(train[r]);
    y_train.push_back(dense(labels[train[r]]));
  }
  Matrix x_test(static_cast<Index>(test.size()), features.cols());
  std::vector<int> y_test;
  for (std::size_t r = 0; r < test.size(); ++r) {
    x_test.row(static_cast<Index>(r)) = features.row(test[r]);
    y_test.push_back(dense(labels[test[r]]));
  }

  LogisticRegression model;
  model.fit(x_train, y_train, static_cast<int>(classes.size()));
  const std::vector<int> predicted = model.predict(x_test);
  out.macro_f1 = macro_f1(y_test, predicted);
  out.accuracy = accuracy(y_test, predicted);

  const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  const std::vector<int> constant(y_test.size(), majority);
  out.majority_macro_f1 = macro_f1(y_test, constant);
  out.majority_accuracy = accuracy(y_test, constant);
  return out;
}

std::vector<ClassificationScores> classify_nodes(const Matrix& text_mean, const Matrix& node_embs,
                                                 const std::vector<int>& labels, std::uint64_t seed) {
  if (text_mean.rows() != node_embs.rows()) throw ConfigError("text-mean and node embeddings differ in row count");
  Matrix concat(node_embs.rows(), node_embs.cols() + text_mean.cols());
  concat << node_embs, text_mean;
  return {classify_embeddings("text_mean", text_mean, labels, seed),
          classify_embeddings("node", node_embs, labels, seed),
          classify_embeddings("concat", concat, labels, seed)};
}

// ---------------------------------------------------------------------------

namespace {

double mean_of(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  double s = 0.0;
  for (std::size_t i : idx) s += v[i];
  return s / static_cast<double>(idx.size());
}

}  // namespace

PerplexityComparison bootstrap_perplexity(const std::vector<double>& joint_nll,
                                          const std::vector<double>& baseline_nll, int resamples,
                                          std::uint64_t seed) {
  if (joint_nll.size() != baseline_nll.size() || joint_nll.empty()) {
    throw ConfigError("bootstrap needs paired, non-empty per-text scores");
  }
  if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
  std::vector<std::size_t> all(joint_nll.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  PerplexityComparison out;
  out.joint_perplexity = std::exp(mean_of(joint_nll, all));
  out.baseline_perplexity = std::exp(mean_of(baseline_nll, all));
  out.difference = out.joint_perplexity - out.baseline_perplexity;

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  std::vector<std::size_t> idx(all.size());
  long at_most_zero = 0;
  long at_least_zero = 0;
  for (int r = 0; r < resamples; ++r) {
    for (auto& i : idx) i = pick(rng);
    const double d = std::exp(mean_of(joint_nll, idx)) - std::exp(mean_of(baseline_nll, idx));
    if (d <= 0.0) ++at_most_zero;
    if (d >= 0.0) ++at_least_zero;
  }
  const double lo = static_cast<double>(at_most_zero) / resamples;
  const double hi = static_cast<double>(at_least_zero) / resamples;
  out.p_value = std::min(1.0, 2.0 * std::min(lo, hi));
  return out;
}

PerplexityComparison perplexity_comparison(const TextEncoder& joint, const TextEncoder& baseline,
                                           const std::vector<std::vector<int>>& train,
                                           const std::vector<std::vector<int>>& test, const LmTrainConfig& config,
                                           int resamples) {
  if (!joint.config().causal || !baseline.config().causal) {
    throw ConfigError("perplexity comparison requires causal text encoders");
  }
  if (joint.config().vocab_size != baseline.config().vocab_size) {
    throw ConfigError("perplexity comparison requires a shared vocabulary");
  }
  auto score = [&](const TextEncoder& source) {
    TextEncoder enc = source;
    Rng rng(config.seed);
    LmHead head(enc.output_dim(), enc.config().vocab_size, rng);
    if (!train.empty() && config.epochs > 0) train_language_model(enc, head, train, config);
    return lm_text_nll(enc, head, test);
  };
  return bootstrap_perplexity(score(joint), score(baseline), resamples, config.seed);
}

// ---------------------------------------------------------------------------

void MetricsReport::set(const std::string& name, double value) {
  if (!std::isfinite(value)) throw NumericError("metric " + name + " is not finite");
  values[name] = value;
}

double MetricsReport::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("metric " + name + " missing");
  return it->second;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values) j[k] = v;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  j["_meta"] = m;
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("metrics file must hold a JSON object");
  MetricsReport out;
  for (const auto& [k, v] : j.items()) {
    if (k == "_meta") {
      if (!v.is_object()) throw DataError("_meta must be an object");
      for (const auto& [mk, mv] : v.items()) out.meta[mk] = mv.is_string() ? mv.get<std::string>() : mv.dump();
    } else if (v.is_number()) {
      out.values[k] = v.get<double>();
    } else {
      throw DataError("metric " + k + " is not a number");
    }
  }
  return out;
}

void MetricsReport::write(const std::filesystem::path& path) const { io::write_file(path, to_json()); }

MetricsReport MetricsReport::read(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

}  // namespace graphtext
