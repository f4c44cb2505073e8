#pragma once

#include "graphtext/autodiff.hpp"
#include "graphtext/graph.hpp"
#include "graphtext/similarity.hpp"
#include "graphtext/text_encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace graphtext {

using IndexPairs = std::vector<std::pair<Index, Index>>;

/// Positive (edge) and negative (non-edge) node pairs in split-local indices.
struct EvalPairs {
  IndexPairs positives;
  IndexPairs negatives;
  std::uint64_t seed = 0;
};

/// Probability that a random positive outscores a random negative, ties 0.5.
/// Rank-sum formulation; throws ConfigError when either side is empty.
double roc_auc(const std::vector<double>& positive_scores, const std::vector<double>& negative_scores);

/// AUC of inner-product decoding. Ranking uses the logits, which order pairs
/// exactly like their sigmoids without saturating.
double link_prediction_auc(const Matrix& node_embs, const EvalPairs& pairs);

/// Positives = induced edges of split `s` (local indices into split.nodes(s));
/// negatives = an equal number of uniform non-edges within that split.
EvalPairs sample_eval_pairs(const Graph& graph, const DataSplit& split, std::uint64_t seed,
                            SplitName s = SplitName::Test);

/// accuracy@k for k = 1..k_max. Candidates are ranked by cosine similarity,
/// ties by ascending node index.
std::vector<double> topk_accuracy(const Matrix& text_embs, const Matrix& node_embs, const std::vector<Index>& truth,
                                  int k_max);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr std::size_t kDefaultMaxPairs = 200000;

/// Unordered text pairs: all of them when there are at most `max_pairs`,
/// otherwise `max_pairs` seeded draws without replacement.
IndexPairs text_pairs(Index num_texts, std::size_t max_pairs, std::uint64_t seed);

/// Pearson correlation of cos(text_i, text_j) with cos(node(i), node(j)).
double distance_coupling(const Matrix& text_embs, const Matrix& node_embs, const std::vector<Index>& truth,
                         std::size_t max_pairs = kDefaultMaxPairs, std::uint64_t seed = 0);

/// Pearson correlation of cos(text_i, text_j) with simrank(node(i), node(j)).
double text_simrank_correlation(const Matrix& text_embs, const SimilarityMatrix& simrank,
                                const std::vector<Index>& truth, std::size_t max_pairs = kDefaultMaxPairs,
                                std::uint64_t seed = 0);

// ---- node classification --------------------------------------------------

/// Mean text embedding of every node; throws ConfigError for a node without texts.
Matrix text_mean_embeddings(const Matrix& text_embs, const std::vector<Index>& truth, Index num_nodes);

struct ClassificationScores {
  std::string kind;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  double majority_macro_f1 = 0.0;
  double majority_accuracy = 0.0;
  bool skipped = false;
  std::string reason;
};

/// Macro-F1 over the classes occurring in truth or prediction.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted);

/// Seeded 50/50 node split, L2 logistic regression on the first half, scores
/// on the second. Labels < 0 mark unlabeled rows and are ignored. Skipped
/// (not thrown) when a class is absent from the training half.
ClassificationScores classify_embeddings(const std::string& kind, const Matrix& features,
                                         const std::vector<int>& labels, std::uint64_t seed);

/// text_mean, node and their concatenation node||text_mean.
std::vector<ClassificationScores> classify_nodes(const Matrix& text_mean, const Matrix& node_embs,
                                                 const std::vector<int>& labels, std::uint64_t seed);

// ---- perplexity -----------------------------------------------------------

struct PerplexityComparison {
  double joint_perplexity = 0.0;
  double baseline_perplexity = 0.0;
  /// joint - baseline.
  double difference = 0.0;
  double p_value = 1.0;
};

/// Perplexities exp(mean per-text NLL) and a two-sided percentile-bootstrap
/// p-value for their difference, resampling texts with replacement.
PerplexityComparison bootstrap_perplexity(const std::vector<double>& joint_nll,
                                          const std::vector<double>& baseline_nll, int resamples = 10000,
                                          std::uint64_t seed = 0);

/// Attaches a fresh LM head to copies of both causal encoders, fine-tunes each
/// identically on `train`, then compares them on `test`.
PerplexityComparison perplexity_comparison(const TextEncoder& joint, const TextEncoder& baseline,
                                           const std::vector<std::vector<int>>& train,
                                           const std::vector<std::vector<int>>& test, const LmTrainConfig& config,
                                           int resamples = 10000);

// ---- report ---------------------------------------------------------------

/// Flat metric map plus string provenance, serialized as metrics.json.
struct MetricsReport {
  std::map<std::string, double> values;
  std::map<std::string, std::string> meta;

  /// Throws NumericError for a non-finite value.
  void set(const std::string& name, double value);
  bool has(const std::string& name) const { return values.contains(name); }
  double at(const std::string& name) const;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  void write(const std::filesystem::path& path) const;
  static MetricsReport read(const std::filesystem::path& path);
};

}  // namespace graphtext
