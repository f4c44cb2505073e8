#pragma once

#include "graphtext/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace graphtext {

struct CorpusRecord {
  std::string text_id;
  std::string node_id;
  std::string text;
};

struct Dataset {
  Graph graph;
  std::vector<CorpusRecord> corpus;
  /// Per node, in graph order; nullopt for unlabeled nodes.
  std::vector<std::optional<std::string>> labels;

  /// Graph index of every corpus record.
  std::vector<Index> text_nodes() const;
  /// Sorted distinct labels and, per node, the label's position (-1 if none).
  std::vector<int> label_ids(std::vector<std::string>* classes = nullptr) const;
};

/// Reads nodes.jsonl, edges.jsonl and texts.jsonl (plus an optional
/// graph.json holding {"directed": bool}). Errors name file and line.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

struct SbmSpec {
  int communities = 4;
  int nodes_per_community = 25;
  double p_in = 0.3;
  double p_out = 0.02;
  int community_vocab = 40;
  int shared_vocab = 40;
  int texts_per_node = 5;
  int min_text_len = 8;
  int max_text_len = 16;
  /// Probability that a token comes from the node's community vocabulary.
  double community_weight = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Strict JSON parsing: unknown keys are rejected.
SbmSpec parse_sbm_spec(const std::string& json_text);
SbmSpec load_sbm_spec(const std::filesystem::path& path);

/// Undirected stochastic block model with community-coupled texts. Node ids
/// are "n0000", ... and labels "c0", ... Community c owns tokens "c<c>w<j>";
/// shared tokens are "s<j>".
Dataset generate_sbm_corpus(const SbmSpec& spec);

/// {"train": [ids], "val": [ids], "test": [ids]}
void write_splits(const std::filesystem::path& path, const Graph& graph, const DataSplit& split);
DataSplit read_splits(const std::filesystem::path& path, const Graph& graph);

}  // namespace graphtext
