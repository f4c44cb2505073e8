#pragma once

#include "graphtext/autodiff.hpp"
#include "graphtext/graph.hpp"

#include <filesystem>
#include <set>
#include <vector>

namespace graphtext {

enum class SimilarityKind : std::uint8_t { MutualNeighborCosine = 0, SimRank = 1 };

struct SimilarityMatrix {
  Matrix values;
  SimilarityKind kind = SimilarityKind::MutualNeighborCosine;

  Index size() const { return values.rows(); }
};

/// Cosine similarity between rows of A*A^T. Rows that are entirely zero
/// (isolated nodes) score 0 against every node, themselves included.
/// Throws ConfigError for directed graphs.
SimilarityMatrix mutual_neighbor_similarity(const Graph& graph);

struct SimRankOptions {
  double decay = 0.8;
  int max_iters = 20;
  double tol = 1e-4;
};

/// Max entrywise change per iteration, for convergence diagnostics.
struct SimRankTrace {
  std::vector<double> max_change;
};

/// Fixed-point SimRank over in-neighbor sets (all neighbors when undirected).
SimilarityMatrix simrank(const Graph& graph, SimRankOptions options = {}, SimRankTrace* trace = nullptr);

/// Row-normalized similarity restricted to a node-unique batch.
struct BatchSimilarityRows {
  Matrix rows;
  std::set<Index> degenerate_rows;
};

/// Row i holds sim(batch[i], batch[k]) / sum_k; zero-sum rows are left at zero
/// and reported as degenerate. Throws ConfigError on duplicate batch nodes.
BatchSimilarityRows batch_similarity_rows(const SimilarityMatrix& sim, const std::vector<Index>& batch_nodes);

/// Binary layout: magic "CGSIM1", u32 |V|, u8 kind, row-major little-endian float32.
void write_similarity(const std::filesystem::path& path, const SimilarityMatrix& sim);
SimilarityMatrix read_similarity(const std::filesystem::path& path);

}  // namespace graphtext
