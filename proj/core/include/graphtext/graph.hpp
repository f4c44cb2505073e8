#pragma once

#include "graphtext/autodiff.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphtext {

struct Edge {
  Index src = 0;
  Index dst = 0;

  auto operator<=>(const Edge&) const = default;
};

/// Immutable graph over opaque string node ids.
///
/// Construction canonicalizes the edge list: self-loops are removed,
/// duplicates collapse, and for undirected graphs every edge is stored with
/// src <= dst. Edges are kept sorted.
class Graph {
 public:
  Graph() = default;
  Graph(std::vector<std::string> node_ids, std::vector<Edge> edges, bool directed);

  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool directed() const { return directed_; }
  Index num_nodes() const { return static_cast<Index>(node_ids_.size()); }
  std::size_t num_edges() const { return edges_.size(); }

  std::optional<Index> find(std::string_view id) const;
  /// Undirected graphs match either orientation.
  bool has_edge(Index a, Index b) const;

  /// Dense adjacency; both triangles are filled for undirected graphs.
  Matrix adjacency() const;

  /// Message sources of every node: in-neighbors for directed graphs, all
  /// neighbors otherwise. When `include_self` is set each list also holds
  /// the node itself (last).
  NeighborIndex in_neighbors(bool include_self) const;

 private:
  std::vector<std::string> node_ids_;
  std::vector<Edge> edges_;
  bool directed_ = false;
  std::unordered_map<std::string, Index> index_;
};

/// Subgraph on `nodes` (in the given order) keeping edges with both ends inside.
Graph induced_subgraph(const Graph& graph, std::span<const Index> nodes);

/// Uniformly sampled node pairs (a != b) that are not edges, as (a, b) with
/// a < b for undirected graphs. Throws DataError once more than
/// budget_factor * count draws were rejected.
std::vector<Edge> sample_non_edges(const Graph& graph, std::size_t count, Rng& rng, std::size_t budget_factor = 100);

enum class SplitName { Train, Val, Test };

std::string_view split_name(SplitName s);
SplitName parse_split_name(std::string_view s);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/// Node-level partition. Node lists hold global indices in ascending order;
/// edge lists hold the edges induced inside each split (global indices).
struct DataSplit {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
  std::vector<Edge> train_edges;
  std::vector<Edge> val_edges;
  std::vector<Edge> test_edges;

  const std::vector<Index>& nodes(SplitName s) const;
  const std::vector<Edge>& edges(SplitName s) const;
};

/// Seeded shuffle, then slicing by largest-remainder rounded fractions.
DataSplit make_splits(const Graph& graph, SplitFractions fractions, std::uint64_t seed);

/// Rebuilds a split from explicit node lists (e.g. a splits.json file).
DataSplit split_from_nodes(const Graph& graph, std::vector<Index> train, std::vector<Index> val,
                           std::vector<Index> test);

struct NodeFeatures {
  Matrix matrix;

  Index rank() const { return matrix.cols(); }
  Index rows() const { return matrix.rows(); }
};

inline constexpr Index kDefaultFeatureRank = 64;

/// Truncated SVD features U * diag(sigma) of the adjacency matrix. The column
/// count is min(rank, |V|, #nonzero singular values), at least one. Columns are
/// ordered by descending singular value and each column's largest-magnitude
/// entry is positive.
NodeFeatures svd_features(const Graph& graph, Index rank = kDefaultFeatureRank);

/// Singular values matching the columns of svd_features.
Eigen::VectorXd truncated_singular_values(const Graph& graph, Index rank = kDefaultFeatureRank);

/// Binary layout: magic "CGFEAT1", u32 rows, u32 cols, row-major little-endian float32.
void write_features(const std::filesystem::path& path, const NodeFeatures& features);
NodeFeatures read_features(const std::filesystem::path& path);

}  // namespace graphtext
