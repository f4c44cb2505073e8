#include "graphtext/graph.hpp"

#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"

#include <Eigen/SVD>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace graphtext {

Graph::Graph(std::vector<std::string> node_ids, std::vector<Edge> edges, bool directed)
    : node_ids_(std::move(node_ids)), directed_(directed) {
  index_.reserve(node_ids_.size());
  for (std::size_t i = 0; i < node_ids_.size(); ++i) {
    if (!index_.emplace(node_ids_[i], static_cast<Index>(i)).second) {
      throw DataError("duplicate node id '" + node_ids_[i] + "'");
    }
  }
  const Index n = num_nodes();
  edges_.reserve(edges.size());
  for (Edge e : edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n) {
      throw DataError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) + ") references a missing node");
    }
    if (e.src == e.dst) continue;
    if (!directed_ && e.src > e.dst) std::swap(e.src, e.dst);
    edges_.push_back(e);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

std::optional<Index> Graph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Graph::has_edge(Index a, Index b) const {
  auto contains = [this](Index s, Index d) { return std::binary_search(edges_.begin(), edges_.end(), Edge{s, d}); };
  if (directed_) return contains(a, b);
  return contains(std::min(a, b), std::max(a, b));
}

Matrix Graph::adjacency() const {
  Matrix a = Matrix::Zero(num_nodes(), num_nodes());
  for (const Edge& e : edges_) {
    a(e.src, e.dst) = 1.0;
    if (!directed_) a(e.dst, e.src) = 1.0;
  }
  return a;
}

NeighborIndex Graph::in_neighbors(bool include_self) const {
  const Index n = num_nodes();
  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(n));
  for (const Edge& e : edges_) {
    lists[e.dst].push_back(e.src);
    if (!directed_) lists[e.src].push_back(e.dst);
  }
  NeighborIndex out;
  out.offsets.reserve(static_cast<std::size_t>(n) + 1);
  out.offsets.push_back(0);
  for (Index i = 0; i < n; ++i) {
    auto& l = lists[i];
    std::sort(l.begin(), l.end());
    out.indices.insert(out.indices.end(), l.begin(), l.end());
    if (include_self) out.indices.push_back(i);
    out.offsets.push_back(static_cast<Index>(out.indices.size()));
  }
  return out;
}

Graph induced_subgraph(const Graph& graph, std::span<const Index> nodes) {
  std::vector<Index> local(static_cast<std::size_t>(graph.num_nodes()), -1);
  std::vector<std::string> ids;
  ids.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= graph.num_nodes()) throw Error("induced_subgraph: node index out of range");
    local[nodes[i]] = static_cast<Index>(i);
    ids.push_back(graph.node_ids()[nodes[i]]);
  }
  std::vector<Edge> edges;
  for (const Edge& e : graph.edges()) {
    if (local[e.src] >= 0 && local[e.dst] >= 0) edges.push_back({local[e.src], local[e.dst]});
  }
  return Graph(std::move(ids), std::move(edges), graph.directed());
}

std::vector<Edge> sample_non_edges(const Graph& graph, std::size_t count, Rng& rng, std::size_t budget_factor) {
  const Index n = graph.num_nodes();
  std::vector<Edge> out;
  if (count == 0) return out;
  if (n < 2) throw DataError("cannot sample non-edges from a graph with fewer than 2 nodes");
  out.reserve(count);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  const std::size_t budget = budget_factor * count;
  std::size_t rejected = 0;
  while (out.size() < count) {
    Index a = pick(rng);
    Index b = pick(rng);
    if (a == b || graph.has_edge(a, b) || graph.has_edge(b, a)) {
      if (++rejected > budget) throw DataError("graph too dense to sample non-edges");
      continue;
    }
    if (!graph.directed() && a > b) std::swap(a, b);
    out.push_back({a, b});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view split_name(SplitName s) {
  switch (s) {
    case SplitName::Train:
      return "train";
    case SplitName::Val:
      return "val";
    case SplitName::Test:
      return "test";
  }
  return "?";
}

SplitName parse_split_name(std::string_view s) {
  if (s == "train") return SplitName::Train;
  if (s == "val") return SplitName::Val;
  if (s == "test") return SplitName::Test;
  throw ConfigError("unknown split '" + std::string(s) + "' (expected train, val or test)");
}

const std::vector<Index>& DataSplit::nodes(SplitName s) const {
  switch (s) {
    case SplitName::Train:
      return train;
    case SplitName::Val:
      return val;
    case SplitName::Test:
      break;
  }
  return test;
}

const std::vector<Edge>& DataSplit::edges(SplitName s) const {
  switch (s) {
    case SplitName::Train:
      return train_edges;
    case SplitName::Val:
      return val_edges;
    case SplitName::Test:
      break;
  }
  return test_edges;
}

DataSplit split_from_nodes(const Graph& graph, std::vector<Index> train, std::vector<Index> val,
                           std::vector<Index> test) {
  const Index n = graph.num_nodes();
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  int which = 0;
  for (auto* part : {&train, &val, &test}) {
    std::sort(part->begin(), part->end());
    for (Index v : *part) {
      if (v < 0 || v >= n) throw DataError("split references a node index out of range");
      if (owner[v] != -1) throw DataError("node '" + graph.node_ids()[v] + "' appears in more than one split");
      owner[v] = which;
    }
    ++which;
  }
  for (Index v = 0; v < n; ++v) {
    if (owner[v] == -1) throw DataError("node '" + graph.node_ids()[v] + "' is not assigned to any split");
  }
  DataSplit out;
  out.train = std::move(train);
  out.val = std::move(val);
  out.test = std::move(test);
  for (const Edge& e : graph.edges()) {
    if (owner[e.src] != owner[e.dst]) continue;
    switch (owner[e.src]) {
      case 0:
        out.train_edges.push_back(e);
        break;
      case 1:
        out.val_edges.push_back(e);
        break;
      default:
        out.test_edges.push_back(e);
        break;
    }
  }
  return out;
}

DataSplit make_splits(const Graph& graph, SplitFractions fractions, std::uint64_t seed) {
  const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
  for (double x : f) {
    if (!(x > 0.0)) throw ConfigError("split fractions must be positive");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const Index n = graph.num_nodes();
  if (n < 3) throw ConfigError("need at least 3 nodes to split");

  // Largest-remainder rounding; ties go to the earlier split.
  std::array<Index, 3> sizes{};
  std::array<double, 3> remainder{};
  Index assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = f[i] * static_cast<double>(n);
    sizes[i] = static_cast<Index>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int k = 0; assigned < n; ++k, ++assigned) sizes[order[k % 3]] += 1;
  for (int i = 0; i < 3; ++i) {
    if (sizes[i] == 0) throw ConfigError("graph too small: split '" + std::string(split_name(static_cast<SplitName>(i))) + "' would be empty");
  }

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  auto first = perm.begin();
  std::vector<Index> train(first, first + sizes[0]);
  std::vector<Index> val(first + sizes[0], first + sizes[0] + sizes[1]);
  std::vector<Index> test(first + sizes[0] + sizes[1], perm.end());
  return split_from_nodes(graph, std::move(train), std::move(val), std::move(test));
}

// ---------------------------------------------------------------------------

namespace {

struct TruncatedSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
};

constexpr Index kDenseSvdLimit = 1500;

TruncatedSvd dense_svd(const Graph& graph) {
  const Eigen::MatrixXd a = graph.adjacency();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  return {svd.matrixU(), svd.singularValues()};
}

// Randomized subspace iteration for large sparse adjacency matrices.
TruncatedSvd randomized_svd(const Graph& graph, Index rank) {
  const Index n = graph.num_nodes();
  std::vector<Eigen::Triplet<double>> trips;
  for (const Edge& e : graph.edges()) {
    trips.emplace_back(e.src, e.dst, 1.0);
    if (!graph.directed()) trips.emplace_back(e.dst, e.src, 1.0);
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  const Eigen::SparseMatrix<double> at = a.transpose();

  const Index width = std::min(n, rank + 16);
  Rng rng(0x5eed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd omega(n, width);
  for (Index i = 0; i < omega.size(); ++i) omega.data()[i] = normal(rng);

  auto orthonormal = [](const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  };
  Eigen::MatrixXd q = orthonormal(a * omega);
  for (int it = 0; it < 8; ++it) {
    q = orthonormal(at * q);
    q = orthonormal(a * q);
  }
  const Eigen::MatrixXd b = (at * q).transpose();  // width x n
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
  return {q * svd.matrixU(), svd.singularValues()};
}

TruncatedSvd truncated(const Graph& graph, Index rank) {
  if (rank < 1) throw ConfigError("svd rank must be >= 1");
  const Index n = graph.num_nodes();
  if (n == 0) throw ConfigError("svd_features: empty graph");
  TruncatedSvd full = n <= kDenseSvdLimit ? dense_svd(graph) : randomized_svd(graph, rank);
  const double top = full.sigma.size() > 0 ? full.sigma(0) : 0.0;
  Index nonzero = 0;
  while (nonzero < full.sigma.size() && full.sigma(nonzero) > 1e-9 * std::max(1.0, top)) ++nonzero;
  const Index keep = std::max<Index>(1, std::min({rank, n, nonzero}));

  TruncatedSvd out;
  out.u = full.u.leftCols(keep);
  out.sigma = full.sigma.head(keep);
  for (Index c = 0; c < keep; ++c) {
    if (c >= nonzero) {
      out.sigma(c) = 0.0;
      continue;
    }
    Index arg = 0;
    out.u.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, c) < 0.0) out.u.col(c) *= -1.0;
  }
  return out;
}

}  // namespace

NodeFeatures svd_features(const Graph& graph, Index rank) {
  TruncatedSvd svd = truncated(graph, rank);
  NodeFeatures f;
  f.matrix = svd.u * svd.sigma.asDiagonal();
  return f;
}

Eigen::VectorXd truncated_singular_values(const Graph& graph, Index rank) { return truncated(graph, rank).sigma; }

void write_features(const std::filesystem::path& path, const NodeFeatures& features) {
  io::ByteWriter w;
  w.bytes("CGFEAT1");
  w.u32(static_cast<std::uint32_t>(features.matrix.rows()));
  w.u32(static_cast<std::uint32_t>(features.matrix.cols()));
  for (Index i = 0; i < features.matrix.size(); ++i) w.f32(static_cast<float>(features.matrix.data()[i]));
  io::write_file(path, w.buffer());
}

NodeFeatures read_features(const std::filesystem::path& path) {
  const std::string data = io::read_file(path);
  io::ByteReader r(data, path.string());
  if (r.bytes(7) != "CGFEAT1") throw DataError(path.string() + ": bad feature file magic");
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (r.remaining() != static_cast<std::size_t>(rows) * cols * 4) throw DataError(path.string() + ": size mismatch");
  NodeFeatures f;
  f.matrix.resize(rows, cols);
  for (Index i = 0; i < f.matrix.size(); ++i) f.matrix.data()[i] = r.f32();
  return f;
}

}  // namespace graphtext
