#include "graphtext/similarity.hpp"

#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace graphtext {

SimilarityMatrix mutual_neighbor_similarity(const Graph& graph) {
  if (graph.directed()) {
    throw ConfigError("mutual-neighbor similarity is only defined for undirected graphs");
  }
  const Matrix a = graph.adjacency();
  const Matrix m = a * a.transpose();
  const Matrix gram = m * m.transpose();
  const Eigen::VectorXd sq = gram.diagonal();
  const Index n = m.rows();

  SimilarityMatrix out;
  out.kind = SimilarityKind::MutualNeighborCosine;
  out.values = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (sq(i) == 0.0) continue;
    out.values(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      if (sq(j) == 0.0) continue;
      const double c = std::clamp(gram(i, j) / std::sqrt(sq(i) * sq(j)), 0.0, 1.0);
      out.values(i, j) = c;
      out.values(j, i) = c;
    }
  }
  return out;
}

SimilarityMatrix simrank(const Graph& graph, SimRankOptions options, SimRankTrace* trace) {
  if (!(options.decay > 0.0 && options.decay < 1.0)) throw ConfigError("simrank decay must lie in (0, 1)");
  if (options.max_iters < 1) throw ConfigError("simrank max_iters must be >= 1");
  const Index n = graph.num_nodes();
  const NeighborIndex nbrs = graph.in_neighbors(false);

  // P(a, i) = 1/|I(a)| for i in I(a); then S' = C * P S P^T with a unit diagonal.
  Matrix p = Matrix::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    const Index b = nbrs.offsets[a];
    const Index e = nbrs.offsets[a + 1];
    for (Index s = b; s < e; ++s) p(a, nbrs.indices[s]) = 1.0 / static_cast<double>(e - b);
  }
  Matrix s = Matrix::Identity(n, n);
  if (trace != nullptr) trace->max_change.clear();
  for (int it = 0; it < options.max_iters; ++it) {
    Matrix next = options.decay * (p * s * p.transpose());
    next.diagonal().setOnes();
    const double change = n > 0 ? (next - s).cwiseAbs().maxCoeff() : 0.0;
    s = std::move(next);
    if (trace != nullptr) trace->max_change.push_back(change);
    if (change < options.tol) break;
  }
  SimilarityMatrix out;
  out.kind = SimilarityKind::SimRank;
  out.values = s.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

BatchSimilarityRows batch_similarity_rows(const SimilarityMatrix& sim, const std::vector<Index>& batch_nodes) {
  const Index nb = static_cast<Index>(batch_nodes.size());
  std::unordered_set<Index> seen;
  for (Index v : batch_nodes) {
    if (v < 0 || v >= sim.size()) throw ConfigError("batch node index out of range");
    if (!seen.insert(v).second) throw ConfigError("batch contains duplicate node " + std::to_string(v));
  }
  BatchSimilarityRows out;
  out.rows = Matrix::Zero(nb, nb);
  for (Index i = 0; i < nb; ++i) {
    double total = 0.0;
    for (Index k = 0; k < nb; ++k) {
      out.rows(i, k) = sim.values(batch_nodes[i], batch_nodes[k]);
      total += out.rows(i, k);
    }
    if (total > 0.0) {
      out.rows.row(i) /= total;
    } else {
      out.rows.row(i).setZero();
      out.degenerate_rows.insert(i);
    }
  }
  return out;
}

void write_similarity(const std::filesystem::path& path, const SimilarityMatrix& sim) {
  io::ByteWriter w;
  w.bytes("CGSIM1");
  w.u32(static_cast<std::uint32_t>(sim.size()));
  w.u8(static_cast<std::uint8_t>(sim.kind));
  for (Index i = 0; i < sim.values.size(); ++i) w.f32(static_cast<float>(sim.values.data()[i]));
  io::write_file(path, w.buffer());
}

SimilarityMatrix read_similarity(const std::filesystem::path& path) {
  const std::string data = io::read_file(path);
  io::ByteReader r(data, path.string());
  if (r.bytes(6) != "CGSIM1") throw DataError(path.string() + ": bad similarity file magic");
  const std::uint32_t n = r.u32();
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw DataError(path.string() + ": unknown similarity kind");
  if (r.remaining() != static_cast<std::size_t>(n) * n * 4) throw DataError(path.string() + ": size mismatch");
  SimilarityMatrix sim;
  sim.kind = static_cast<SimilarityKind>(kind);
  sim.values.resize(n, n);
  for (Index i = 0; i < sim.values.size(); ++i) sim.values.data()[i] = r.f32();
  return sim;
}

}  // namespace graphtext
