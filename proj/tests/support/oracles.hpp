#pragma once

// Reference implementations used only by tests. Each one follows the
// textbook definition directly and shares no code with the library.

#include "graphtext/autodiff.hpp"
#include "graphtext/graph.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace oracle {

using graphtext::Graph;
using graphtext::Index;
using graphtext::Matrix;

/// Symmetric InfoNCE with integer targets: mean over rows and columns of
/// -log softmax(.)[i], then the average of both directions.
double symmetric_infonce(const Matrix& logits);

/// Cosine of rows of A*A^T built by counting shared neighbors pairwise.
Matrix mutual_neighbor_cosine(const Graph& g);

/// SimRank by the pairwise recurrence
/// s(a,b) = C / (|I(a)| |I(b)|) * sum_{i in I(a), j in I(b)} s(i,j),
/// iterated `iters` times from the identity (or until the change < tol).
Matrix simrank(const Graph& g, double decay, int iters, double tol);

/// Singular values and left singular vectors from the eigen-decomposition
/// of A^T A, descending.
struct Svd {
  Eigen::VectorXd sigma;
  Eigen::MatrixXd u;
};
Svd svd_via_eigen(const Eigen::MatrixXd& a);

/// Fraction of (positive, negative) pairs ordered correctly, ties 0.5.
double pairwise_auc(const std::vector<double>& pos, const std::vector<double>& neg);

/// Sample Pearson correlation via covariance over standard deviations.
double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Central-difference check: `loss` re-evaluates the objective from the
/// current parameter values. Returns the largest relative error
/// |analytic - numeric| / max(|analytic|, |numeric|, floor) over the
/// checked entries (at most `max_entries` per parameter, spread evenly).
struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  std::string worst;
};
GradCheck check_gradients(const graphtext::ParameterRefs& params, const std::function<double()>& loss,
                          const std::function<void()>& analytic, double step = 1e-4, double floor = 1e-7,
                          std::size_t max_entries = 64);

/// Random undirected graph on n nodes with edge probability p.
Graph random_graph(int n, double p, std::uint64_t seed, bool directed = false);

}  // namespace oracle
