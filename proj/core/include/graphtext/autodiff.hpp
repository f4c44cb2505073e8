#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records every operation of one forward pass; calling
// backward() on a 1x1 result accumulates gradients into the Parameters that
// entered the tape. All arithmetic is 64-bit.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace graphtext {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// A named trainable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v);

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

using ParameterRefs = std::vector<Parameter*>;

void zero_grads(const ParameterRefs& params);

/// Rounds every entry to the nearest 32-bit float, so that parameters survive
/// a float32 checkpoint round trip bit-for-bit.
void round_to_float(Matrix& m);

/// Contiguous run of rows [offset, offset + length) belonging to one sequence.
struct Segment {
  Index offset = 0;
  Index length = 0;
};

/// Compressed neighbor lists: the neighbors of node i are
/// indices[offsets[i] .. offsets[i+1]).
struct NeighborIndex {
  std::vector<Index> offsets;
  std::vector<Index> indices;

  Index num_nodes() const { return offsets.empty() ? 0 : static_cast<Index>(offsets.size()) - 1; }
};

namespace ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Receives the gradient of the loss w.r.t. the node's output.
  using BackwardFn = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Tracked leaf: backward() adds into p.grad.
  Var parameter(Parameter& p);
  /// Untracked leaf for inference through const modules.
  Var parameter(const Parameter& p) { return constant(p.value); }

  /// Records an operation. `fn` is dropped when no input requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn);

  const Matrix& value(const Var& v) const { return nodes_[v.id_].value; }
  bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }

  /// Adds `g` into the gradient slot of `v` (no-op for constants).
  void accumulate(const Var& v, const Matrix& g);
  /// Mutable gradient slot of `v`, zero-initialized on first access.
  Matrix& grad(const Var& v);

  /// Back-propagates from a 1x1 node; parameter gradients are added to
  /// Parameter::grad.
  void backward(const Var& root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
};

// ---- linear algebra -------------------------------------------------------

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// x + broadcast of the 1 x cols row vector `bias` to every row.
Var add_bias(const Var& x, const Var& bias);
Var scale(const Var& x, double s);
/// Affine layer: x * w + b.
Var linear(const Var& x, const Var& w, const Var& b);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& x, const std::vector<Index>& rows);
Var sum(const Var& x);

// ---- elementwise ----------------------------------------------------------

Var gelu(const Var& x);
Var elu(const Var& x);

/// Inverted dropout. Identity when `train` is false or p == 0.
Var dropout(const Var& x, double p, bool train, Rng& rng);

// ---- normalization --------------------------------------------------------

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
/// Divides every row by its Euclidean norm. Throws NumericError on a zero row.
Var row_normalize(const Var& x);
/// x * exp(log_scale) where log_scale is 1x1.
Var scale_by_exp(const Var& x, const Var& log_scale);

// ---- sequence ops ---------------------------------------------------------

/// Rows of `table` selected by `ids`.
Var embedding(const Var& table, const std::vector<int>& ids);

/// Multi-head scaled dot-product self-attention over packed sequences.
/// `qkv` holds [Q | K | V] column blocks of width d each; each Segment is an
/// independent sequence. Returns T x d.
Var segment_attention(const Var& qkv, const std::vector<Segment>& segments, int heads, bool causal);

/// Mean of the rows of each segment: one output row per segment.
Var segment_mean(const Var& x, const std::vector<Segment>& segments);

// ---- graph ops ------------------------------------------------------------

/// Graph attention: for each head, node i aggregates h_j over j in
/// neighbors(i) with weights softmax_j(LeakyReLU(a_src.h_j + a_dst.h_i)).
/// `h` is N x (heads*F), `att_src` and `att_dst` are heads x F. Heads are
/// concatenated (N x heads*F) or averaged (N x F). If `attention_out` is
/// given it receives one vector per head aligned with neighbors.indices.
Var gat_attention(const Var& h, const Var& att_src, const Var& att_dst, const NeighborIndex& neighbors,
                  int heads, bool concat, double negative_slope,
                  std::vector<std::vector<double>>* attention_out = nullptr);

/// Dot products x_i . x_j for each pair, as a P x 1 column.
Var pair_dot(const Var& x, const std::vector<std::pair<Index, Index>>& pairs);

// ---- losses ---------------------------------------------------------------

/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.
Var bce_with_logits(const Var& logits, const std::vector<double>& labels);

/// sum_r weight_r * (-log softmax(logits_r)[target_r]); rows with target < 0
/// are skipped.
Var weighted_cross_entropy(const Var& logits, const std::vector<int>& targets, const std::vector<double>& weights);

}  // namespace ad
}  // namespace graphtext
