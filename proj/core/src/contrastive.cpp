#include "graphtext/contrastive.hpp"

#include "graphtext/errors.hpp"

#include <algorithm>
#include <unordered_set>

namespace graphtext {

Adapter::Adapter(const std::string& name, AdapterConfig config, Rng& rng)
    : config_(config),
      fc1_(name + ".fc1", config.in_dim, config.out_dim, rng),
      fc2_(name + ".fc2", config.out_dim, config.out_dim, rng),
      norm_(name + ".norm", config.out_dim) {
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) throw ConfigError("adapter dropout must lie in [0, 1)");
}

template <class Self>
ad::Var Adapter::forward_impl(Self& self, ad::Tape& tape, const ad::Var& x, bool train, Rng& rng) {
  if (x.cols() != self.config_.in_dim) {
    throw ConfigError("adapter expects width " + std::to_string(self.config_.in_dim) + ", got " +
                      std::to_string(x.cols()));
  }
  ad::Var h = ad::gelu(LinearParams::apply(self.fc1_, tape, x));
  h = LayerNormParams::apply(self.norm_, tape, LinearParams::apply(self.fc2_, tape, h));
  return ad::dropout(h, self.config_.dropout, train, rng);
}

ad::Var Adapter::forward(ad::Tape& tape, const ad::Var& x, bool train, Rng& rng) {
  return forward_impl(*this, tape, x, train, rng);
}

ad::Var Adapter::forward(ad::Tape& tape, const ad::Var& x, bool train, Rng& rng) const {
  return forward_impl(*this, tape, x, train, rng);
}

ParameterRefs Adapter::parameters() {
  ParameterRefs out;
  fc1_.collect(out);
  fc2_.collect(out);
  norm_.collect(out);
  return out;
}

Matrix adapt(const Adapter& adapter, const Matrix& embeddings) {
  ad::Tape tape;
  Rng unused(0);
  return adapter.forward(tape, tape.constant(embeddings), false, unused).value();
}

Temperature::Temperature(double init) : log_tau("log_temperature", Matrix::Constant(1, 1, init)) {
  round_to_float(log_tau.value);
  project();
}

void Temperature::project() {
  double& t = log_tau.value(0, 0);
  t = std::clamp(t, lo, hi);
  // Keep the stored value float-representable without leaving the bounds.
  const float f = static_cast<float>(t);
  if (static_cast<double>(f) < lo) {
    t = static_cast<double>(std::nextafter(f, 1.0f));
  } else if (static_cast<double>(f) > hi) {
    t = static_cast<double>(std::nextafter(f, -1.0f));
  } else {
    t = static_cast<double>(f);
  }
}

ad::Var cosine_logits(const ad::Var& text_embs, const ad::Var& node_embs, const ad::Var& log_tau) {
  if (text_embs.cols() != node_embs.cols()) throw ConfigError("text and node embeddings differ in width");
  return ad::scale_by_exp(ad::matmul_nt(ad::row_normalize(text_embs), ad::row_normalize(node_embs)), log_tau);
}

Matrix cosine_logit_matrix(const Matrix& text_embs, const Matrix& node_embs, double log_tau) {
  ad::Tape tape;
  return cosine_logits(tape.constant(text_embs), tape.constant(node_embs), tape.constant(Matrix::Constant(1, 1, log_tau)))
      .value();
}

// ---------------------------------------------------------------------------

TargetDistributions target_distributions(const std::vector<Index>& batch_nodes, double alpha,
                                         const BatchSimilarityRows* text_rows, const BatchSimilarityRows* node_rows) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  std::unordered_set<Index> seen;
  for (Index v : batch_nodes) {
    if (!seen.insert(v).second) throw ConfigError("batch contains duplicate node " + std::to_string(v));
  }
  const Index n = static_cast<Index>(batch_nodes.size());
  if (alpha > 0.0) {
    if (text_rows == nullptr || node_rows == nullptr) throw ConfigError("alpha > 0 requires similarity rows");
    if (text_rows->rows.rows() != n || node_rows->rows.rows() != n) throw ConfigError("similarity rows do not match batch");
  }
  auto mix = [&](const BatchSimilarityRows* rows) {
    Matrix d = Matrix::Identity(n, n);
    if (alpha == 0.0) return d;
    for (Index i = 0; i < n; ++i) {
      if (rows->degenerate_rows.contains(i)) continue;
      d.row(i) = (1.0 - alpha) * d.row(i) + alpha * rows->rows.row(i);
    }
    return d;
  };
  TargetDistributions out;
  out.alpha = alpha;
  out.text = mix(text_rows);
  out.node = mix(node_rows);
  return out;
}

LossAndGrad contrastive_loss_and_grad(const Matrix& logits, const TargetDistributions& targets) {
  const Index n = logits.rows();
  if (logits.cols() != n || n == 0) throw ConfigError("logit matrix must be square and non-empty");
  if (targets.text.rows() != n || targets.text.cols() != n || targets.node.rows() != n || targets.node.cols() != n) {
    throw ConfigError("target distributions do not match the logit matrix");
  }
  if (!logits.allFinite()) throw NumericError("logit matrix contains non-finite values");
  for (const Matrix* d : {&targets.text, &targets.node}) {
    for (Index i = 0; i < n; ++i) {
      if (std::abs(d->row(i).sum() - 1.0) > 1e-6 || d->row(i).minCoeff() < 0.0) {
        throw ConfigError("target row " + std::to_string(i) + " is not a probability distribution");
      }
    }
  }

  LossAndGrad out;
  out.grad = Matrix::Zero(n, n);
  double total = 0.0;
  const double w = 1.0 / (2.0 * static_cast<double>(n));
  // Text rows: softmax over nodes.
  for (Index i = 0; i < n; ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    const Eigen::RowVectorXd logp = logits.row(i).array() - lse;
    const double mass = targets.text.row(i).sum();
    total -= targets.text.row(i).dot(logp);
    out.grad.row(i) += w * (mass * logp.array().exp().matrix() - targets.text.row(i));
  }
  // Node columns: softmax over texts.
  for (Index i = 0; i < n; ++i) {
    const double m = logits.col(i).maxCoeff();
    const double lse = m + std::log((logits.col(i).array() - m).exp().sum());
    const Eigen::VectorXd logp = logits.col(i).array() - lse;
    const double mass = targets.node.row(i).sum();
    total -= targets.node.row(i).dot(logp.transpose());
    out.grad.col(i) += w * (mass * logp.array().exp().matrix() - targets.node.row(i).transpose());
  }
  out.loss = total * w;
  return out;
}

double contrastive_loss(const Matrix& logits, const TargetDistributions& targets) {
  return contrastive_loss_and_grad(logits, targets).loss;
}

ad::Var contrastive_loss(const ad::Var& logits, const TargetDistributions& targets) {
  LossAndGrad lg = contrastive_loss_and_grad(logits.value(), targets);
  Matrix out(1, 1);
  out(0, 0) = lg.loss;
  return logits.tape().record(std::move(out), {logits}, [logits, grad = std::move(lg.grad)](ad::Tape& t, const Matrix& g) {
    t.accumulate(logits, grad * g(0, 0));
  });
}

}  // namespace graphtext
