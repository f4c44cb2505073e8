#include "graphtext/autodiff.hpp"

#include "graphtext/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace graphtext {

Parameter::Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
  grad.setZero(value.rows(), value.cols());
}

void zero_grads(const ParameterRefs& params) {
  for (Parameter* p : params) p->zero_grad();
}

void round_to_float(Matrix& m) {
  for (Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
}

namespace ad {

const Matrix& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [this](const Var& v) { return requires_grad(v); });
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad(const Var& v) {
  Node& n = nodes_[v.id_];
  if (!n.has_grad) {
    n.grad.setZero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  if (!nodes_[v.id_].requires_grad) return;
  grad(v) += g;
}

void Tape::backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) throw Error("backward: root must be a 1x1 value");
  grad(root).setConstant(1.0);
  for (int i = root.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) {
      // The closure may append to other nodes' gradients but never to its own.
      const Matrix g = n.grad;
      n.backward(*this, g);
    }
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw Error("matmul: inner dimension mismatch");
  Tape& t = a.tape();
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw Error("matmul_nt: inner dimension mismatch");
  Tape& t = a.tape();
  return t.record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value());
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Var add(const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("add: shape mismatch");
  Tape& t = a.tape();
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_bias(const Var& x, const Var& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) throw Error("add_bias: bias shape mismatch");
  Tape& t = x.tape();
  Matrix out = x.value().rowwise() + bias.value().row(0);
  return t.record(std::move(out), {x, bias}, [x, bias](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
  });
}

Var scale(const Var& x, double s) {
  Tape& t = x.tape();
  return t.record(x.value() * s, {x}, [x, s](Tape& t, const Matrix& g) { t.accumulate(x, g * s); });
}

Var linear(const Var& x, const Var& w, const Var& b) { return add_bias(matmul(x, w), b); }

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw Error("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  Tape& t = parts.front().tape();
  return t.record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
    Index c = 0;
    for (const Var& p : parts) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var gather_rows(const Var& x, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= x.rows()) throw Error("gather_rows: index out of range");
    out.row(static_cast<Index>(r)) = x.value().row(rows[r]);
  }
  Tape& t = x.tape();
  return t.record(std::move(out), {x}, [x, rows](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad(x);
    for (std::size_t r = 0; r < rows.size(); ++r) gx.row(rows[r]) += g.row(static_cast<Index>(r));
  });
}

Var sum(const Var& x) {
  Tape& t = x.tape();
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return t.record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

// ---------------------------------------------------------------------------

Var gelu(const Var& x) {
  const Matrix& v = x.value();
  Matrix out(v.rows(), v.cols());
  for (Index i = 0; i < v.size(); ++i) {
    const double z = v.data()[i];
    out.data()[i] = 0.5 * z * (1.0 + std::erf(z / std::numbers::sqrt2));
  }
  Tape& t = x.tape();
  return t.record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    const Matrix& v = x.value();
    Matrix gx(v.rows(), v.cols());
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (Index i = 0; i < v.size(); ++i) {
      const double z = v.data()[i];
      const double cdf = 0.5 * (1.0 + std::erf(z / std::numbers::sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * z * z);
      gx.data()[i] = g.data()[i] * (cdf + z * pdf);
    }
    t.accumulate(x, gx);
  });
}

Var elu(const Var& x) {
  const Matrix& v = x.value();
  Matrix out = v.unaryExpr([](double z) { return z > 0.0 ? z : std::expm1(z); });
  Tape& t = x.tape();
  return t.record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    const Matrix d = x.value().unaryExpr([](double z) { return z > 0.0 ? 1.0 : std::exp(z); });
    t.accumulate(x, g.cwiseProduct(d));
  });
}

Var dropout(const Var& x, double p, bool train, Rng& rng) {
  if (!train || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : 0.0;
  Tape& t = x.tape();
  Matrix out = x.value().cwiseProduct(mask);
  return t.record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

// ---------------------------------------------------------------------------

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (gain.cols() != d || bias.cols() != d) throw Error("layer_norm: parameter width mismatch");
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Index r = 0; r < n; ++r) {
    const auto row = x.value().row(r);
    const double mu = row.mean();
    const double var = (row.array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (row.array() - mu) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  Tape& t = x.tape();
  return t.record(std::move(out), {x, gain, bias},
                  [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, const Matrix& g) {
                    const Index d = xhat.cols();
                    if (t.requires_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                    if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
                    if (!t.requires_grad(x)) return;
                    Matrix dxhat = g.array().rowwise() * gain.value().row(0).array();
                    Matrix gx(xhat.rows(), d);
                    for (Index r = 0; r < xhat.rows(); ++r) {
                      const double m1 = dxhat.row(r).mean();
                      const double m2 = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(d);
                      gx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
                    }
                    t.accumulate(x, gx);
                  });
}

Var row_normalize(const Var& x) {
  const Matrix& v = x.value();
  Eigen::VectorXd norms = v.rowwise().norm();
  for (Index r = 0; r < norms.size(); ++r) {
    if (!(norms(r) > 0.0) || !std::isfinite(norms(r))) {
      throw NumericError("row_normalize: row " + std::to_string(r) + " has zero or non-finite norm");
    }
  }
  Matrix out = v.array().colwise() / norms.array();
  Tape& t = x.tape();
  Matrix unit = out;
  return t.record(std::move(out), {x}, [x, unit = std::move(unit), norms = std::move(norms)](Tape& t, const Matrix& g) {
    Matrix gx(unit.rows(), unit.cols());
    for (Index r = 0; r < unit.rows(); ++r) {
      const double proj = g.row(r).dot(unit.row(r));
      gx.row(r) = (g.row(r) - proj * unit.row(r)) / norms(r);
    }
    t.accumulate(x, gx);
  });
}

Var scale_by_exp(const Var& x, const Var& log_scale) {
  if (log_scale.rows() != 1 || log_scale.cols() != 1) throw Error("scale_by_exp: log scale must be 1x1");
  const double s = std::exp(log_scale.value()(0, 0));
  Tape& t = x.tape();
  return t.record(x.value() * s, {x, log_scale}, [x, log_scale, s](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, g * s);
    if (t.requires_grad(log_scale)) {
      Matrix gl(1, 1);
      gl(0, 0) = g.cwiseProduct(x.value()).sum() * s;
      t.accumulate(log_scale, gl);
    }
  });
}

// ---------------------------------------------------------------------------

Var embedding(const Var& table, const std::vector<int>& ids) {
  Matrix out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= table.rows()) throw Error("embedding: id " + std::to_string(ids[r]) + " out of range");
    out.row(static_cast<Index>(r)) = table.value().row(ids[r]);
  }
  Tape& t = table.tape();
  return t.record(std::move(out), {table}, [table, ids](Tape& t, const Matrix& g) {
    Matrix& gt = t.grad(table);
    for (std::size_t r = 0; r < ids.size(); ++r) gt.row(ids[r]) += g.row(static_cast<Index>(r));
  });
}

namespace {

void softmax_rows_inplace(Matrix& s) {
  for (Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
}

}  // namespace

Var segment_attention(const Var& qkv, const std::vector<Segment>& segments, int heads, bool causal) {
  if (qkv.cols() % 3 != 0) throw Error("segment_attention: qkv width must be 3*d");
  const Index d = qkv.cols() / 3;
  if (heads <= 0 || d % heads != 0) throw Error("segment_attention: width not divisible by heads");
  const Index dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix& in = qkv.value();
  Matrix out = Matrix::Zero(in.rows(), d);

  // probs[s * heads + h] is the L x L attention matrix of segment s, head h.
  std::vector<Matrix> probs(segments.size() * static_cast<std::size_t>(heads));
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    for (int h = 0; h < heads; ++h) {
      const auto q = in.block(seg.offset, h * dh, seg.length, dh);
      const auto k = in.block(seg.offset, d + h * dh, seg.length, dh);
      const auto v = in.block(seg.offset, 2 * d + h * dh, seg.length, dh);
      Matrix scores = (q * k.transpose()) * inv_sqrt;
      if (causal) {
        for (Index i = 0; i < seg.length; ++i) {
          for (Index j = i + 1; j < seg.length; ++j) scores(i, j) = -std::numeric_limits<double>::infinity();
        }
      }
      softmax_rows_inplace(scores);
      out.block(seg.offset, h * dh, seg.length, dh) = scores * v;
      probs[s * heads + h] = std::move(scores);
    }
  }
  Tape& t = qkv.tape();
  return t.record(std::move(out), {qkv},
                  [qkv, segments, heads, d, dh, inv_sqrt, probs = std::move(probs)](Tape& t, const Matrix& g) {
                    const Matrix& in = qkv.value();
                    Matrix& gin = t.grad(qkv);
                    for (std::size_t s = 0; s < segments.size(); ++s) {
                      const Segment seg = segments[s];
                      for (int h = 0; h < heads; ++h) {
                        const Matrix& p = probs[s * heads + h];
                        const auto q = in.block(seg.offset, h * dh, seg.length, dh);
                        const auto k = in.block(seg.offset, d + h * dh, seg.length, dh);
                        const auto v = in.block(seg.offset, 2 * d + h * dh, seg.length, dh);
                        const auto go = g.block(seg.offset, h * dh, seg.length, dh);
                        const Matrix dp = go * v.transpose();
                        Matrix ds = p.cwiseProduct(dp);
                        const Eigen::VectorXd rs = ds.rowwise().sum();
                        ds -= p.cwiseProduct(rs.replicate(1, p.cols()));
                        ds *= inv_sqrt;
                        gin.block(seg.offset, h * dh, seg.length, dh) += ds * k;
                        gin.block(seg.offset, d + h * dh, seg.length, dh) += ds.transpose() * q;
                        gin.block(seg.offset, 2 * d + h * dh, seg.length, dh) += p.transpose() * go;
                      }
                    }
                  });
}

Var segment_mean(const Var& x, const std::vector<Segment>& segments) {
  Matrix out(static_cast<Index>(segments.size()), x.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    if (seg.length <= 0) throw Error("segment_mean: empty segment");
    out.row(static_cast<Index>(s)) = x.value().middleRows(seg.offset, seg.length).colwise().mean();
  }
  Tape& t = x.tape();
  return t.record(std::move(out), {x}, [x, segments](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad(x);
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const Segment seg = segments[s];
      const auto row = g.row(static_cast<Index>(s)) / static_cast<double>(seg.length);
      for (Index r = 0; r < seg.length; ++r) gx.row(seg.offset + r) += row;
    }
  });
}

// ---------------------------------------------------------------------------

Var gat_attention(const Var& h, const Var& att_src, const Var& att_dst, const NeighborIndex& neighbors, int heads,
                  bool concat, double negative_slope, std::vector<std::vector<double>>* attention_out) {
  const Index n = h.rows();
  if (neighbors.num_nodes() != n) throw Error("gat_attention: neighbor index does not match node count");
  if (heads <= 0 || h.cols() % heads != 0) throw Error("gat_attention: width not divisible by heads");
  const Index f = h.cols() / heads;
  if (att_src.rows() != heads || att_src.cols() != f || att_dst.rows() != heads || att_dst.cols() != f) {
    throw Error("gat_attention: attention vector shape mismatch");
  }
  const Matrix& hv = h.value();
  const std::size_t num_edges = neighbors.indices.size();

  // Per head: source/destination scores, pre-activation and normalized weights per edge slot.
  std::vector<Eigen::VectorXd> src_score(heads), dst_score(heads);
  std::vector<std::vector<double>> pre(heads, std::vector<double>(num_edges));
  std::vector<std::vector<double>> alpha(heads, std::vector<double>(num_edges));
  Matrix out = Matrix::Zero(n, concat ? heads * f : f);
  const double head_scale = concat ? 1.0 : 1.0 / heads;

  for (int k = 0; k < heads; ++k) {
    const auto hk = hv.middleCols(k * f, f);
    src_score[k] = hk * att_src.value().row(k).transpose();
    dst_score[k] = hk * att_dst.value().row(k).transpose();
    for (Index i = 0; i < n; ++i) {
      const Index b = neighbors.offsets[i];
      const Index e = neighbors.offsets[i + 1];
      if (b == e) continue;
      double m = -std::numeric_limits<double>::infinity();
      for (Index s = b; s < e; ++s) {
        const double z = src_score[k](neighbors.indices[s]) + dst_score[k](i);
        pre[k][s] = z;
        const double a = z > 0.0 ? z : negative_slope * z;
        alpha[k][s] = a;
        m = std::max(m, a);
      }
      double total = 0.0;
      for (Index s = b; s < e; ++s) {
        alpha[k][s] = std::exp(alpha[k][s] - m);
        total += alpha[k][s];
      }
      for (Index s = b; s < e; ++s) {
        alpha[k][s] /= total;
        const Index j = neighbors.indices[s];
        if (concat) {
          out.block(i, k * f, 1, f) += alpha[k][s] * hk.row(j);
        } else {
          out.row(i) += (alpha[k][s] * head_scale) * hk.row(j);
        }
      }
    }
  }
  if (attention_out != nullptr) *attention_out = alpha;

  Tape& t = h.tape();
  return t.record(
      std::move(out), {h, att_src, att_dst},
      [h, att_src, att_dst, neighbors, heads, f, concat, negative_slope, head_scale, pre = std::move(pre),
       alpha = std::move(alpha)](Tape& t, const Matrix& g) {
        const Matrix& hv = h.value();
        const Index n = hv.rows();
        Matrix gh = Matrix::Zero(hv.rows(), hv.cols());
        Matrix gsrc = Matrix::Zero(heads, f);
        Matrix gdst = Matrix::Zero(heads, f);
        for (int k = 0; k < heads; ++k) {
          const auto hk = hv.middleCols(k * f, f);
          Eigen::VectorXd d_src = Eigen::VectorXd::Zero(n);
          Eigen::VectorXd d_dst = Eigen::VectorXd::Zero(n);
          for (Index i = 0; i < n; ++i) {
            const Index b = neighbors.offsets[i];
            const Index e = neighbors.offsets[i + 1];
            if (b == e) continue;
            Eigen::RowVectorXd go = concat ? Eigen::RowVectorXd(g.block(i, k * f, 1, f)) : Eigen::RowVectorXd(g.row(i) * head_scale);
            double weighted = 0.0;
            std::vector<double> dalpha(static_cast<std::size_t>(e - b));
            for (Index s = b; s < e; ++s) {
              const Index j = neighbors.indices[s];
              dalpha[s - b] = go.dot(hk.row(j));
              weighted += alpha[k][s] * dalpha[s - b];
              gh.block(j, k * f, 1, f) += alpha[k][s] * go;
            }
            for (Index s = b; s < e; ++s) {
              const double de = alpha[k][s] * (dalpha[s - b] - weighted);
              const double dz = de * (pre[k][s] > 0.0 ? 1.0 : negative_slope);
              d_src(neighbors.indices[s]) += dz;
              d_dst(i) += dz;
            }
          }
          gh.middleCols(k * f, f) += d_src * att_src.value().row(k) + d_dst * att_dst.value().row(k);
          gsrc.row(k) = d_src.transpose() * hk;
          gdst.row(k) = d_dst.transpose() * hk;
        }
        t.accumulate(h, gh);
        t.accumulate(att_src, gsrc);
        t.accumulate(att_dst, gdst);
      });
}

Var pair_dot(const Var& x, const std::vector<std::pair<Index, Index>>& pairs) {
  Matrix out(static_cast<Index>(pairs.size()), 1);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    if (i < 0 || j < 0 || i >= x.rows() || j >= x.rows()) throw Error("pair_dot: index out of range");
    out(static_cast<Index>(p), 0) = x.value().row(i).dot(x.value().row(j));
  }
  Tape& t = x.tape();
  return t.record(std::move(out), {x}, [x, pairs](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad(x);
    const Matrix& v = x.value();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      const double gp = g(static_cast<Index>(p), 0);
      const Eigen::RowVectorXd vi = v.row(i);
      const Eigen::RowVectorXd vj = v.row(j);
      gx.row(i) += gp * vj;
      gx.row(j) += gp * vi;
    }
  });
}

Var bce_with_logits(const Var& logits, const std::vector<double>& labels) {
  if (logits.cols() != 1 || logits.rows() != static_cast<Index>(labels.size())) {
    throw Error("bce_with_logits: shape mismatch");
  }
  const Index n = logits.rows();
  if (n == 0) throw Error("bce_with_logits: empty input");
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double z = logits.value()(i, 0);
    // log(1 + exp(-|z|)) + max(z, 0) - z * y
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(n);
  Tape& t = logits.tape();
  return t.record(std::move(out), {logits}, [logits, labels](Tape& t, const Matrix& g) {
    const Index n = logits.rows();
    Matrix gl(n, 1);
    for (Index i = 0; i < n; ++i) {
      const double z = logits.value()(i, 0);
      const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      gl(i, 0) = g(0, 0) * (s - labels[i]) / static_cast<double>(n);
    }
    t.accumulate(logits, gl);
  });
}

Var weighted_cross_entropy(const Var& logits, const std::vector<int>& targets, const std::vector<double>& weights) {
  const Index n = logits.rows();
  if (static_cast<Index>(targets.size()) != n || static_cast<Index>(weights.size()) != n) {
    throw Error("weighted_cross_entropy: size mismatch");
  }
  Matrix probs = logits.value();
  double total = 0.0;
  for (Index r = 0; r < n; ++r) {
    if (targets[r] < 0) continue;
    if (targets[r] >= probs.cols()) throw Error("weighted_cross_entropy: target out of range");
    const double m = probs.row(r).maxCoeff();
    const double lse = m + std::log((probs.row(r).array() - m).exp().sum());
    total += weights[r] * (lse - probs(r, targets[r]));
    probs.row(r) = (probs.row(r).array() - lse).exp();
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  Tape& t = logits.tape();
  return t.record(std::move(out), {logits}, [logits, targets, weights, probs = std::move(probs)](Tape& t, const Matrix& g) {
    Matrix gl = Matrix::Zero(probs.rows(), probs.cols());
    for (Index r = 0; r < probs.rows(); ++r) {
      if (targets[r] < 0) continue;
      gl.row(r) = probs.row(r) * weights[r];
      gl(r, targets[r]) -= weights[r];
    }
    t.accumulate(logits, gl * g(0, 0));
  });
}

}  // namespace ad
}  // namespace graphtext
