#include "doctest.h"
#include "oracles.hpp"

#include "graphtext/errors.hpp"
#include "graphtext/text_encoder.hpp"

#include <cmath>

using namespace graphtext;

namespace {

TextEncoderConfig small_config(bool causal, int d = 16) {
  TextEncoderConfig c;
  c.vocab_size = 20;
  c.layers = 2;
  c.heads = 2;
  c.d_model = d;
  c.ff_width = 2 * d;
  c.max_len = 12;
  c.causal = causal;
  return c;
}

std::vector<std::vector<int>> sample_sequences() {
  return {{1, 5, 6, 7, 2}, {1, 8, 2}, {1, 9, 10, 11, 12, 13, 2}, {1, 5, 6, 7, 2}};
}

}  // namespace

TEST_SUITE("text_encoder") {

TEST_CASE("configuration validation") {
  Rng rng(0);
  TextEncoderConfig c = small_config(true);
  c.heads = 3;
  CHECK_THROWS_AS(TextEncoder(c, rng), ConfigError);
  c = small_config(true);
  c.vocab_size = 3;
  CHECK_THROWS_AS(TextEncoder(c, rng), ConfigError);
}

TEST_CASE("output shape and duplicate rows in eval mode") {
  Rng rng(1);
  const TextEncoder enc(small_config(false), rng);
  const Matrix out = encode_texts(enc, make_text_batch(sample_sequences()));
  CHECK(out.rows() == 4);
  CHECK(out.cols() == 16);
  CHECK(out.allFinite());
  CHECK(out.row(0) == out.row(3));
}

TEST_CASE("single position pools to itself") {
  Rng rng(2);
  const TextEncoder enc(small_config(true), rng);
  ad::Tape tape;
  const auto o = enc.forward(tape, make_text_batch({{1}, {1, 7, 2}}));
  CHECK(o.pooled.value().row(0) == o.hidden.value().row(0));
  const Matrix mean = o.hidden.value().middleRows(1, 3).colwise().mean();
  CHECK((o.pooled.value().row(1) - mean).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("padded positions never influence the output") {
  for (bool causal : {true, false}) {
    Rng rng(3);
    const TextEncoder enc(small_config(causal), rng);
    TextBatch b = make_text_batch(sample_sequences());
    const Matrix base = encode_texts(enc, b);
    for (Index r = 0; r < b.size(); ++r) {
      for (Index p = b.length(r); p < b.width(); ++p) b.ids[r][p] = 17;
    }
    CHECK(encode_texts(enc, b) == base);
  }
}

TEST_CASE("causal hidden states ignore later tokens") {
  Rng rng(4);
  const TextEncoder enc(small_config(true), rng);
  const TextBatch a = make_text_batch({{1, 5, 6, 7, 8, 2}});
  const TextBatch b = make_text_batch({{1, 5, 6, 14, 15, 2}});
  ad::Tape ta;
  ad::Tape tb;
  const Matrix ha = enc.forward(ta, a).hidden.value();
  const Matrix hb = enc.forward(tb, b).hidden.value();
  CHECK(ha.topRows(3) == hb.topRows(3));
  CHECK(ha.row(3) != hb.row(3));

  Rng rng2(4);
  const TextEncoder bidir(small_config(false), rng2);
  ad::Tape tc;
  ad::Tape td;
  CHECK(bidir.forward(tc, a).hidden.value().row(0) != bidir.forward(td, b).hidden.value().row(0));
}

TEST_CASE("permuting batch rows permutes outputs") {
  Rng rng(5);
  const TextEncoder enc(small_config(false), rng);
  auto seqs = sample_sequences();
  const Matrix base = encode_texts(enc, make_text_batch(seqs));
  const std::vector<int> perm{2, 0, 3, 1};
  std::vector<std::vector<int>> permuted;
  for (int p : perm) permuted.push_back(seqs[p]);
  const Matrix out = encode_texts(enc, make_text_batch(permuted));
  for (int i = 0; i < 4; ++i) CHECK((out.row(i) - base.row(perm[i])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sequence length and vocabulary are enforced") {
  Rng rng(6);
  const TextEncoder enc(small_config(true), rng);
  CHECK_THROWS_AS(encode_texts(enc, make_text_batch({std::vector<int>(13, 5)})), ConfigError);
  CHECK_THROWS_AS(encode_texts(enc, make_text_batch({{1, 25, 2}})), ConfigError);
}

TEST_CASE("analytic gradients match finite differences") {
  for (bool causal : {true, false}) {
    Rng rng(7);
    TextEncoder enc(small_config(causal, 16), rng);
    const TextBatch batch = make_text_batch(sample_sequences());
    Rng wr(8);
    std::normal_distribution<double> normal;
    Matrix w(16, 1);
    for (Index i = 0; i < w.size(); ++i) w(i) = normal(wr);
    Matrix r = Matrix::Ones(1, 4);
    auto build = [&](ad::Tape& t) {
      auto o = enc.forward(t, batch);
      return ad::matmul(ad::matmul(t.constant(r), o.pooled), t.constant(w));
    };
    auto loss = [&] {
      ad::Tape t;
      return build(t).value()(0, 0);
    };
    auto analytic = [&] {
      ad::Tape t;
      t.backward(build(t));
    };
    const auto res = oracle::check_gradients(enc.parameters(), loss, analytic, 1e-4, 1e-6);
    INFO(res.worst);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("uniform logits give perplexity equal to the vocabulary size") {
  Rng rng(9);
  TextEncoderConfig c = small_config(true);
  c.vocab_size = 50;
  const TextEncoder enc(c, rng);
  LmHead head(16, 50, rng);
  head.proj.weight.value.setZero();
  head.proj.bias.value.setZero();
  const double ppl = lm_perplexity(enc, head, make_text_batch({{1, 7, 8, 9, 2}, {1, 30, 2}}));
  CHECK(std::abs(ppl - 50.0) < 1e-3);
}

TEST_CASE("a perfect predictor has perplexity one") {
  const TextBatch b = make_text_batch({{1, 7, 8, 2}, {1, 9, 2}});
  const auto targets = next_token_targets(b);
  CHECK(targets == std::vector<int>{7, 8, 2, -1, 9, 2, -1});
  Matrix logits = Matrix::Zero(7, 12);
  for (Index r = 0; r < 7; ++r) {
    if (targets[r] >= 0) logits(r, targets[r]) = 1000.0;
  }
  const auto nll = per_text_nll(logits, b);
  CHECK(std::exp((nll[0] + nll[1]) / 2.0) == 1.0);
}

TEST_CASE("perplexity requires a causal encoder") {
  Rng rng(10);
  const TextEncoder enc(small_config(false), rng);
  const LmHead head(16, 20, rng);
  CHECK_THROWS_AS(lm_perplexity(enc, head, make_text_batch({{1, 5, 2}})), ConfigError);
  CHECK_THROWS_AS(lm_text_nll(enc, head, {{1, 5, 2}}), ConfigError);
}

TEST_CASE("language-model training lowers the loss") {
  for (LmObjective objective : {LmObjective::NextToken, LmObjective::MaskedToken}) {
    Rng rng(11);
    TextEncoder enc(small_config(objective == LmObjective::NextToken), rng);
    LmHead head(16, 20, rng);
    std::vector<std::vector<int>> seqs;
    for (int i = 0; i < 24; ++i) seqs.push_back({1, 5 + i % 3, 8 + i % 3, 11 + i % 3, 14 + i % 3, 2});
    LmTrainConfig cfg;
    cfg.epochs = 15;
    cfg.batch_size = 8;
    cfg.learning_rate = 3e-3;
    cfg.objective = objective;
    const auto hist = train_language_model(enc, head, seqs, cfg);
    REQUIRE(hist.size() == 15);
    CHECK(hist.back() < hist.front());
  }
}

}  // TEST_SUITE
