#include "doctest.h"
#include "fixtures.hpp"

#include "graphtext/checkpoint.hpp"
#include "graphtext/errors.hpp"
#include "graphtext/experiment.hpp"

using namespace graphtext;

TEST_SUITE("experiment") {

TEST_CASE("metric names follow metric.kind.split") {
  const TrainConfig c = testing::tiny_config();
  const auto s = testing::tiny_setup(c);
  const JointModel model(c, s.tokenizer);
  const MetricsReport r = evaluate_model(model, s.dataset, s.split, SplitName::Test, EvalOptions{});
  const Index n = static_cast<Index>(s.split.test.size());
  for (const char* key : {"auc.link_prediction.test", "topk.acc@1.test", "topk.chance.test",
                          "coupling.distance.test", "f1.node.test", "f1.majority.test"}) {
    INFO(key);
    CHECK(r.has(key));
  }
  CHECK(r.at("topk.chance.test") == doctest::Approx(1.0 / static_cast<double>(n)));
  CHECK(r.has("topk.acc@" + std::to_string(std::min<Index>(10, n)) + ".test"));
  CHECK_FALSE(r.has("topk.acc@" + std::to_string(std::min<Index>(10, n) + 1) + ".test"));
  CHECK(r.meta.at("split") == "test");
  for (const auto& [k, v] : r.values) {
    INFO(k);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("link-prediction AUC averages the seeded negative draws") {
  const TrainConfig c = testing::tiny_config();
  const auto s = testing::tiny_setup(c);
  const JointModel model(c, s.tokenizer);
  EvalOptions o;
  o.topk = o.coupling = o.simrank_correlation = o.classification = false;
  o.negative_draws = 4;
  o.seed = 11;
  const MetricsReport r = evaluate_model(model, s.dataset, s.split, SplitName::Test, o);
  const SplitData test = make_split_data(s.dataset, s.split, SplitName::Test, s.tokenizer, c);
  const Matrix nodes = model.embed_nodes(test.graph, test.features);
  double mean = 0.0;
  for (std::uint64_t d = 0; d < 4; ++d) mean += link_prediction_auc(nodes, sample_eval_pairs(s.dataset.graph, s.split, 11 + d));
  CHECK(r.at("auc.link_prediction.test") == doctest::Approx(mean / 4).epsilon(1e-12));
  CHECK(r.values.size() == 1);
}

TEST_CASE("evaluation is deterministic") {
  const TrainConfig c = testing::tiny_config();
  const auto s = testing::tiny_setup(c);
  const JointModel model(c, s.tokenizer);
  EvalOptions o;
  o.seed = 3;
  CHECK(evaluate_model(model, s.dataset, s.split, SplitName::Val, o).to_json() ==
        evaluate_model(model, s.dataset, s.split, SplitName::Val, o).to_json());
}

TEST_CASE("metrics that cannot be computed are listed as skipped") {
  const TrainConfig c = testing::tiny_config();
  auto s = testing::tiny_setup(c);
  // Test split: one node per community with no edges among them.
  std::vector<Index> test;
  for (Index v = 0; v < s.dataset.graph.num_nodes() && test.size() < 3; ++v) {
    bool free = true;
    for (Index u : test) free = free && !s.dataset.graph.has_edge(u, v);
    if (free) test.push_back(v);
  }
  REQUIRE(test.size() == 3);
  std::vector<Index> train;
  for (Index v = 0; v < s.dataset.graph.num_nodes(); ++v) {
    if (std::find(test.begin(), test.end(), v) == test.end()) train.push_back(v);
  }
  const DataSplit split = split_from_nodes(s.dataset.graph, train, {}, test);
  const JointModel model(c, s.tokenizer);
  const MetricsReport r = evaluate_model(model, s.dataset, split, SplitName::Test, EvalOptions{});
  CHECK_FALSE(r.has("auc.link_prediction.test"));
  CHECK(r.meta.contains("skipped.auc.link_prediction"));
  CHECK(r.has("topk.acc@1.test"));
  CHECK_THROWS_AS(evaluate_model(model, s.dataset, split, SplitName::Val, EvalOptions{}), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("experiment") {

TEST_CASE("a perfectly aligned checkpoint retrieves every node first") {
  // Ring of 8 nodes, each with one text made of its own token.
  std::vector<std::string> ids;
  std::vector<Edge> edges;
  Dataset ds;
  for (int i = 0; i < 8; ++i) {
    ids.push_back("v" + std::to_string(i));
    edges.push_back({i, (i + 1) % 8});
    ds.corpus.push_back({"t" + std::to_string(i), ids.back(), "w" + std::to_string(i) + " w" + std::to_string(i)});
    ds.labels.emplace_back(std::string(i < 4 ? "a" : "b"));
  }
  ds.graph = Graph(ids, edges, false);
  std::vector<Index> all(8);
  for (Index i = 0; i < 8; ++i) all[i] = i;
  const DataSplit split = split_from_nodes(ds.graph, all, {}, {});

  TrainConfig c = testing::tiny_config();
  c.batch_size = 8;
  c.max_epochs = 300;
  c.learning_rate = 1e-2;
  c.dropout = 0.0;
  const Tokenizer tok = build_tokenizer(ds, split, c);
  const SplitData train = make_split_data(ds, split, SplitName::Train, tok, c);
  const JointModel init(c, tok);
  const TrainResult r = train_joint(testing::initial_checkpoint(init), train);
  const Checkpoint loaded = deserialize_checkpoint(serialize_checkpoint(r.final_state));

  EvalOptions o;
  o.link_prediction = false;
  o.classification = false;
  const MetricsReport m = evaluate_model(loaded.model, ds, split, SplitName::Train, o);
  CHECK(m.at("topk.acc@1.train") == 1.0);
  CHECK(m.at("topk.acc@8.train") == 1.0);
  CHECK(evaluate_model(init, ds, split, SplitName::Train, o).at("topk.acc@1.train") < 1.0);
}

}  // TEST_SUITE
