#include "doctest.h"

#include "graphtext/errors.hpp"
#include "graphtext/run_config.hpp"

using namespace graphtext;

namespace {

const char* kMinimal = R"({"data_dir": "data", "out_dir": "out", "train": {"max_epochs": 5}})";

}  // namespace

TEST_SUITE("run_config") {

TEST_CASE("minimal configuration takes the documented defaults") {
  const RunConfig rc = parse_run_config(kMinimal);
  CHECK(rc.data_dir == "data");
  CHECK(rc.out_dir == "out");
  CHECK(rc.train.max_epochs == 5);
  CHECK(rc.train.batch_size == 36);
  CHECK(rc.train.learning_rate == 1e-4);
  CHECK(rc.train.grad_clip_norm == 1.0);
  CHECK(rc.train.tau_init == 3.5);
  CHECK(rc.train.alpha == 0.0);
  CHECK(rc.train.beta1 == 0.9);
  CHECK(rc.train.beta2 == 0.999);
  CHECK(rc.train.dropout == 0.3);
  CHECK(rc.eval.topk_max == 10);
  CHECK(rc.eval.negative_draws == 10);
}

TEST_CASE("max_epochs is required") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train": {}})"), doctest::Contains("train.max_epochs"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"data_dir": "x"})"), ConfigError);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train": {"max_epochs": 1, "lr": 0.1}})"),
                       doctest::Contains("train.lr"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train": {"max_epochs": 1, "gat": {"width": 3}}})"),
                       doctest::Contains("train.gat.width"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"max_epochs": 1}, "extra": 1})"), ConfigError);
}

TEST_CASE("values are type checked") {
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"max_epochs": "ten"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"max_epochs": 1, "adam_betas": [0.9]}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"max_epochs": 1, "similarity": "jaccard"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
}

TEST_CASE("semantic validation runs after parsing") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train": {"max_epochs": 1, "alpha": 0.1, "directed": true}})"),
                       doctest::Contains("undirected"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"max_epochs": 1, "tau_init": 5.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"max_epochs": 1}, "eval": {"topk_max": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"max_epochs": 1}, "eval": {"negative_draws": 0}})"), ConfigError);
}

TEST_CASE("dotted overrides replace file values") {
  const RunConfig rc = parse_run_config(
      kMinimal, {"train.alpha=0.1", "train.gat.heads=4", "out_dir=elsewhere", "train.similarity=simrank",
                 "eval.topk=false"});
  CHECK(rc.train.alpha == 0.1);
  CHECK(rc.train.gat.heads == 4);
  CHECK(rc.out_dir == "elsewhere");
  CHECK(rc.train.similarity == SimilarityKind::SimRank);
  CHECK_FALSE(rc.eval.topk);
  CHECK_THROWS_AS(parse_run_config(kMinimal, {"train.alpha"}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(kMinimal, {"train.nonsense=1"}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(kMinimal, {"out_dir.x=1"}), ConfigError);
}

TEST_CASE("serialization round trips") {
  RunConfig rc = parse_run_config(kMinimal, {"train.alpha=0.25", "train.text_encoder.causal=false",
                                             "train.tokenizer.mode=character", "train.seed=42"});
  const RunConfig back = parse_run_config(run_config_to_json(rc));
  CHECK(run_config_to_json(back) == run_config_to_json(rc));
  CHECK(back.train.alpha == 0.25);
  CHECK_FALSE(back.train.text.causal);
  CHECK(back.train.tokenizer_mode == TokenizerMode::Character);
  CHECK(back.train.seed == 42);
  const TrainConfig t = train_config_from_json(train_config_to_json(rc.train));
  CHECK(train_config_to_json(t) == train_config_to_json(rc.train));
}

TEST_CASE("missing configuration file") {
  CHECK_THROWS_AS(load_run_config("/nonexistent/graphtext/config.json"), ConfigError);
}

}  // TEST_SUITE
