#pragma once

#include "graphtext/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace graphtext {

struct EvalOptions {
  bool link_prediction = true;
  bool topk = true;
  bool coupling = true;
  bool simrank_correlation = true;
  bool classification = true;
  int topk_max = 10;
  /// Seeded negative samples whose link-prediction AUCs are averaged.
  int negative_draws = 10;
  /// Number of seeded 50/50 splits averaged in node classification.
  int classification_seeds = 5;
  std::size_t max_pairs = 200000;
  std::uint64_t seed = 0;
};

/// One run: where the data lives, where outputs go, training and evaluation
/// settings. JSON keys mirror the field names; unknown keys are rejected and
/// train.max_epochs is required.
struct RunConfig {
  std::string data_dir;
  std::string out_dir;
  TrainConfig train;
  EvalOptions eval;
};

/// `overrides` are "dotted.key=value" assignments applied before
/// validation; values are parsed as JSON, falling back to a plain string.
RunConfig parse_run_config(std::string_view json_text, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
std::string run_config_to_json(const RunConfig& config);

std::string train_config_to_json(const TrainConfig& config);
/// Strict: unknown keys raise ConfigError.
TrainConfig train_config_from_json(std::string_view json_text);

}  // namespace graphtext
