#include "graphtext/run_config.hpp"

#include "config_json.hpp"
#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"

#include <set>

namespace graphtext {

using nlohmann::json;

namespace {

/// Typed access to the keys of one JSON object; finish() rejects leftovers.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  void get(const char* key, int& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      dst = v->get<int>();
    }
  }
  void get(const char* key, Index& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      dst = v->get<Index>();
    }
  }
  void get(const char* key, std::uint64_t& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      dst = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, double& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      dst = v->get<double>();
    }
  }
  void get(const char* key, bool& dst) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      dst = v->get<bool>();
    }
  }
  void get(const char* key, std::string& dst) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      dst = v->get<std::string>();
    }
  }

  const json* find(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }
  bool has(const char* key) const { return j_.contains(key); }
  std::string path(const char* key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) throw ConfigError("unknown configuration key '" + path(k.c_str()) + "'");
    }
  }

  [[noreturn]] void fail(const char* key, const char* type) const {
    throw ConfigError("configuration key '" + path(key) + "' must be " + type);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

std::string similarity_name(SimilarityKind k) {
  return k == SimilarityKind::SimRank ? "simrank" : "mutual_neighbor";
}

SimilarityKind parse_similarity(const std::string& s) {
  if (s == "mutual_neighbor") return SimilarityKind::MutualNeighborCosine;
  if (s == "simrank") return SimilarityKind::SimRank;
  throw ConfigError("unknown similarity '" + s + "' (expected mutual_neighbor or simrank)");
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace

namespace detail {

json train_config_json(const TrainConfig& c) {
  return json{
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"max_epochs", c.max_epochs},
      {"grad_clip_norm", c.grad_clip_norm},
      {"alpha", c.alpha},
      {"adam_betas", {c.beta1, c.beta2}},
      {"weight_decay", c.weight_decay},
      {"dropout", c.dropout},
      {"seed", c.seed},
      {"tau_init", c.tau_init},
      {"directed", c.directed},
      {"embedding_dim", c.embedding_dim},
      {"similarity", similarity_name(c.similarity)},
      {"threads", c.threads},
      {"tokenizer",
       {{"mode", std::string(tokenizer_mode_name(c.tokenizer_mode))},
        {"min_count", c.min_token_count},
        {"max_vocab", c.max_vocab}}},
      {"text_encoder",
       {{"layers", c.text.layers},
        {"heads", c.text.heads},
        {"d_model", c.text.d_model},
        {"ff_width", c.text.ff_width},
        {"max_len", c.text.max_len},
        {"causal", c.text.causal}}},
      {"gat",
       {{"in_dim", c.gat.in_dim},
        {"hidden", c.gat.hidden},
        {"heads", c.gat.heads},
        {"layers", c.gat.layers},
        {"out_dim", c.gat.out_dim},
        {"negative_slope", c.gat.negative_slope}}},
  };
}

TrainConfig train_config_from(const json& j, const std::string& where, bool require_epochs) {
  TrainConfig c;
  Fields f(j, where);
  if (require_epochs && !f.has("max_epochs")) throw ConfigError("missing required key '" + f.path("max_epochs") + "'");
  f.get("batch_size", c.batch_size);
  f.get("learning_rate", c.learning_rate);
  f.get("max_epochs", c.max_epochs);
  f.get("grad_clip_norm", c.grad_clip_norm);
  f.get("alpha", c.alpha);
  if (const json* betas = f.find("adam_betas")) {
    if (!betas->is_array() || betas->size() != 2 || !(*betas)[0].is_number() || !(*betas)[1].is_number()) {
      f.fail("adam_betas", "an array of two numbers");
    }
    c.beta1 = (*betas)[0].get<double>();
    c.beta2 = (*betas)[1].get<double>();
  }
  f.get("weight_decay", c.weight_decay);
  f.get("dropout", c.dropout);
  f.get("seed", c.seed);
  f.get("tau_init", c.tau_init);
  f.get("directed", c.directed);
  f.get("embedding_dim", c.embedding_dim);
  std::string similarity = similarity_name(c.similarity);
  f.get("similarity", similarity);
  c.similarity = parse_similarity(similarity);
  f.get("threads", c.threads);
  if (const json* t = f.find("tokenizer")) {
    Fields g(*t, f.path("tokenizer"));
    std::string mode(tokenizer_mode_name(c.tokenizer_mode));
    g.get("mode", mode);
    c.tokenizer_mode = parse_tokenizer_mode(mode);
    g.get("min_count", c.min_token_count);
    g.get("max_vocab", c.max_vocab);
    g.finish();
  }
  if (const json* t = f.find("text_encoder")) {
    Fields g(*t, f.path("text_encoder"));
    g.get("layers", c.text.layers);
    g.get("heads", c.text.heads);
    g.get("d_model", c.text.d_model);
    g.get("ff_width", c.text.ff_width);
    g.get("max_len", c.text.max_len);
    g.get("causal", c.text.causal);
    g.finish();
  }
  if (const json* t = f.find("gat")) {
    Fields g(*t, f.path("gat"));
    g.get("in_dim", c.gat.in_dim);
    g.get("hidden", c.gat.hidden);
    g.get("heads", c.gat.heads);
    g.get("layers", c.gat.layers);
    g.get("out_dim", c.gat.out_dim);
    g.get("negative_slope", c.gat.negative_slope);
    g.finish();
  }
  f.finish();
  c.validate();
  return c;
}

}  // namespace detail

RunConfig parse_run_config(std::string_view json_text, const std::vector<std::string>& overrides) {
  json root = parse_json(json_text, "run configuration");
  if (!root.is_object()) throw ConfigError("run configuration must be a JSON object");
  for (const auto& o : overrides) apply_override(root, o);

  RunConfig rc;
  Fields f(root, "");
  f.get("data_dir", rc.data_dir);
  f.get("out_dir", rc.out_dir);
  const json* train = f.find("train");
  if (train == nullptr) throw ConfigError("missing required key 'train'");
  rc.train = detail::train_config_from(*train, "train", true);
  if (const json* e = f.find("eval")) {
    Fields g(*e, "eval");
    g.get("link_prediction", rc.eval.link_prediction);
    g.get("topk", rc.eval.topk);
    g.get("coupling", rc.eval.coupling);
    g.get("simrank_correlation", rc.eval.simrank_correlation);
    g.get("classification", rc.eval.classification);
    g.get("topk_max", rc.eval.topk_max);
    g.get("negative_draws", rc.eval.negative_draws);
    g.get("classification_seeds", rc.eval.classification_seeds);
    g.get("max_pairs", rc.eval.max_pairs);
    g.get("seed", rc.eval.seed);
    g.finish();
    if (rc.eval.topk_max < 1) throw ConfigError("eval.topk_max must be at least 1");
    if (rc.eval.negative_draws < 1) throw ConfigError("eval.negative_draws must be at least 1");
    if (rc.eval.classification_seeds < 1) throw ConfigError("eval.classification_seeds must be at least 1");
    if (rc.eval.max_pairs < 1) throw ConfigError("eval.max_pairs must be at least 1");
  }
  f.finish();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read configuration file " + path.string());
  }
  return parse_run_config(text, overrides);
}

std::string run_config_to_json(const RunConfig& rc) {
  json j{
      {"data_dir", rc.data_dir},
      {"out_dir", rc.out_dir},
      {"train", detail::train_config_json(rc.train)},
      {"eval",
       {{"link_prediction", rc.eval.link_prediction},
        {"topk", rc.eval.topk},
        {"coupling", rc.eval.coupling},
        {"simrank_correlation", rc.eval.simrank_correlation},
        {"classification", rc.eval.classification},
        {"topk_max", rc.eval.topk_max},
        {"negative_draws", rc.eval.negative_draws},
        {"classification_seeds", rc.eval.classification_seeds},
        {"max_pairs", rc.eval.max_pairs},
        {"seed", rc.eval.seed}}},
  };
  return j.dump(2) + "\n";
}

std::string train_config_to_json(const TrainConfig& config) { return detail::train_config_json(config).dump(2); }

TrainConfig train_config_from_json(std::string_view json_text) {
  return detail::train_config_from(parse_json(json_text, "training configuration"), "", false);
}

}  // namespace graphtext
