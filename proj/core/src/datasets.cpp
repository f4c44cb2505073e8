#include "graphtext/datasets.hpp"

#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace graphtext {

using nlohmann::json;

std::vector<Index> Dataset::text_nodes() const {
  std::vector<Index> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    auto v = graph.find(r.node_id);
    if (!v) throw DataError("text '" + r.text_id + "' references unknown node '" + r.node_id + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<int> Dataset::label_ids(std::vector<std::string>* classes) const {
  std::set<std::string> distinct;
  for (const auto& l : labels) {
    if (l) distinct.insert(*l);
  }
  const std::vector<std::string> sorted(distinct.begin(), distinct.end());
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    out.push_back(l ? static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), *l) - sorted.begin()) : -1);
  }
  if (classes != nullptr) *classes = sorted;
  return out;
}

namespace {

template <class Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  int number = 0;
  const std::string name = path.filename().string();
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw DataError(name + " line " + std::to_string(number) + ": malformed JSON");
    }
    if (!j.is_object()) throw DataError(name + " line " + std::to_string(number) + ": expected a JSON object");
    try {
      fn(j, number);
    } catch (const DataError& e) {
      throw DataError(name + " line " + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw DataError(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory " + dir.string() + " does not exist");
  bool directed = false;
  if (std::filesystem::exists(dir / "graph.json")) {
    json g;
    try {
      g = json::parse(io::read_file(dir / "graph.json"));
    } catch (const json::exception&) {
      throw DataError("graph.json: malformed JSON");
    }
    if (!g.is_object()) throw DataError("graph.json: expected a JSON object");
    for (const auto& [k, v] : g.items()) {
      if (k != "directed") throw DataError("graph.json: unknown key '" + k + "'");
      if (!v.is_boolean()) throw DataError("graph.json: 'directed' must be a boolean");
      directed = v.get<bool>();
    }
  }

  std::vector<std::string> ids;
  std::vector<std::optional<std::string>> labels;
  std::unordered_map<std::string, Index> index;
  for_each_json_line(dir / "nodes.jsonl", [&](const json& j, int) {
    std::string id = string_field(j, "id");
    std::optional<std::string> label;
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError("'label' must be a string or null");
      label = it->get<std::string>();
    }
    if (!index.emplace(id, static_cast<Index>(ids.size())).second) throw DataError("duplicate node id '" + id + "'");
    ids.push_back(std::move(id));
    labels.push_back(std::move(label));
  });

  auto resolve = [&](const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("unknown node '" + id + "'");
    return it->second;
  };

  std::vector<Edge> edges;
  for_each_json_line(dir / "edges.jsonl", [&](const json& j, int) {
    edges.push_back({resolve(string_field(j, "src")), resolve(string_field(j, "dst"))});
  });

  Dataset out;
  std::unordered_set<std::string> text_ids;
  for_each_json_line(dir / "texts.jsonl", [&](const json& j, int) {
    CorpusRecord r{string_field(j, "text_id"), string_field(j, "node_id"), string_field(j, "text")};
    resolve(r.node_id);
    if (!text_ids.insert(r.text_id).second) throw DataError("duplicate text_id '" + r.text_id + "'");
    out.corpus.push_back(std::move(r));
  });

  out.graph = Graph(std::move(ids), std::move(edges), directed);
  out.labels = std::move(labels);
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& ids = dataset.graph.node_ids();
  std::ostringstream nodes;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    json j = {{"id", ids[i]}, {"label", nullptr}};
    if (i < dataset.labels.size() && dataset.labels[i]) j["label"] = *dataset.labels[i];
    nodes << j.dump() << '\n';
  }
  std::ostringstream edges;
  for (const Edge& e : dataset.graph.edges()) edges << json{{"src", ids[e.src]}, {"dst", ids[e.dst]}}.dump() << '\n';
  std::ostringstream texts;
  for (const auto& r : dataset.corpus) {
    texts << json{{"text_id", r.text_id}, {"node_id", r.node_id}, {"text", r.text}}.dump() << '\n';
  }
  io::write_file(dir / "nodes.jsonl", nodes.str());
  io::write_file(dir / "edges.jsonl", edges.str());
  io::write_file(dir / "texts.jsonl", texts.str());
  io::write_file(dir / "graph.json", json{{"directed", dataset.graph.directed()}}.dump() + "\n");
}

// ---------------------------------------------------------------------------

void SbmSpec::validate() const {
  if (communities < 1 || nodes_per_community < 1) throw ConfigError("SBM needs at least one community and node");
  if (communities * nodes_per_community < 2) throw ConfigError("SBM needs at least two nodes");
  if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) throw ConfigError("SBM requires 0 <= p_out < p_in <= 1");
  if (community_vocab < 1) throw ConfigError("community vocabulary must be non-empty");
  if (!(community_weight >= 0.0 && community_weight <= 1.0)) throw ConfigError("community_weight must lie in [0, 1]");
  if (community_weight < 1.0 && shared_vocab < 1) throw ConfigError("shared vocabulary must be non-empty");
  if (texts_per_node < 1) throw ConfigError("texts_per_node must be at least 1");
  if (min_text_len < 1 || max_text_len < min_text_len) throw ConfigError("text length range is invalid");
}

SbmSpec parse_sbm_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception&) {
    throw ConfigError("SBM spec is not valid JSON");
  }
  if (!j.is_object()) throw ConfigError("SBM spec must be a JSON object");
  SbmSpec s;
  for (const auto& [k, v] : j.items()) {
    auto integer = [&](int& dst) {
      if (!v.is_number_integer()) throw ConfigError("SBM key '" + k + "' must be an integer");
      dst = v.get<int>();
    };
    auto real = [&](double& dst) {
      if (!v.is_number()) throw ConfigError("SBM key '" + k + "' must be a number");
      dst = v.get<double>();
    };
    if (k == "communities") integer(s.communities);
    else if (k == "nodes_per_community") integer(s.nodes_per_community);
    else if (k == "p_in") real(s.p_in);
    else if (k == "p_out") real(s.p_out);
    else if (k == "community_vocab") integer(s.community_vocab);
    else if (k == "shared_vocab") integer(s.shared_vocab);
    else if (k == "texts_per_node") integer(s.texts_per_node);
    else if (k == "min_text_len") integer(s.min_text_len);
    else if (k == "max_text_len") integer(s.max_text_len);
    else if (k == "community_weight") real(s.community_weight);
    else if (k == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError("SBM key 'seed' must be a non-negative integer");
      s.seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown SBM key '" + k + "'");
    }
  }
  s.validate();
  return s;
}

SbmSpec load_sbm_spec(const std::filesystem::path& path) { return parse_sbm_spec(io::read_file(path)); }

Dataset generate_sbm_corpus(const SbmSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = spec.communities * spec.nodes_per_community;
  auto community = [&](int v) { return v / spec.nodes_per_community; };

  std::vector<std::string> ids;
  Dataset out;
  for (int v = 0; v < n; ++v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "n%04d", v);
    ids.emplace_back(buf);
    out.labels.emplace_back("c" + std::to_string(community(v)));
  }
  std::vector<Edge> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double p = community(a) == community(b) ? spec.p_in : spec.p_out;
      if (unit(rng) < p) edges.push_back({a, b});
    }
  }

  std::uniform_int_distribution<int> length(spec.min_text_len, spec.max_text_len);
  std::uniform_int_distribution<int> own(0, spec.community_vocab - 1);
  std::uniform_int_distribution<int> shared(0, std::max(spec.shared_vocab, 1) - 1);
  for (int v = 0; v < n; ++v) {
    const std::string prefix = "c" + std::to_string(community(v)) + "w";
    for (int t = 0; t < spec.texts_per_node; ++t) {
      const int len = length(rng);
      std::string text;
      for (int i = 0; i < len; ++i) {
        if (i > 0) text += ' ';
        if (unit(rng) < spec.community_weight) {
          text += prefix + std::to_string(own(rng));
        } else {
          text += "s" + std::to_string(shared(rng));
        }
      }
      out.corpus.push_back({ids[v] + "_t" + std::to_string(t), ids[v], std::move(text)});
    }
  }
  out.graph = Graph(std::move(ids), std::move(edges), false);
  return out;
}

// ---------------------------------------------------------------------------

void write_splits(const std::filesystem::path& path, const Graph& graph, const DataSplit& split) {
  json j = json::object();
  for (SplitName s : {SplitName::Train, SplitName::Val, SplitName::Test}) {
    json ids = json::array();
    for (Index v : split.nodes(s)) ids.push_back(graph.node_ids()[v]);
    j[std::string(split_name(s))] = ids;
  }
  io::write_file(path, j.dump(2) + "\n");
}

DataSplit read_splits(const std::filesystem::path& path, const Graph& graph) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception&) {
    throw DataError(path.filename().string() + ": malformed JSON");
  }
  if (!j.is_object()) throw DataError("splits file must hold a JSON object");
  std::vector<Index> parts[3];
  for (const auto& [k, v] : j.items()) {
    SplitName s;
    try {
      s = parse_split_name(k);
    } catch (const Error&) {
      throw DataError("splits file has unknown key '" + k + "'");
    }
    if (!v.is_array()) throw DataError("split '" + k + "' must be an array of node ids");
    for (const auto& id : v) {
      if (!id.is_string()) throw DataError("split '" + k + "' holds a non-string id");
      auto idx = graph.find(id.get<std::string>());
      if (!idx) throw DataError("split '" + k + "' references unknown node '" + id.get<std::string>() + "'");
      parts[static_cast<int>(s)].push_back(*idx);
    }
  }
  return split_from_nodes(graph, std::move(parts[0]), std::move(parts[1]), std::move(parts[2]));
}

}  // namespace graphtext
