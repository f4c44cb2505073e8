// graphtext: prepare datasets, train joint graph-text encoders, evaluate and
// report.

#include "CLI11.hpp"

#include "graphtext/binary_io.hpp"
#include "graphtext/checkpoint.hpp"
#include "graphtext/datasets.hpp"
#include "graphtext/errors.hpp"
#include "graphtext/evaluation.hpp"
#include "graphtext/experiment.hpp"
#include "graphtext/graph.hpp"
#include "graphtext/node_encoder.hpp"
#include "graphtext/report.hpp"
#include "graphtext/run_config.hpp"
#include "graphtext/trainer.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace graphtext;
using graphtext::io::read_file;
using graphtext::io::write_file;

namespace {

constexpr const char* kLockName = "graphtext.lock";

/// Exclusive marker file in an output directory, removed on destruction.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / kLockName) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      if (errno == EEXIST) {
        throw ConfigError("output directory " + dir.string() + " is locked by another graphtext process (remove " +
                          path_.string() + " if stale)");
      }
      throw ConfigError("cannot create lock file " + path_.string() + ": " + std::strerror(errno));
    }
    ::close(fd);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SplitFractions parse_fractions(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--fractions: '" + item + "' is not a number");
    }
  }
  if (parts.size() != 3) throw ConfigError("--fractions needs three comma-separated values train,val,test");
  return {parts[0], parts[1], parts[2]};
}

fs::path features_path(const fs::path& data, SplitName s) {
  return data / ("features_" + std::string(split_name(s)) + ".bin");
}

DataSplit load_or_make_split(const Dataset& dataset, const fs::path& data, std::uint64_t seed) {
  const fs::path path = data / "splits.json";
  if (fs::exists(path)) return read_splits(path, dataset.graph);
  return make_splits(dataset.graph, SplitFractions{}, seed);
}

std::optional<NodeFeatures> load_features(const fs::path& data, SplitName s) {
  const fs::path path = features_path(data, s);
  if (!fs::exists(path)) return std::nullopt;
  return read_features(path);
}

const NodeFeatures* ptr(const std::optional<NodeFeatures>& f) { return f ? &*f : nullptr; }

// ---- prepare --------------------------------------------------------------

struct PrepareArgs {
  std::string input;
  std::string output;
  std::uint64_t seed = 0;
  std::string fractions = "0.7,0.1,0.2";
  Index rank = kDefaultFeatureRank;
};

void run_prepare(const PrepareArgs& a) {
  const SplitFractions fractions = parse_fractions(a.fractions);
  if (a.rank < 1) throw ConfigError("--rank must be positive");
  const Dataset dataset = load_dataset(a.input);
  const DataSplit split = make_splits(dataset.graph, fractions, a.seed);
  OutputLock lock(a.output);
  if (fs::weakly_canonical(a.input) != fs::weakly_canonical(a.output)) save_dataset(dataset, a.output);
  write_splits(fs::path(a.output) / "splits.json", dataset.graph, split);
  for (SplitName s : {SplitName::Train, SplitName::Val, SplitName::Test}) {
    const Graph sub = induced_subgraph(dataset.graph, split.nodes(s));
    write_features(features_path(a.output, s), svd_features(sub, a.rank));
  }
  std::cout << "split " << split.train.size() << "/" << split.val.size() << "/" << split.test.size()
            << " nodes into " << a.output << "\n";
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  std::string output;
};

void run_synth(const SynthArgs& a) {
  const Dataset dataset = generate_sbm_corpus(load_sbm_spec(a.spec));
  OutputLock lock(a.output);
  save_dataset(dataset, a.output);
  std::cout << "wrote " << dataset.graph.num_nodes() << " nodes, " << dataset.graph.num_edges() << " edges, "
            << dataset.corpus.size() << " texts to " << a.output << "\n";
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string resume;
  std::vector<std::string> overrides;
  int threads = 0;
  bool quiet = false;
};

void write_loss_history(const fs::path& path, const Checkpoint& c) {
  std::string csv = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < c.train_loss.size(); ++e) {
    csv += std::to_string(e + 1) + "," + num(c.train_loss[e]) + "," + num(c.val_loss[e]) + "\n";
  }
  write_file(path, csv);
}

void run_train(const TrainArgs& a) {
  std::vector<std::string> overrides = a.overrides;
  if (!a.data.empty()) overrides.push_back("data_dir=\"" + a.data + "\"");
  if (!a.out.empty()) overrides.push_back("out_dir=\"" + a.out + "\"");
  if (a.threads > 0) overrides.push_back("train.threads=" + std::to_string(a.threads));
  RunConfig rc = load_run_config(a.config, overrides);
  if (rc.data_dir.empty()) throw ConfigError("no dataset directory: set data_dir or pass --data");
  if (rc.out_dir.empty()) throw ConfigError("no output directory: set out_dir or pass --out");

  const Dataset dataset = load_dataset(rc.data_dir);
  if (dataset.graph.directed()) rc.train.directed = true;
  rc.train.validate();

  Checkpoint start;
  if (!a.resume.empty()) {
    start = load_checkpoint(a.resume);
    if (dataset.graph.directed()) start.model.config.directed = true;
    start.model.config.max_epochs = rc.train.max_epochs;
    start.model.config.threads = rc.train.threads;
    start.model.config.validate();
    rc.train = start.model.config;
  }

  const DataSplit split = load_or_make_split(dataset, rc.data_dir, rc.train.seed);
  const auto train_features = load_features(rc.data_dir, SplitName::Train);
  const auto val_features = load_features(rc.data_dir, SplitName::Val);
  if (a.resume.empty()) {
    Tokenizer tokenizer = build_tokenizer(dataset, split, rc.train);
    start = initial_checkpoint(JointModel(rc.train, std::move(tokenizer)));
    rc.train = start.model.config;
  }
  const TrainConfig& cfg = start.model.config;
  const SplitData train = make_split_data(dataset, split, SplitName::Train, start.model.tokenizer, cfg,
                                          ptr(train_features));
  std::optional<SplitData> val;
  if (!split.val.empty()) {
    val = make_split_data(dataset, split, SplitName::Val, start.model.tokenizer, cfg, ptr(val_features));
  }

  OutputLock lock(rc.out_dir);
  const fs::path out = rc.out_dir;
  const int first = start.epoch;
  int last_epoch = -1;
  const StepCallback progress = [&](const StepRecord& r) {
    if (a.quiet || r.epoch == last_epoch) return;
    last_epoch = r.epoch;
    std::cerr << "epoch " << r.epoch + 1 << " ...\n";
  };
  const TrainResult result = train_joint(std::move(start), train, val ? &*val : nullptr, progress);

  save_checkpoint(result.final_state, out / "final.ckpt");
  save_checkpoint(result.best, out / "best.ckpt");
  write_loss_history(out / "loss_history.csv", result.final_state);
  write_file(out / "config.json", run_config_to_json(rc) + "\n");
  const Checkpoint& f = result.final_state;
  std::cout << "trained epochs " << first + 1 << ".." << f.epoch;
  if (!f.train_loss.empty()) std::cout << ", final train loss " << num(f.train_loss.back());
  std::cout << ", best epoch " << result.best.epoch << "\n";
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string out;
  std::string config;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
};

EvalOptions eval_options(const std::string& config, const std::vector<std::string>& overrides) {
  if (config.empty() && overrides.empty()) return EvalOptions{};
  std::string text = config.empty() ? std::string(R"({"train": {"max_epochs": 0}})") : read_file(config);
  return parse_run_config(text, overrides).eval;
}

void run_eval(const EvalArgs& a) {
  const SplitName which = parse_split_name(a.split);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Dataset dataset = load_dataset(a.data);
  EvalOptions options = eval_options(a.config, a.overrides);
  options.seed = a.seed;
  const DataSplit split = load_or_make_split(dataset, a.data, ckpt.model.config.seed);
  const auto features = load_features(a.data, which);
  MetricsReport report = evaluate_model(ckpt.model, dataset, split, which, options, ptr(features));
  report.meta["checkpoint"] = fs::path(a.checkpoint).filename().string();
  report.meta["epoch"] = std::to_string(ckpt.epoch);
  const fs::path out(a.out);
  OutputLock lock(out.has_parent_path() ? out.parent_path() : fs::path("."));
  report.write(out);
  std::cout << "wrote " << report.values.size() << " metrics to " << a.out << "\n";
}

// ---- gae ------------------------------------------------------------------

struct GaeArgs {
  std::string data;
  std::string config;
  std::vector<std::string> overrides;
  std::string split = "test";
  std::string out;
  std::uint64_t seed = 0;
};

void run_gae(const GaeArgs& a) {
  const SplitName which = parse_split_name(a.split);
  const Dataset dataset = load_dataset(a.data);
  GaeConfig gae;
  gae.seed = a.seed;
  EvalOptions options;
  if (!a.config.empty() || !a.overrides.empty()) {
    std::string text = a.config.empty() ? std::string(R"({"train": {"max_epochs": 0}})") : read_file(a.config);
    const RunConfig rc = parse_run_config(text, a.overrides);
    gae.gat = rc.train.gat;
    options = rc.eval;
  }
  const DataSplit split = load_or_make_split(dataset, a.data, a.seed);
  auto features_of = [&](SplitName s, const Graph& g) {
    auto f = load_features(a.data, s);
    return f ? *f : svd_features(g, gae.gat.in_dim);
  };
  const Graph train_graph = induced_subgraph(dataset.graph, split.train);
  const Graph val_graph = induced_subgraph(dataset.graph, split.val);
  const Graph eval_graph = induced_subgraph(dataset.graph, split.nodes(which));
  const NodeFeatures train_f = features_of(SplitName::Train, train_graph);
  const NodeFeatures val_f = features_of(SplitName::Val, val_graph);
  const NodeFeatures eval_f = features_of(which, eval_graph);
  const GaeResult res = train_gae_baseline(train_graph, train_f, gae, &val_graph, &val_f);

  MetricsReport report;
  const std::string suffix = "." + std::string(split_name(which));
  const Matrix embs = encode_nodes(res.encoder, eval_graph, eval_f);
  double total = 0.0;
  for (int d = 0; d < options.negative_draws; ++d) {
    total += link_prediction_auc(embs, sample_eval_pairs(dataset.graph, split, a.seed + static_cast<std::uint64_t>(d), which));
  }
  report.set("auc.link_prediction" + suffix, total / options.negative_draws);
  report.meta["link_prediction.negative_draws"] = std::to_string(options.negative_draws);
  report.meta["model"] = "gae";
  report.meta["split"] = std::string(split_name(which));
  report.meta["seed"] = std::to_string(a.seed);
  report.meta["best_epoch"] = std::to_string(res.best_epoch);
  const fs::path out(a.out);
  OutputLock lock(out.has_parent_path() ? out.parent_path() : fs::path("."));
  report.write(out);
  std::cout << "GAE link-prediction AUC " << num(report.values.begin()->second) << "\n";
}

// ---- perplexity -----------------------------------------------------------

struct PerplexityArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  int epochs = 1;
  int resamples = 10000;
  std::uint64_t seed = 0;
};

void run_perplexity(const PerplexityArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Dataset dataset = load_dataset(a.data);
  const TrainConfig& cfg = ckpt.model.config;
  const DataSplit split = load_or_make_split(dataset, a.data, cfg.seed);
  auto texts_of = [&](SplitName s) {
    std::vector<bool> in(static_cast<std::size_t>(dataset.graph.num_nodes()), false);
    for (Index v : split.nodes(s)) in[v] = true;
    const auto owners = dataset.text_nodes();
    std::vector<std::vector<int>> seqs;
    for (std::size_t t = 0; t < owners.size(); ++t) {
      if (in[owners[t]]) seqs.push_back(ckpt.model.tokenizer.encode_sequence(dataset.corpus[t].text, cfg.text.max_len));
    }
    return seqs;
  };
  // The baseline is the same architecture at its initialization, before any
  // joint training.
  const JointModel init(cfg, ckpt.model.tokenizer);
  LmTrainConfig lm;
  lm.epochs = a.epochs;
  lm.seed = a.seed;
  const PerplexityComparison cmp = perplexity_comparison(ckpt.model.text_encoder, init.text_encoder,
                                                         texts_of(SplitName::Train), texts_of(SplitName::Test), lm,
                                                         a.resamples);
  MetricsReport report;
  report.set("perplexity.joint.test", cmp.joint_perplexity);
  report.set("perplexity.baseline.test", cmp.baseline_perplexity);
  report.set("perplexity.difference.test", cmp.difference);
  report.set("perplexity.p_value.test", cmp.p_value);
  report.meta["checkpoint"] = fs::path(a.checkpoint).filename().string();
  report.meta["baseline"] = "initialization";
  const fs::path out(a.out);
  OutputLock lock(out.has_parent_path() ? out.parent_path() : fs::path("."));
  report.write(out);
  std::cout << "perplexity joint " << num(cmp.joint_perplexity) << ", baseline " << num(cmp.baseline_perplexity)
            << ", p " << num(cmp.p_value) << "\n";
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> metrics;
  std::vector<std::string> names;
  std::string out;
  std::string split = "test";
};

std::string default_run_name(const fs::path& p) {
  if (p.stem() == "metrics" && p.has_parent_path() && !p.parent_path().filename().empty()) {
    return p.parent_path().filename().string();
  }
  return p.stem().string();
}

void run_report(const ReportArgs& a) {
  if (!a.names.empty() && a.names.size() != a.metrics.size()) {
    throw ConfigError("--name must be given once per --metrics file");
  }
  std::vector<NamedMetrics> runs;
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    NamedMetrics m;
    m.name = a.names.empty() ? default_run_name(a.metrics[i]) : a.names[i];
    m.report = MetricsReport::read(a.metrics[i]);
    runs.push_back(std::move(m));
  }
  OutputLock lock(a.out);
  write_file(fs::path(a.out) / "metrics_table.csv", metrics_table_csv(runs));
  write_file(fs::path(a.out) / "topk_curve.svg", topk_curve_svg(runs, a.split));
  std::cout << "report for " << runs.size() << " runs in " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint contrastive training of graph and text encoders"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "Split a dataset and compute per-split SVD node features");
  c_prep->add_option("--input", prep.input, "Dataset directory")->required();
  c_prep->add_option("--output", prep.output, "Output directory")->required();
  c_prep->add_option("--seed", prep.seed, "Split seed");
  c_prep->add_option("--fractions", prep.fractions, "train,val,test node fractions");
  c_prep->add_option("--rank", prep.rank, "SVD feature rank");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a stochastic block model corpus");
  c_synth->add_option("--spec", synth.spec, "Generator specification (JSON)")->required();
  c_synth->add_option("--output", synth.output, "Output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train the joint encoders");
  c_train->add_option("--config", train.config, "Run configuration (JSON)")->required();
  c_train->add_option("--data", train.data, "Dataset directory (overrides data_dir)");
  c_train->add_option("--out", train.out, "Output directory (overrides out_dir)");
  c_train->add_option("--resume", train.resume, "Continue from a checkpoint");
  c_train->add_option("--set", train.overrides, "Override a configuration key, e.g. train.alpha=0.1");
  c_train->add_option("--threads", train.threads, "Worker threads (overrides train.threads)");
  c_train->add_flag("--quiet", train.quiet, "No progress output");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Compute metrics of a checkpoint on one split");
  c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--data", eval.data, "Dataset directory")->required();
  c_eval->add_option("--split", eval.split, "train, val or test");
  c_eval->add_option("--out", eval.out, "Metrics file to write")->required();
  c_eval->add_option("--config", eval.config, "Run configuration supplying the eval section");
  c_eval->add_option("--set", eval.overrides, "Override a configuration key, e.g. eval.topk_max=5");
  c_eval->add_option("--seed", eval.seed, "Sampling seed");

  GaeArgs gae;
  auto* c_gae = app.add_subcommand("gae", "Train and evaluate the graph-autoencoder baseline");
  c_gae->add_option("--data", gae.data, "Dataset directory")->required();
  c_gae->add_option("--out", gae.out, "Metrics file to write")->required();
  c_gae->add_option("--config", gae.config, "Run configuration supplying train.gat");
  c_gae->add_option("--set", gae.overrides, "Override a configuration key");
  c_gae->add_option("--split", gae.split, "Evaluation split");
  c_gae->add_option("--seed", gae.seed, "Training and sampling seed");

  PerplexityArgs ppl;
  auto* c_ppl = app.add_subcommand("perplexity", "Compare language-model perplexity against the initialization");
  c_ppl->add_option("--checkpoint", ppl.checkpoint, "Checkpoint with a causal text encoder")->required();
  c_ppl->add_option("--data", ppl.data, "Dataset directory")->required();
  c_ppl->add_option("--out", ppl.out, "Metrics file to write")->required();
  c_ppl->add_option("--epochs", ppl.epochs, "Fine-tuning epochs per model");
  c_ppl->add_option("--resamples", ppl.resamples, "Bootstrap resamples");
  c_ppl->add_option("--seed", ppl.seed, "Fine-tuning seed");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Merge metrics files into a table and a top-k plot");
  c_rep->add_option("--metrics", rep.metrics, "Metrics files, one per run")->required();
  c_rep->add_option("--name", rep.names, "Run names, one per metrics file");
  c_rep->add_option("--out", rep.out, "Output directory")->required();
  c_rep->add_option("--split", rep.split, "Split whose top-k curve is drawn");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_prep) run_prepare(prep);
    if (*c_synth) run_synth(synth);
    if (*c_train) run_train(train);
    if (*c_eval) run_eval(eval);
    if (*c_gae) run_gae(gae);
    if (*c_ppl) run_perplexity(ppl);
    if (*c_rep) run_report(rep);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
