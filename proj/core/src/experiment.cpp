#include "graphtext/experiment.hpp"

#include "graphtext/errors.hpp"

#include <algorithm>
#include <set>

namespace graphtext {

namespace {

struct Averages {
  double f1 = 0.0;
  double accuracy = 0.0;
  double majority_f1 = 0.0;
  double majority_accuracy = 0.0;
  int runs = 0;
  std::string reason;
};

}  // namespace

MetricsReport evaluate_model(const JointModel& model, const Dataset& dataset, const DataSplit& split,
                             SplitName which, const EvalOptions& options, const NodeFeatures* features) {
  const std::string suffix = "." + std::string(split_name(which));
  const SplitData data = make_split_data(dataset, split, which, model.tokenizer, model.config, features);
  const Index n = data.graph.num_nodes();
  if (n == 0) throw ConfigError(std::string(split_name(which)) + " split has no nodes");

  MetricsReport report;
  report.meta["split"] = std::string(split_name(which));
  report.meta["seed"] = std::to_string(options.seed);
  auto skip = [&](const std::string& metric, const std::string& why) { report.meta["skipped." + metric] = why; };

  const Matrix nodes = model.embed_nodes(data.graph, data.features);
  const Matrix texts = data.sequences.empty() ? Matrix() : model.embed_texts(data.sequences);

  if (options.link_prediction) {
    try {
      if (options.negative_draws < 1) throw ConfigError("negative_draws must be at least 1");
      double total = 0.0;
      for (int d = 0; d < options.negative_draws; ++d) {
        const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(d);
        total += link_prediction_auc(nodes, sample_eval_pairs(dataset.graph, split, seed, which));
      }
      report.set("auc.link_prediction" + suffix, total / options.negative_draws);
      report.meta["link_prediction.negative_draws"] = std::to_string(options.negative_draws);
    } catch (const Error& e) {
      skip("auc.link_prediction", e.what());
    }
  }

  if (options.topk) {
    if (texts.rows() == 0) {
      skip("topk", "split has no texts");
    } else {
      const int k_max = static_cast<int>(std::min<Index>(options.topk_max, n));
      const auto acc = topk_accuracy(texts, nodes, data.text_nodes, k_max);
      for (int k = 1; k <= k_max; ++k) report.set("topk.acc@" + std::to_string(k) + suffix, acc[k - 1]);
      report.set("topk.chance" + suffix, 1.0 / static_cast<double>(n));
    }
  }

  if (options.coupling) {
    try {
      report.set("coupling.distance" + suffix,
                 distance_coupling(texts, nodes, data.text_nodes, options.max_pairs, options.seed));
    } catch (const Error& e) {
      skip("coupling.distance", e.what());
    }
  }

  if (options.simrank_correlation) {
    try {
      report.set("correlation.simrank" + suffix, text_simrank_correlation(texts, simrank(data.graph), data.text_nodes,
                                                                         options.max_pairs, options.seed));
    } catch (const Error& e) {
      skip("correlation.simrank", e.what());
    }
  }

  if (options.classification) {
    // Only nodes with at least one text have a text-mean embedding.
    const std::vector<int> all_labels = dataset.label_ids();
    const std::vector<Index> split_nodes = split.nodes(which);
    const std::set<Index> with_text(data.text_nodes.begin(), data.text_nodes.end());
    std::vector<Index> keep(with_text.begin(), with_text.end());
    std::vector<int> labels;
    for (Index v : keep) labels.push_back(all_labels[split_nodes[v]]);
    const bool any_label = std::any_of(labels.begin(), labels.end(), [](int l) { return l >= 0; });
    if (keep.size() < 2 || !any_label) {
      skip("classification", "split has fewer than two labeled nodes with texts");
    } else {
      std::vector<Index> remap(static_cast<std::size_t>(n), 0);
      for (std::size_t i = 0; i < keep.size(); ++i) remap[keep[i]] = static_cast<Index>(i);
      std::vector<Index> truth;
      for (Index v : data.text_nodes) truth.push_back(remap[v]);
      const Matrix text_mean = text_mean_embeddings(texts, truth, static_cast<Index>(keep.size()));
      Matrix node_rows(static_cast<Index>(keep.size()), nodes.cols());
      for (std::size_t i = 0; i < keep.size(); ++i) node_rows.row(static_cast<Index>(i)) = nodes.row(keep[i]);

      std::vector<Averages> avg(3);
      for (int s = 0; s < options.classification_seeds; ++s) {
        const auto scores = classify_nodes(text_mean, node_rows, labels, options.seed + static_cast<std::uint64_t>(s));
        for (std::size_t k = 0; k < scores.size(); ++k) {
          if (scores[k].skipped) {
            avg[k].reason = scores[k].reason;
            continue;
          }
          avg[k].f1 += scores[k].macro_f1;
          avg[k].accuracy += scores[k].accuracy;
          avg[k].majority_f1 += scores[k].majority_macro_f1;
          avg[k].majority_accuracy += scores[k].majority_accuracy;
          ++avg[k].runs;
        }
      }
      const char* kinds[] = {"text_mean", "node", "concat"};
      for (std::size_t k = 0; k < 3; ++k) {
        if (avg[k].runs == 0) {
          skip(std::string("f1.") + kinds[k], avg[k].reason);
          continue;
        }
        report.set(std::string("f1.") + kinds[k] + suffix, avg[k].f1 / avg[k].runs);
        report.set(std::string("accuracy.") + kinds[k] + suffix, avg[k].accuracy / avg[k].runs);
        if (k == 1) {
          report.set("f1.majority" + suffix, avg[k].majority_f1 / avg[k].runs);
          report.set("accuracy.majority" + suffix, avg[k].majority_accuracy / avg[k].runs);
        }
      }
      report.meta["classification.seeds"] = std::to_string(avg[1].runs);
    }
  }
  return report;
}

}  // namespace graphtext
