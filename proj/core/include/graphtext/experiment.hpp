#pragma once

#include "graphtext/datasets.hpp"
#include "graphtext/evaluation.hpp"
#include "graphtext/run_config.hpp"
#include "graphtext/trainer.hpp"

namespace graphtext {

/// All enabled metrics of a model on one split, named
/// `<metric>.<kind>.<split>`: auc.link_prediction, topk.acc@<k>, topk.chance,
/// coupling.distance, correlation.simrank, f1.<kind>, accuracy.<kind> with
/// kinds text_mean, node, concat and majority. A metric that cannot be
/// computed on the split is listed under `_meta` as skipped.<metric>.
/// Link-prediction AUC is the mean over options.negative_draws negative
/// samples seeded options.seed, options.seed + 1, ...
/// `features` overrides the SVD features of the split graph.
MetricsReport evaluate_model(const JointModel& model, const Dataset& dataset, const DataSplit& split,
                             SplitName which, const EvalOptions& options, const NodeFeatures* features = nullptr);

}  // namespace graphtext
