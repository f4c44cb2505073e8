#pragma once

#include "graphtext/evaluation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace graphtext {

struct NamedMetrics {
  std::string name;
  MetricsReport report;
};

/// One row per metric name (union over runs), one column per run; cells of
/// metrics a run lacks are left empty.
std::string metrics_table_csv(const std::vector<NamedMetrics>& runs);

/// accuracy@k against k for every run holding topk.acc@<k>.<split> entries.
std::string topk_curve_svg(const std::vector<NamedMetrics>& runs, const std::string& split = "test");

/// Writes metrics_table.csv and topk_curve.svg into `dir`.
void write_report(const std::vector<NamedMetrics>& runs, const std::filesystem::path& dir);

}  // namespace graphtext
