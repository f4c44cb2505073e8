#include "doctest.h"

#include "graphtext/errors.hpp"
#include "graphtext/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace graphtext;

namespace {

NamedMetrics run(const std::string& name, std::vector<std::pair<std::string, double>> values) {
  NamedMetrics m;
  m.name = name;
  for (const auto& [k, v] : values) m.report.set(k, v);
  return m;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = haystack.find(needle); at != std::string::npos; at = haystack.find(needle, at + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("two runs merge into one table") {
  const std::string csv = metrics_table_csv({run("a", {{"link.auc.test", 0.5}, {"topk.acc@1.test", 0.25}}),
                                             run("b", {{"link.auc.test", 0.75}, {"coupling.test", 0.125}})});
  CHECK(csv ==
        "metric,a,b\n"
        "coupling.test,,0.125\n"
        "link.auc.test,0.5,0.75\n"
        "topk.acc@1.test,0.25,\n");
}

TEST_CASE("run names with commas are quoted") {
  const std::string csv = metrics_table_csv({run("x,y", {{"m", 1.0}})});
  CHECK(csv.rfind("metric,\"x,y\"\n", 0) == 0);
}

TEST_CASE("top-k curve draws one line per run") {
  const auto a = run("joint", {{"topk.acc@1.test", 0.1}, {"topk.acc@2.test", 0.3}, {"topk.acc@3.test", 0.6}});
  const auto b = run("baseline", {{"topk.acc@1.test", 0.05}, {"topk.acc@2.test", 0.1}});
  const auto c = run("other split", {{"topk.acc@1.val", 0.5}});
  const std::string svg = topk_curve_svg({a, b, c});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(count(svg, "<circle") == 5);
  CHECK(svg.find("joint") != std::string::npos);
  CHECK(svg.find("other split") == std::string::npos);
  CHECK(count(topk_curve_svg({c}, "val"), "<polyline") == 1);
}

TEST_CASE("labels are escaped") {
  const std::string svg = topk_curve_svg({run("a<b", {{"topk.acc@1.test", 0.5}})});
  CHECK(svg.find("a&lt;b") != std::string::npos);
}

TEST_CASE("report files are written") {
  const auto dir = std::filesystem::temp_directory_path() / "graphtext_report_test";
  std::filesystem::remove_all(dir);
  write_report({run("a", {{"topk.acc@1.test", 0.5}})}, dir);
  CHECK(std::filesystem::exists(dir / "metrics_table.csv"));
  CHECK(std::filesystem::exists(dir / "topk_curve.svg"));
  std::ifstream in(dir / "metrics_table.csv");
  std::stringstream body;
  body << in.rdbuf();
  CHECK(body.str() == "metric,a\ntopk.acc@1.test,0.5\n");
  CHECK_THROWS_AS(write_report({}, dir), ConfigError);
}

}  // TEST_SUITE
