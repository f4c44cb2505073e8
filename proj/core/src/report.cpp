#include "graphtext/report.hpp"

#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace graphtext {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// k -> accuracy for names of the form topk.acc@<k>.<split>.
std::map<int, double> topk_points(const MetricsReport& report, const std::string& split) {
  std::map<int, double> out;
  const std::string prefix = "topk.acc@";
  const std::string suffix = "." + split;
  for (const auto& [name, value] : report.values) {
    if (name.rfind(prefix, 0) != 0 || name.size() <= prefix.size() + suffix.size()) continue;
    if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    const std::string k = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    if (k.empty() || k.find_first_not_of("0123456789") != std::string::npos) continue;
    out[std::stoi(k)] = value;
  }
  return out;
}

}  // namespace

std::string metrics_table_csv(const std::vector<NamedMetrics>& runs) {
  std::set<std::string> names;
  for (const auto& r : runs) {
    for (const auto& [k, v] : r.report.values) names.insert(k);
  }
  std::ostringstream out;
  out << "metric";
  for (const auto& r : runs) out << ',' << csv_field(r.name);
  out << '\n';
  for (const auto& name : names) {
    out << csv_field(name);
    for (const auto& r : runs) {
      out << ',';
      auto it = r.report.values.find(name);
      if (it != r.report.values.end()) out << number(it->second);
    }
    out << '\n';
  }
  return out.str();
}

std::string topk_curve_svg(const std::vector<NamedMetrics>& runs, const std::string& split) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  constexpr double kW = 640, kH = 420, kLeft = 60, kRight = 170, kTop = 30, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  std::vector<std::map<int, double>> curves;
  int k_max = 1;
  for (const auto& r : runs) {
    curves.push_back(topk_points(r.report, split));
    if (!curves.back().empty()) k_max = std::max(k_max, curves.back().rbegin()->first);
  }
  auto x_of = [&](int k) { return kLeft + (k_max == 1 ? pw / 2 : pw * (k - 1) / (k_max - 1)); };
  auto y_of = [&](double acc) { return kTop + ph * (1.0 - std::clamp(acc, 0.0, 1.0)); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
    << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"18\" text-anchor=\"middle\">Top-k accuracy (" << xml_escape(split)
    << ")</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double acc = i / 5.0;
    const double y = y_of(acc);
    s << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + pw << "\" y2=\"" << y
      << "\" stroke=\"#e0e0e0\"/>\n";
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << number(acc) << "</text>\n";
  }
  for (int k = 1; k <= k_max; ++k) {
    s << "<text x=\"" << x_of(k) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << k << "</text>\n";
  }
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">k</text>\n";
  s << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << kTop + ph / 2 << ")\">accuracy</text>\n";

  int legend = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (curves[r].empty()) continue;
    const char* color = kColors[legend % (sizeof(kColors) / sizeof(kColors[0]))];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [k, acc] : curves[r]) {
      s << (first ? "" : " ") << x_of(k) << ',' << y_of(acc);
      first = false;
    }
    s << "\"/>\n";
    for (const auto& [k, acc] : curves[r]) {
      s << "<circle cx=\"" << x_of(k) << "\" cy=\"" << y_of(acc) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18 * legend;
    s << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 35 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly + 4 << "\">" << xml_escape(runs[r].name) << "</text>\n";
    ++legend;
  }
  s << "</svg>\n";
  return s.str();
}

void write_report(const std::vector<NamedMetrics>& runs, const std::filesystem::path& dir) {
  if (runs.empty()) throw ConfigError("report needs at least one metrics file");
  std::filesystem::create_directories(dir);
  io::write_file(dir / "metrics_table.csv", metrics_table_csv(runs));
  io::write_file(dir / "topk_curve.svg", topk_curve_svg(runs));
}

}  // namespace graphtext
