#pragma once

#include <string>
#include <vector>

namespace memagent {

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN leaves a gap
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 440;
};

// Self-contained SVG line chart. Output depends only on the inputs.
std::string render_line_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series);

std::string xml_escape(const std::string& s);

}  // namespace memagent
