// Minimal SVG emission for the plot command: scatter plots and line charts
// with axes and tick labels. Static files only.
#pragma once

#include <string>
#include <vector>

namespace difflab::cli {

struct Series {
  std::string name;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;  // false = scatter dots
};

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool log_y = false);

}  // namespace difflab::cli
