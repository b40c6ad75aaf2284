#pragma once

#include <string>
#include <vector>

namespace slipflow::cli {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Standalone SVG with a linear x axis and a log10 y axis. Non-positive
/// values are skipped.
std::string render_log_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                            const std::vector<PlotSeries>& series);

}  // namespace slipflow::cli
