#ifndef PERTURBENCH_PLOT_HPP
#define PERTURBENCH_PLOT_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace perturbench {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 880;
  int height = 560;
};

// Renders labelled line series to a PNG: axes, tick grid, legend. Series
// colors follow a fixed six-color cycle in input order.
void render_line_plot(const std::vector<PlotSeries>& series,
                      const PlotOptions& options,
                      const std::filesystem::path& path);

}  // namespace perturbench

#endif  // PERTURBENCH_PLOT_HPP
