#pragma once

#include <string>
#include <vector>

#include "stabclust/dataset.hpp"

namespace stabclust::svg {

// Static SVG primitives for the report stage: line charts, scatters and a
// consensus heatmap. Output is deterministic; the generation-time comment
// is emitted only when `timestamp` is set (suppressed by --reproducible).

struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 780;
  int height = 480;
  bool log_x = false;
  bool timestamp = false;
};

void write_line_chart(const std::string& path, const std::vector<LineSeries>& series,
                      const PlotOptions& opts);

struct ScatterOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  int width = 720;
  int height = 560;
  bool timestamp = false;
};

// One color per category, with a legend.
void write_scatter_categorical(const std::string& path, const std::vector<double>& x,
                               const std::vector<double>& y,
                               const std::vector<int>& category,
                               const std::vector<std::string>& category_names,
                               const ScatterOptions& opts);

// Continuous color ramp over `value`, with a color bar.
void write_scatter_continuous(const std::string& path, const std::vector<double>& x,
                              const std::vector<double>& y,
                              const std::vector<double>& value,
                              const std::string& value_label, const ScatterOptions& opts);

struct HeatmapOptions {
  std::string title;
  int max_cells = 1500;  // rows/cols beyond this are strided down
  bool timestamp = false;
};

// values in [0,1]; `order` permutes rows/columns (e.g. by cluster then
// local stability) before drawing.
void write_heatmap(const std::string& path, const Matrix& values,
                   const std::vector<int>& order, const HeatmapOptions& opts);

}  // namespace stabclust::svg
