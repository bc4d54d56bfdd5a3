#pragma once

// Minimal polyline charts for regret curves and elbow plots.

#include <string>
#include <vector>

namespace neuclust::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional half-width of a shaded band around y (e.g. one std).
  std::vector<double> spread;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 720;
  int height = 440;
};

std::string render(const Chart& chart);

}  // namespace neuclust::svg
