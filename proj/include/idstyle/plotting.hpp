#pragma once

#include <span>
#include <string>
#include <vector>

#include "idstyle/evaluation.hpp"

namespace idstyle {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Standalone SVG document with the charts laid out side by side.
std::string render_svg(std::span<const Chart> charts);

/// Accuracy-vs-k and identity-vs-k charts, one line per intensity.
std::vector<Chart> sweep_charts(const SweepResult& result);

}  // namespace idstyle
