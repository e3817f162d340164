/**
 * @file svg_plot.hpp
 * @brief Minimal static SVG line plots.
 *
 * A figure is a grid of panels; every series becomes exactly one <path>
 * element inside its panel's <g class="panel"> group. Axes, ticks and labels
 * use <line>/<text> only.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cfseq::plot {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#000000";
  double stroke_width = 1.0;
  double opacity = 1.0;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

struct Figure {
  std::string title;
  std::vector<Panel> panels;
  std::size_t columns = 1;
  double panel_width = 420.0;
  double panel_height = 260.0;
};

[[nodiscard]] std::string render_svg(const Figure& figure);
void write_svg(const std::filesystem::path& path, const Figure& figure);

}  // namespace cfseq::plot
