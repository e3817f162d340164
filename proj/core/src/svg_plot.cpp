#include "cfseq/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cfseq/error.hpp"

namespace cfseq::plot {

namespace {

constexpr double kMarginLeft = 58.0;
constexpr double kMarginRight = 14.0;
constexpr double kMarginTop = 28.0;
constexpr double kMarginBottom = 40.0;
constexpr double kTitleHeight = 30.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) ticks.push_back(v);
  return ticks;
}

void render_panel(std::ostringstream& svg, const Panel& panel, double ox, double oy, double w,
                  double h) {
  Range xr, yr;
  for (const auto& s : panel.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();

  const double px = ox + kMarginLeft;
  const double py = oy + kMarginTop;
  const double pw = w - kMarginLeft - kMarginRight;
  const double ph = h - kMarginTop - kMarginBottom;
  const auto map_x = [&](double v) { return px + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto map_y = [&](double v) { return py + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  svg << "<g class=\"panel\">\n";
  svg << "<rect x=\"" << num(px) << "\" y=\"" << num(py) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#888888\"/>\n";
  svg << "<text x=\"" << num(px + pw / 2) << "\" y=\"" << num(oy + 18)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(panel.title) << "</text>\n";
  for (double t : nice_ticks(xr.lo, xr.hi)) {
    const double x = map_x(t);
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(py + ph) << "\" x2=\"" << num(x)
        << "\" y2=\"" << num(py + ph + 4) << "\" stroke=\"#444444\"/>";
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(py + ph + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(t) << "</text>\n";
  }
  for (double t : nice_ticks(yr.lo, yr.hi)) {
    const double y = map_y(t);
    svg << "<line x1=\"" << num(px - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(px)
        << "\" y2=\"" << num(y) << "\" stroke=\"#444444\"/>";
    svg << "<text x=\"" << num(px - 6) << "\" y=\"" << num(y + 3)
        << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(t) << "</text>\n";
  }
  svg << "<text x=\"" << num(px + pw / 2) << "\" y=\"" << num(oy + h - 6)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(panel.x_label) << "</text>\n";
  svg << "<text transform=\"translate(" << num(ox + 14) << "," << num(py + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(panel.y_label)
      << "</text>\n";

  svg << "<g class=\"data\">\n";
  for (const auto& s : panel.series) {
    svg << "<path class=\"series\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
        << num(s.stroke_width) << "\" stroke-opacity=\"" << num(s.opacity) << "\" d=\"";
    bool pen_down = false;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen_down = false;
        continue;
      }
      svg << (pen_down ? "L" : "M") << num(map_x(s.x[i])) << ' ' << num(map_y(s.y[i]));
      pen_down = true;
    }
    svg << "\"/>\n";
  }
  svg << "</g>\n</g>\n";
}

}  // namespace

std::string render_svg(const Figure& figure) {
  if (figure.panels.empty()) throw std::invalid_argument("figure has no panels");
  const std::size_t cols = std::max<std::size_t>(1, std::min(figure.columns, figure.panels.size()));
  const std::size_t rows = (figure.panels.size() + cols - 1) / cols;
  const double width = figure.panel_width * static_cast<double>(cols);
  const double height = kTitleHeight + figure.panel_height * static_cast<double>(rows);

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(figure.title) << "</text>\n";
  for (std::size_t i = 0; i < figure.panels.size(); ++i) {
    const double ox = figure.panel_width * static_cast<double>(i % cols);
    const double oy = kTitleHeight + figure.panel_height * static_cast<double>(i / cols);
    render_panel(svg, figure.panels[i], ox, oy, figure.panel_width, figure.panel_height);
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const std::filesystem::path& path, const Figure& figure) {
  const std::string text = render_svg(figure);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace cfseq::plot
