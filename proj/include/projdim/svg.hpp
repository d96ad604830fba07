#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "projdim/common.hpp"

// Minimal data-only SVG charts for the exponent fits: scatter points in
// log10-log10 coordinates plus straight reference/fit lines. No interactivity.

namespace projdim {

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // already in log10 coordinates
};

struct ChartLine {
  std::string label;
  double slope = 0.0;
  double intercept = 0.0;  // y = intercept + slope * x, log10 coordinates
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return std::string(buf);
}

inline std::string svg_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return std::string(buf);
}

}  // namespace detail

inline void write_loglog_chart(const std::string& path, const std::string& title,
                               const std::string& xlabel, const std::string& ylabel,
                               const std::vector<ChartSeries>& series,
                               const std::vector<ChartLine>& lines) {
  const double width = 640, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  if (x_lo > x_hi) {
    x_lo = 0;
    x_hi = 1;
    y_lo = 0;
    y_hi = 1;
  }
  for (const auto& ln : lines) {
    y_lo = std::min({y_lo, ln.intercept + ln.slope * x_lo, ln.intercept + ln.slope * x_hi});
    y_hi = std::max({y_hi, ln.intercept + ln.slope * x_lo, ln.intercept + ln.slope * x_hi});
  }
  double xpad = (x_hi - x_lo) * 0.08 + 1e-9, ypad = (y_hi - y_lo) * 0.08 + 1e-9;
  x_lo -= xpad;
  x_hi += xpad;
  y_lo -= ypad;
  y_hi += ypad;

  auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb); };

  static const char* colors[] = {"#1f6fb5", "#c4422d", "#3a8a3e", "#8452a1", "#b58a1f"};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write svg: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";

  // axes with five ticks each
  out << "<g stroke=\"#444\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\"/>\n";
  out << "</g>\n<g font-size=\"11\" fill=\"#333\">\n";
  for (int t = 0; t <= 4; ++t) {
    double fx = x_lo + (x_hi - x_lo) * t / 4.0;
    double fy = y_lo + (y_hi - y_lo) * t / 4.0;
    out << "<line x1=\"" << detail::svg_num(px(fx)) << "\" y1=\"" << height - mb << "\" x2=\""
        << detail::svg_num(px(fx)) << "\" y2=\"" << height - mb + 4 << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << detail::svg_num(px(fx)) << "\" y=\"" << height - mb + 18
        << "\" text-anchor=\"middle\">" << detail::svg_label(fx) << "</text>\n";
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << detail::svg_num(py(fy)) << "\" x2=\"" << ml
        << "\" y2=\"" << detail::svg_num(py(fy)) << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << detail::svg_num(py(fy) + 4)
        << "\" text-anchor=\"end\">" << detail::svg_label(fy) << "</text>\n";
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (mt + height - mb) / 2
      << ")\">" << ylabel << "</text>\n";
  out << "</g>\n";

  int color_idx = 0;
  double legend_y = mt + 8;
  for (const auto& ln : lines) {
    const char* color = colors[color_idx++ % 5];
    out << "<line x1=\"" << detail::svg_num(px(x_lo)) << "\" y1=\""
        << detail::svg_num(py(ln.intercept + ln.slope * x_lo)) << "\" x2=\""
        << detail::svg_num(px(x_hi)) << "\" y2=\""
        << detail::svg_num(py(ln.intercept + ln.slope * x_hi)) << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"6 3\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << width - mr - 6 << "\" y=\"" << detail::svg_num(legend_y)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << ln.label
        << "</text>\n";
    legend_y += 14;
  }
  for (const auto& s : series) {
    const char* color = colors[color_idx++ % 5];
    for (auto [x, y] : s.points)
      out << "<circle cx=\"" << detail::svg_num(px(x)) << "\" cy=\"" << detail::svg_num(py(y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << width - mr - 6 << "\" y=\"" << detail::svg_num(legend_y)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << s.label
        << "</text>\n";
    legend_y += 14;
  }
  out << "</svg>\n";
}

}  // namespace projdim
