#pragma once

// Minimal self-contained SVG line charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qite::lab {

struct PlotSeries {
  std::string label;  ///< empty: not shown in the legend
  std::string color = "#1f77b4";
  std::vector<double> y;
  bool dashed = false;
  double opacity = 1.0;
  double width = 2.0;
};

struct Chart {
  std::string title;
  std::string xlabel = "step";
  std::string ylabel;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string render_svg(const Chart& chart) {
  constexpr double W = 720, H = 460, left = 80, right = 190, top = 40, bottom = 56;
  const double pw = W - left - right, ph = H - top - bottom;

  std::size_t xmax = 1;
  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  const auto tr = [&](double v) { return chart.log_y ? std::log10(v) : v; };
  for (const auto& s : chart.series) {
    xmax = std::max(xmax, s.y.size() > 0 ? s.y.size() - 1 : 0);
    for (double v : s.y) {
      if (!std::isfinite(v) || (chart.log_y && v <= 0.0)) continue;
      ylo = std::min(ylo, tr(v));
      yhi = std::max(yhi, tr(v));
    }
  }
  if (!std::isfinite(ylo)) {
    ylo = 0.0;
    yhi = 1.0;
  }
  if (yhi - ylo < 1e-12) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  const auto px = [&](double x) { return left + pw * x / static_cast<double>(xmax); };
  const auto py = [&](double y) { return top + ph * (1.0 - (y - ylo) / (yhi - ylo)); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"#ffffff\"/>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << detail::escape_xml(chart.title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#333333\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double yv = ylo + (yhi - ylo) * i / 5.0;
    const double yy = py(yv);
    o << "<line x1=\"" << left << "\" y1=\"" << yy << "\" x2=\"" << left + pw << "\" y2=\"" << yy
      << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">"
      << detail::fmt_num(chart.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
    const double xv = static_cast<double>(xmax) * i / 5.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
      << detail::fmt_num(xv) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << detail::escape_xml(chart.xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::escape_xml(chart.ylabel + (chart.log_y ? " (log scale)" : "")) << "</text>\n";

  for (const auto& s : chart.series) {
    std::ostringstream pts;
    bool open = false;
    std::string path;
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double v = s.y[i];
      if (!std::isfinite(v) || (chart.log_y && v <= 0.0)) {
        open = false;
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f ", open ? "L" : "M", px(static_cast<double>(i)), py(tr(v)));
      path += buf;
      open = true;
    }
    if (path.empty()) continue;
    o << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width
      << "\" stroke-opacity=\"" << s.opacity << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
  }

  double ly = top + 10;
  for (const auto& s : chart.series) {
    if (s.label.empty()) continue;
    const double lx = left + pw + 14;
    o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 26 << "\" y2=\"" << ly << "\" stroke=\""
      << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    o << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4 << "\">" << detail::escape_xml(s.label) << "</text>\n";
    ly += 20;
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_svg(const std::string& path, const Chart& chart) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render_svg(chart);
}

}  // namespace qite::lab
