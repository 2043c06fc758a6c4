#include "peslab/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pes::harness {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_line_chart(const SvgChart& chart) {
  if (chart.series.empty()) throw std::invalid_argument("svg chart has no series");
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const SvgSeries& s : chart.series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw std::invalid_argument("svg series must have matching nonempty x/y");
    }
    for (double v : s.x) { x_min = std::min(x_min, v); x_max = std::max(x_max, v); }
    for (double v : s.y) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
  }
  if (x_max == x_min) { x_max += 1.0; x_min -= 1.0; }
  const double y_pad = (y_max - y_min) * 0.08 + 1e-9;
  y_min -= y_pad;
  y_max += y_pad;

  const double ml = 60, mr = 140, mt = 40, mb = 50;
  const double pw = static_cast<double>(chart.width) - ml - mr;
  const double ph = static_cast<double>(chart.height) - mt - mb;
  auto sx = [&](double x) { return ml + pw * (x - x_min) / (x_max - x_min); };
  auto sy = [&](double y) { return mt + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(chart.width) + "\" height=\"" + std::to_string(chart.height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(chart.title) + "</text>\n";

  // Axes with 5 ticks each.
  svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(ml + pw) +
         "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) +
         "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x_min + (x_max - x_min) * t / 4.0;
    const double fy = y_min + (y_max - y_min) * t / 4.0;
    svg += "<text x=\"" + fmt(sx(fx)) + "\" y=\"" + fmt(mt + ph + 18) +
           "\" text-anchor=\"middle\">" + fmt(fx) + "</text>\n";
    svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(sy(fy) + 4) +
           "\" text-anchor=\"end\">" + fmt(fy) + "</text>\n";
    svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(sy(fy)) + "\" x2=\"" + fmt(ml + pw) +
           "\" y2=\"" + fmt(sy(fy)) + "\" stroke=\"#dddddd\"/>\n";
  }
  svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(mt + ph + 38) +
         "\" text-anchor=\"middle\">" + escape(chart.x_label) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(mt + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt(mt + ph / 2) + ")\">" + escape(chart.y_label) + "</text>\n";

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const SvgSeries& s = chart.series[i];
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string points;
    for (std::size_t p = 0; p < s.x.size(); ++p) {
      if (!points.empty()) points += ' ';
      points += fmt(sx(s.x[p])) + "," + fmt(sy(s.y[p]));
    }
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    if (s.marker_x) {
      svg += "<line x1=\"" + fmt(sx(*s.marker_x)) + "\" y1=\"" + fmt(mt) + "\" x2=\"" +
             fmt(sx(*s.marker_x)) + "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"";
      svg += color;
      svg += "\" stroke-dasharray=\"4 3\"/>\n";
    }
    const double ly = mt + 16.0 * static_cast<double>(i);
    svg += "<line x1=\"" + fmt(ml + pw + 10) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
           fmt(ml + pw + 30) + "\" y2=\"" + fmt(ly) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + fmt(ml + pw + 34) + "\" y=\"" + fmt(ly + 4) + "\">" +
           escape(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_line_chart(const SvgChart& chart, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << render_line_chart(chart);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace pes::harness
