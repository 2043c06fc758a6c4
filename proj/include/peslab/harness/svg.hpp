#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pes::harness {

// Minimal deterministic SVG line charts; byte-identical output for
// identical input.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  // Optional vertical dashed marker (e.g. the peak of a curve).
  std::optional<double> marker_x;
};

struct SvgChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
  std::size_t width = 640;
  std::size_t height = 420;
};

std::string render_line_chart(const SvgChart& chart);
void write_line_chart(const SvgChart& chart, const std::filesystem::path& path);

}  // namespace pes::harness
