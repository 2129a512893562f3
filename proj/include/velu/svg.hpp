#pragma once

#include <string>
#include <utility>
#include <vector>

namespace velu {

struct SvgSeries {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

struct SvgPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
};

// Line chart without plotting dependencies: panels side by side, shared
// styling, legend per panel. Output is deterministic for identical input.
void write_svg_chart(const std::vector<SvgPanel>& panels, const std::string& path,
                     std::size_t panel_width = 480, std::size_t panel_height = 360);

// Color cycle used by the CLI for consistent series colors.
const std::vector<std::string>& svg_palette();

}  // namespace velu
