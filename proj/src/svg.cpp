#include "velu/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "velu/errors.hpp"
#include "velu/format.hpp"

namespace velu {

const std::vector<std::string>& svg_palette() {
  static const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette;
}

namespace {

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void grow(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo < hi)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;
  }
};

std::string fmt(double v) { return double_to_string_fixed(v, 2); }

std::string fmt_tick(double v) {
  // Short tick labels; strip trailing zeros from a 4-digit fixed form.
  std::string s = double_to_string_fixed(v, 4);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s.empty() ? "0" : s;
}

}  // namespace

void write_svg_chart(const std::vector<SvgPanel>& panels, const std::string& path,
                     std::size_t panel_width, std::size_t panel_height) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open SVG file for writing: " + path);

  const double margin_left = 56, margin_right = 16, margin_top = 28, margin_bottom = 40;
  const double total_w = static_cast<double>(panel_width * panels.size());
  const double total_h = static_cast<double>(panel_height);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w << "\" height=\""
      << total_h << "\" viewBox=\"0 0 " << total_w << " " << total_h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const SvgPanel& panel = panels[pi];
    const double x0 = static_cast<double>(pi * panel_width) + margin_left;
    const double y0 = margin_top;
    const double plot_w = static_cast<double>(panel_width) - margin_left - margin_right;
    const double plot_h = total_h - margin_top - margin_bottom;

    Extent ex, ey;
    for (const SvgSeries& s : panel.series) {
      for (const auto& [x, y] : s.points) {
        if (std::isfinite(x) && std::isfinite(y)) {
          ex.grow(x);
          ey.grow(y);
        }
      }
    }
    if (!(ex.lo <= ex.hi)) {
      ex.lo = 0;
      ex.hi = 1;
      ey.lo = 0;
      ey.hi = 1;
    }
    ex.pad();
    ey.pad();

    auto sx = [&](double x) { return x0 + (x - ex.lo) / (ex.hi - ex.lo) * plot_w; };
    auto sy = [&](double y) { return y0 + plot_h - (y - ey.lo) / (ey.hi - ey.lo) * plot_h; };

    out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(plot_w)
        << "\" height=\"" << fmt(plot_h)
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << fmt(x0 + plot_w / 2) << "\" y=\"" << fmt(y0 - 10)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << panel.title
        << "</text>\n";

    const int ticks = 5;
    for (int t = 0; t <= ticks; ++t) {
      const double fx = ex.lo + (ex.hi - ex.lo) * t / ticks;
      const double fy = ey.lo + (ey.hi - ey.lo) * t / ticks;
      out << "<line x1=\"" << fmt(sx(fx)) << "\" y1=\"" << fmt(y0 + plot_h) << "\" x2=\""
          << fmt(sx(fx)) << "\" y2=\"" << fmt(y0 + plot_h + 4)
          << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << fmt(y0 + plot_h + 16)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
          << fmt_tick(fx) << "</text>\n";
      out << "<line x1=\"" << fmt(x0 - 4) << "\" y1=\"" << fmt(sy(fy)) << "\" x2=\"" << fmt(x0)
          << "\" y2=\"" << fmt(sy(fy)) << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(sy(fy) + 3)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt_tick(fy)
          << "</text>\n";
    }
    out << "<text x=\"" << fmt(x0 + plot_w / 2) << "\" y=\"" << fmt(y0 + plot_h + 32)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << panel.x_label << "</text>\n";
    out << "<text x=\"" << fmt(x0 - 42) << "\" y=\"" << fmt(y0 + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 "
        << fmt(x0 - 42) << " " << fmt(y0 + plot_h / 2) << ")\">" << panel.y_label << "</text>\n";

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const SvgSeries& s = panel.series[si];
      const std::string color =
          s.color.empty() ? svg_palette()[si % svg_palette().size()] : s.color;
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (!first) out << " ";
        out << fmt(sx(x)) << "," << fmt(sy(y));
        first = false;
      }
      out << "\"/>\n";
      // legend entry
      const double ly = y0 + 14 + 14 * static_cast<double>(si);
      out << "<line x1=\"" << fmt(x0 + 8) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
          << fmt(x0 + 28) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
      out << "<text x=\"" << fmt(x0 + 32) << "\" y=\"" << fmt(ly)
          << "\" font-family=\"sans-serif\" font-size=\"10\">" << s.name << "</text>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace velu
