#pragma once

#include <string>
#include <vector>

namespace wl {

/// Minimal deterministic SVG line plots: identical input renders identical
/// bytes (fixed layout, fixed decimal formatting, no timestamps), so plot
/// files can be golden-tested and reruns stay byte-identical.

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;  // same length; all values finite
};

/// Self-contained SVG with axes, one polyline per series (a dot marker when a
/// series has a single point), and a legend. Throws ValueError on empty
/// input, empty series, or non-finite values; ShapeError when x and y
/// lengths differ.
std::string render_line_plot(const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series);

/// render_line_plot + write to disk (IoError on failure).
void plot_curves(const std::string& title, const std::string& x_label,
                 const std::string& y_label,
                 const std::vector<PlotSeries>& series,
                 const std::string& path);

}  // namespace wl
