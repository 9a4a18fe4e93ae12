#include "wl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "wl/common.hpp"

namespace wl {

namespace {

constexpr double kWidth = 800.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 780.0, kTop = 40.0, kBottom = 430.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                          "#d62728", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

struct Axis {
  double lo = 0.0, hi = 1.0;
  std::vector<double> ticks;
};

Axis make_axis(double lo, double hi) {
  Axis a;
  if (lo == hi) {  // degenerate range: widen symmetrically
    lo -= 1.0;
    hi += 1.0;
  }
  a.lo = lo;
  a.hi = hi;
  const double step0 = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(step0)));
  const double norm = step0 / mag;
  const double step =
      mag * (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0);
  double t = std::ceil(lo / step) * step;
  for (; t <= hi + step * 1e-9; t += step) {
    // Snap values that should be zero so labels never read "-0".
    a.ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return a;
}

}  // namespace

std::string render_line_plot(const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series) {
  if (series.empty()) throw ValueError("render_line_plot: no series");
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw ShapeError("render_line_plot: series '" + s.label + "' has " +
                       std::to_string(s.x.size()) + " x values and " +
                       std::to_string(s.y.size()) + " y values");
    if (s.x.empty())
      throw ValueError("render_line_plot: series '" + s.label + "' is empty");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw ValueError("render_line_plot: series '" + s.label +
                         "' has a non-finite value");
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  const Axis ax = make_axis(xmin, xmax);
  const Axis ay = make_axis(ymin, ymax);
  auto px = [&](double v) {
    return kLeft + (v - ax.lo) / (ax.hi - ax.lo) * (kRight - kLeft);
  };
  auto py = [&](double v) {
    return kBottom - (v - ay.lo) / (ay.hi - ay.lo) * (kBottom - kTop);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt("%.0f", kWidth) + "\" height=\"" + fmt("%.0f", kHeight) +
         "\" viewBox=\"0 0 " + fmt("%.0f", kWidth) + " " +
         fmt("%.0f", kHeight) + "\">\n";
  svg += "<rect width=\"" + fmt("%.0f", kWidth) + "\" height=\"" +
         fmt("%.0f", kHeight) + "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + fmt("%.0f", kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" +
         xml_escape(title) + "</text>\n";

  for (double t : ax.ticks) {
    const std::string x = fmt("%.2f", px(t));
    svg += "<line x1=\"" + x + "\" y1=\"" + fmt("%.2f", kTop) + "\" x2=\"" +
           x + "\" y2=\"" + fmt("%.2f", kBottom) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + x + "\" y=\"" + fmt("%.2f", kBottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           fmt("%.6g", t) + "</text>\n";
  }
  for (double t : ay.ticks) {
    const std::string y = fmt("%.2f", py(t));
    svg += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + y + "\" x2=\"" +
           fmt("%.2f", kRight) + "\" y2=\"" + y +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt("%.2f", kLeft - 8) + "\" y=\"" +
           fmt("%.2f", py(t) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           fmt("%.6g", t) + "</text>\n";
  }
  svg += "<rect x=\"" + fmt("%.0f", kLeft) + "\" y=\"" + fmt("%.0f", kTop) +
         "\" width=\"" + fmt("%.0f", kRight - kLeft) + "\" height=\"" +
         fmt("%.0f", kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + fmt("%.0f", (kLeft + kRight) / 2) + "\" y=\"" +
         fmt("%.0f", kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" +
         xml_escape(x_label) + "</text>\n";
  svg += "<text x=\"18\" y=\"" + fmt("%.0f", (kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 18 " +
         fmt("%.0f", (kTop + kBottom) / 2) + ")\">" +
         xml_escape(y_label) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    if (s.x.size() == 1) {
      svg += "<circle cx=\"" + fmt("%.2f", px(s.x[0])) + "\" cy=\"" +
             fmt("%.2f", py(s.y[0])) + "\" r=\"3\" fill=\"" + color +
             "\"/>\n";
    } else {
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += color;
      svg += "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (i) svg += " ";
        svg += fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.y[i]));
      }
      svg += "\"/>\n";
    }
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(si);
    const char* color = kPalette[si % kPaletteSize];
    svg += "<line x1=\"" + fmt("%.0f", kRight - 140) + "\" y1=\"" +
           fmt("%.2f", ly) + "\" x2=\"" + fmt("%.0f", kRight - 116) +
           "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt("%.0f", kRight - 110) + "\" y=\"" +
           fmt("%.2f", ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           xml_escape(series[si].label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void plot_curves(const std::string& title, const std::string& x_label,
                 const std::string& y_label,
                 const std::vector<PlotSeries>& series,
                 const std::string& path) {
  const std::string svg = render_line_plot(title, x_label, y_label, series);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::size_t n = std::fwrite(svg.data(), 1, svg.size(), f);
  const bool ok = n == svg.size() && std::fclose(f) == 0;
  if (!ok) throw IoError("failed to write " + path);
}

}  // namespace wl
