#pragma once

// Minimal SVG line charts for training curves.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace mentor {

struct Series {
  std::string label;
  std::vector<double> values;
};

inline std::string svg_line_chart(const std::string& title, const std::vector<Series>& series,
                                  double y_min = 0.0, double y_max = 1.0) {
  constexpr double kWidth = 640, kHeight = 360, kLeft = 56, kRight = 150, kTop = 36, kBottom = 40;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::size_t n_max = 1;
  for (const auto& s : series) n_max = std::max(n_max, s.values.size());
  if (!(y_max > y_min)) y_max = y_min + 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto px = [&](std::size_t i) { return kLeft + plot_w * (n_max > 1 ? static_cast<double>(i) / static_cast<double>(n_max - 1) : 0.0); };
  auto py = [&](double v) { return kTop + plot_h * (1.0 - (std::clamp(v, y_min, y_max) - y_min) / (y_max - y_min)); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(kLeft) + "\" y=\"20\" font-size=\"14\">" + title + "</text>\n";
  out += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double v = y_min + (y_max - y_min) * k / 4.0;
    out += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(py(v) + 4) + "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
  }
  out += "<text x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"" + fmt(kHeight - 10) +
         "\" text-anchor=\"middle\">iteration</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof *kColors)];
    std::string pts;
    for (std::size_t i = 0; i < series[s].values.size(); ++i) {
      if (!std::isfinite(series[s].values[i])) continue;
      pts += fmt(px(i)) + "," + fmt(py(series[s].values[i])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    double ly = kTop + 14.0 * static_cast<double>(s) + 8;
    out += "<line x1=\"" + fmt(kWidth - kRight + 10) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(kWidth - kRight + 30) +
           "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt(kWidth - kRight + 34) + "\" y=\"" + fmt(ly + 4) + "\">" + series[s].label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace mentor
