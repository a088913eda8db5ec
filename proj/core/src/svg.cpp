#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "stcov/fbplot.hpp"

namespace stcov {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-300 ? 0.0 : v);
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

// 1, 2 or 5 times a power of ten, giving roughly `target` intervals.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Frame {
  double left, right, top, bottom;
  double x0, x1, y0, y1;

  [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * (right - left); }
  [[nodiscard]] double py(double y) const { return bottom - (y - y0) / (y1 - y0) * (bottom - top); }
};

std::string polyline(const Frame& f, const std::vector<int>& lags, const std::vector<double>& v) {
  std::string d;
  for (std::size_t t = 0; t < v.size(); ++t) {
    d += (t == 0 ? "M" : " L") + num(f.px(lags[t])) + "," + num(f.py(v[t]));
  }
  return d;
}

std::vector<double> row(const RowMatrix& m, std::size_t i) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
  }
  return out;
}

}  // namespace

std::string render_svg(const BoxplotSummary& s, const RowMatrix& curves, const std::vector<int>& lags,
                       const SvgOptions& o) {
  Frame f{70.0, o.width - 20.0, 40.0, o.height - 50.0, 0, 1, 0, 1};
  f.x0 = lags.empty() ? 0.0 : lags.front();
  f.x1 = lags.empty() ? 1.0 : lags.back();
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1.0;

  double lo = 0.0, hi = 0.0;
  bool first = !o.zero_line;
  const auto widen = [&](double v) {
    if (first) {
      lo = hi = v;
      first = false;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (double v : s.whisker_lower) widen(v);
  for (double v : s.whisker_upper) widen(v);
  for (std::size_t i : s.outlier_indices) {
    for (double v : row(curves, i)) widen(v);
  }
  if (hi - lo <= 0.0) {
    const double pad = std::max(1.0, std::abs(hi));
    lo -= pad;
    hi += pad;
  }
  const double margin = 0.05 * (hi - lo);
  f.y0 = lo - margin;
  f.y1 = hi + margin;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(o.width) + "\" height=\"" + std::to_string(o.height) + "\" viewBox=\"0 0 " +
         std::to_string(o.width) + " " + std::to_string(o.height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(o.width) + "\" height=\"" +
         std::to_string(o.height) + "\" fill=\"white\"/>\n";
  if (!o.title.empty()) {
    out += "<text x=\"" + num(o.width / 2.0) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           escape(o.title) + "</text>\n";
  }

  // Axes and ticks.
  out += "<g stroke=\"#444444\" stroke-width=\"1\" fill=\"none\">\n";
  out += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(f.bottom) + "\" x2=\"" + num(f.right) +
         "\" y2=\"" + num(f.bottom) + "\"/>\n";
  out += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(f.top) + "\" x2=\"" + num(f.left) +
         "\" y2=\"" + num(f.bottom) + "\"/>\n";
  out += "</g>\n<g font-size=\"11\" fill=\"#222222\">\n";
  const double xs = std::max(1.0, nice_step(f.x1 - f.x0, 10));
  for (double x = std::ceil(f.x0 / xs) * xs; x <= f.x1 + 1e-9; x += xs) {
    out += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(f.bottom + 16) +
           "\" text-anchor=\"middle\">" + tick_label(x) + "</text>\n";
  }
  const double ys = nice_step(f.y1 - f.y0, 6);
  for (double y = std::ceil(f.y0 / ys) * ys; y <= f.y1; y += ys) {
    out += "<text x=\"" + num(f.left - 6) + "\" y=\"" + num(f.py(y) + 4) +
           "\" text-anchor=\"end\">" + tick_label(y) + "</text>\n";
  }
  out += "</g>\n";
  if (!o.x_label.empty()) {
    out += "<text x=\"" + num((f.left + f.right) / 2) + "\" y=\"" + num(o.height - 12.0) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + escape(o.x_label) + "</text>\n";
  }
  if (!o.y_label.empty()) {
    out += "<text x=\"16\" y=\"" + num((f.top + f.bottom) / 2) +
           "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " +
           num((f.top + f.bottom) / 2) + ")\">" + escape(o.y_label) + "</text>\n";
  }

  if (!lags.empty() && !s.central_lower.empty()) {
    // Central region as a closed band.
    std::string band = polyline(f, lags, s.central_upper);
    for (std::size_t t = s.central_lower.size(); t-- > 0;) {
      band += " L" + num(f.px(lags[t])) + "," + num(f.py(s.central_lower[t]));
    }
    out += "<path class=\"central\" d=\"" + band + " Z\" fill=\"" + o.central_color +
           "\" fill-opacity=\"0.6\" stroke=\"none\"/>\n";

    // Whisker envelope plus vertical bars at the middle lag.
    out += "<g class=\"whiskers\" stroke=\"" + o.whisker_color + "\" stroke-width=\"1.5\" fill=\"none\">\n";
    out += "<path d=\"" + polyline(f, lags, s.whisker_upper) + "\"/>\n";
    out += "<path d=\"" + polyline(f, lags, s.whisker_lower) + "\"/>\n";
    const std::size_t mid = lags.size() / 2;
    out += "<line x1=\"" + num(f.px(lags[mid])) + "\" y1=\"" + num(f.py(s.whisker_upper[mid])) +
           "\" x2=\"" + num(f.px(lags[mid])) + "\" y2=\"" + num(f.py(s.central_upper[mid])) + "\"/>\n";
    out += "<line x1=\"" + num(f.px(lags[mid])) + "\" y1=\"" + num(f.py(s.central_lower[mid])) +
           "\" x2=\"" + num(f.px(lags[mid])) + "\" y2=\"" + num(f.py(s.whisker_lower[mid])) + "\"/>\n";
    out += "</g>\n";

    for (std::size_t i : s.outlier_indices) {
      out += "<path class=\"outlier\" d=\"" + polyline(f, lags, row(curves, i)) + "\" stroke=\"" +
             o.outlier_color + "\" stroke-width=\"1\" fill=\"none\"/>\n";
    }
    out += "<path class=\"median\" d=\"" + polyline(f, lags, row(curves, s.median_index)) +
           "\" stroke=\"" + o.median_color + "\" stroke-width=\"2\" fill=\"none\"/>\n";
  }

  if (o.zero_line) {
    out += "<line class=\"reference\" x1=\"" + num(f.left) + "\" y1=\"" + num(f.py(0.0)) + "\" x2=\"" +
           num(f.right) + "\" y2=\"" + num(f.py(0.0)) + "\" stroke=\"" + o.zero_color +
           "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace stcov
