#include "podpipe/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "podpipe/textio.hpp"

namespace podpipe {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 16.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 52.0;
constexpr int kTicks = 5;

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void grow(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

Range fit_range(double lo, double hi) {
  if (lo > hi) return {0.0, 1.0};
  if (lo == hi) return {lo - 1.0, hi + 1.0};
  const double margin = 0.05 * (hi - lo);
  return {lo - margin, hi + margin};
}

}  // namespace

std::string render_scatter(const ScatterSpec& spec) {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  bool first = true;
  const auto grow = [&](const std::pair<double, double>& p) {
    if (first) {
      x_lo = x_hi = p.first;
      y_lo = y_hi = p.second;
      first = false;
      return;
    }
    x_lo = std::min(x_lo, p.first);
    x_hi = std::max(x_hi, p.first);
    y_lo = std::min(y_lo, p.second);
    y_hi = std::max(y_hi, p.second);
  };
  for (const auto& p : spec.points) grow(p);
  for (const auto& p : spec.removed) grow(p);
  const Range xr = first ? Range{0.0, 1.0} : fit_range(x_lo, x_hi);
  const Range yr = first ? Range{0.0, 1.0} : fit_range(y_lo, y_hi);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto sx = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  const auto sy = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * plot_h; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
       fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s += "<clipPath id=\"plot-area\"><rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) +
       "\" width=\"" + fmt(plot_w) + "\" height=\"" + fmt(plot_h) + "\"/></clipPath>\n";

  for (int i = 0; i <= kTicks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    const double px = sx(fx);
    const double py = sy(fy);
    s += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(px) + "\" y2=\"" +
         fmt(kTop + plot_h) + "\" stroke=\"#e4e4e4\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(kLeft + plot_w) +
         "\" y2=\"" + fmt(py) + "\" stroke=\"#e4e4e4\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(kTop + plot_h + 18.0) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\" text-anchor=\"middle\">" +
         fmt(fx, "%.4g") + "</text>\n";
    s += "<text x=\"" + fmt(kLeft - 8.0) + "\" y=\"" + fmt(py + 4.0) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\" text-anchor=\"end\">" +
         fmt(fy, "%.4g") + "</text>\n";
  }

  s += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(plot_w) +
       "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  s += "<g clip-path=\"url(#plot-area)\">\n";
  s += "<line x1=\"" + fmt(sx(xr.lo)) + "\" y1=\"" + fmt(sy(spec.slope * xr.lo + spec.intercept)) +
       "\" x2=\"" + fmt(sx(xr.hi)) + "\" y2=\"" + fmt(sy(spec.slope * xr.hi + spec.intercept)) +
       "\" stroke=\"#2e7d32\" stroke-width=\"1.5\"/>\n";
  for (const auto& p : spec.points)
    s += "<circle cx=\"" + fmt(sx(p.first)) + "\" cy=\"" + fmt(sy(p.second)) +
         "\" r=\"2.5\" fill=\"#4682b4\" fill-opacity=\"0.55\"/>\n";
  for (const auto& p : spec.removed) {
    const double cx = sx(p.first);
    const double cy = sy(p.second);
    s += "<path d=\"M " + fmt(cx - 3.5) + " " + fmt(cy - 3.5) + " L " + fmt(cx + 3.5) + " " +
         fmt(cy + 3.5) + " M " + fmt(cx - 3.5) + " " + fmt(cy + 3.5) + " L " + fmt(cx + 3.5) +
         " " + fmt(cy - 3.5) + "\" stroke=\"#c62828\" stroke-width=\"1.5\"/>\n";
  }
  s += "</g>\n";

  s += "<text x=\"" + fmt(kWidth / 2.0) + "\" y=\"24\" font-family=\"sans-serif\" "
       "font-size=\"15\" fill=\"#222\" text-anchor=\"middle\">" +
       escape(spec.title) + "</text>\n";
  s += "<text x=\"" + fmt(kLeft + plot_w / 2.0) + "\" y=\"" + fmt(kHeight - 14.0) +
       "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\">" +
       escape(spec.label_x) + "</text>\n";
  s += "<text x=\"18\" y=\"" + fmt(kTop + plot_h / 2.0) +
       "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 18 " +
       fmt(kTop + plot_h / 2.0) + ")\">" + escape(spec.label_y) + "</text>\n";
  s += "<text x=\"" + fmt(kLeft + 10.0) + "\" y=\"" + fmt(kTop + 18.0) +
       "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222\">r = " +
       fmt(spec.r, "%.3f") + ", N = " + std::to_string(spec.n) + "</text>\n";
  s += "</svg>\n";
  return s;
}

void write_scatter(const ScatterSpec& spec, const std::filesystem::path& path) {
  write_file(path, render_scatter(spec));
}

}  // namespace podpipe
