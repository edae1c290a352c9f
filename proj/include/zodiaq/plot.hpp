#pragma once

// Static SVG plots of a time-series log: time histories and the planar path.
// Output depends only on the log contents (fixed layout, fixed number format).

#include "zodiaq/log.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace zodiaq {

namespace plot_detail {

inline constexpr double kWidth = 640.0, kHeight = 360.0;
inline constexpr double kLeft = 70.0, kRight = 20.0, kTop = 30.0, kBottom = 40.0;
inline constexpr std::array<const char*, 12> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                                         "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000", "#aec7e8"};

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void pad() {
    if (!(hi > lo)) {
      const double c = std::isfinite(lo) ? lo : 0.0;
      lo = c - 0.5;
      hi = c + 0.5;
    }
  }
};

inline Range range_of(const std::vector<std::vector<double>>& series) {
  Range r{HUGE_VAL, -HUGE_VAL};
  for (const auto& s : series)
    for (double v : s)
      if (std::isfinite(v)) {
        r.lo = std::min(r.lo, v);
        r.hi = std::max(r.hi, v);
      }
  r.pad();
  return r;
}

class Canvas {
 public:
  Canvas(const std::string& title, Range x, Range y, const std::string& xlabel, const std::string& ylabel) : x_(x), y_(y) {
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) + "\" height=\"" + fmt("%.0f", kHeight) +
            "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out_ += "<text x=\"" + fmt("%.1f", kWidth / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" + title + "</text>\n";
    out_ += "<rect x=\"" + fmt("%.1f", kLeft) + "\" y=\"" + fmt("%.1f", kTop) + "\" width=\"" + fmt("%.1f", kWidth - kLeft - kRight) +
            "\" height=\"" + fmt("%.1f", kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0, yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      out_ += "<text x=\"" + fmt("%.1f", px(xv)) + "\" y=\"" + fmt("%.1f", kHeight - kBottom + 14) + "\" text-anchor=\"middle\">" +
              fmt("%.4g", xv) + "</text>\n";
      out_ += "<text x=\"" + fmt("%.1f", kLeft - 6) + "\" y=\"" + fmt("%.1f", py(yv) + 4) + "\" text-anchor=\"end\">" + fmt("%.4g", yv) +
              "</text>\n";
    }
    out_ += "<text x=\"" + fmt("%.1f", kWidth / 2) + "\" y=\"" + fmt("%.1f", kHeight - 6) + "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
    out_ += "<text x=\"14\" y=\"" + fmt("%.1f", kHeight / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
            fmt("%.1f", kHeight / 2) + ")\">" + ylabel + "</text>\n";
  }

  void line(const std::vector<double>& xs, const std::vector<double>& ys, const char* color, const std::string& label, int slot,
            bool dashed = false) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
      pts += (pts.empty() ? "" : " ") + fmt("%.2f", px(xs[i])) + "," + fmt("%.2f", py(ys[i]));
    }
    if (pts.empty()) return;
    out_ += std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"1.5\"" +
            (dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts + "\"/>\n";
    const double lx = kLeft + 8 + 80.0 * (slot % 6), ly = kTop + 14 + 14.0 * (slot / 6);
    out_ += std::string("<text x=\"") + fmt("%.1f", lx) + "\" y=\"" + fmt("%.1f", ly) + "\" fill=\"" + color + "\">" + label + "</text>\n";
  }

  std::string finish() { return out_ + "</svg>\n"; }

 private:
  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  Range x_, y_;
  std::string out_;
};

inline void require(const TimeSeriesLog& log, const std::vector<std::string>& cols) {
  if (log.empty()) throw std::runtime_error("plot: log has no rows");
  for (const auto& c : cols)
    if (!log.find(c)) throw std::runtime_error("plot: log has no column '" + c + "'");
}

}  // namespace plot_detail

/// Time histories of the given columns, each multiplied by `scale`.
inline std::string svg_timeseries(const TimeSeriesLog& log, const std::vector<std::string>& cols, const std::string& title,
                                  const std::string& ylabel, double scale = 1.0) {
  using namespace plot_detail;
  require(log, cols);
  const std::vector<double> t = log.column("t");
  std::vector<std::vector<double>> ys;
  for (const auto& c : cols) {
    std::vector<double> v = log.column(c);
    for (double& x : v) x *= scale;
    ys.push_back(std::move(v));
  }
  Canvas cv(title, range_of({t}), range_of(ys), "t [s]", ylabel);
  for (std::size_t i = 0; i < cols.size(); ++i) cv.line(t, ys[i], kPalette[i % kPalette.size()], cols[i], static_cast<int>(i));
  return cv.finish();
}

/// Planar path (x, y) with the reference path dashed when the log has one.
inline std::string svg_path(const TimeSeriesLog& log, const std::string& title) {
  using namespace plot_detail;
  require(log, {"x", "y", "ref_x", "ref_y"});
  const auto x = log.column("x"), y = log.column("y"), rx = log.column("ref_x"), ry = log.column("ref_y");
  Range xr = range_of({x, rx}), yr = range_of({y, ry});
  // Equal axis scales: widen the narrower span around its centre.
  const double sx = (xr.hi - xr.lo) / (kWidth - kLeft - kRight), sy = (yr.hi - yr.lo) / (kHeight - kTop - kBottom);
  if (sx > sy) {
    const double c = 0.5 * (yr.lo + yr.hi), h = 0.5 * sx * (kHeight - kTop - kBottom);
    yr = {c - h, c + h};
  } else {
    const double c = 0.5 * (xr.lo + xr.hi), h = 0.5 * sy * (kWidth - kLeft - kRight);
    xr = {c - h, c + h};
  }
  Canvas cv(title, xr, yr, "x [m]", "y [m]");
  cv.line(x, y, kPalette[0], "path", 0);
  cv.line(rx, ry, kPalette[1], "reference", 1, true);
  return cv.finish();
}

/// Writes the standard plot set for a log; returns the files written.
inline std::vector<std::filesystem::path> emit_plots(const TimeSeriesLog& log, const std::filesystem::path& dir, const std::string& stem) {
  if (log.empty()) throw std::runtime_error("plot: log has no rows");
  std::filesystem::create_directories(dir);
  std::vector<std::string> motors;
  for (int m = 1; m <= 12; ++m) motors.push_back("w" + std::to_string(m));
  const std::vector<std::pair<std::string, std::string>> plots = {
      {"position", svg_timeseries(log, {"x", "y", "z"}, stem + ": position of the centre of mass", "m")},
      {"attitude", svg_timeseries(log, {"roll", "pitch", "yaw"}, stem + ": attitude", "deg", 180.0 / M_PI)},
      {"motors", svg_timeseries(log, motors, stem + ": motor speeds", "rad/s")},
      {"path", svg_path(log, stem + ": planar path")},
  };
  std::vector<std::filesystem::path> out;
  for (const auto& [name, svg] : plots) {
    const auto p = dir / (stem + "_" + name + ".svg");
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("plot: cannot write " + p.string());
    f << svg;
    out.push_back(p);
  }
  return out;
}

}  // namespace zodiaq
