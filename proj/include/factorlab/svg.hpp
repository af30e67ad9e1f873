#pragma once

// Minimal SVG plots: scatter, polyline and bar primitives on a linear
// coordinate frame, plus a grid heatmap for correlation matrices.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace factorlab::svg {

inline std::string escape(std::string_view s) {
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

/// Fixed-precision number for coordinates so output is stable across runs.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

inline Range range_of(std::span<const double> v, bool include_zero = false) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    r.lo = std::min(r.lo, x);
    r.hi = std::max(r.hi, x);
  }
  if (!(r.lo <= r.hi)) return {0.0, 1.0};
  if (include_zero) {
    r.lo = std::min(r.lo, 0.0);
    r.hi = std::max(r.hi, 0.0);
  }
  if (r.hi - r.lo < 1e-12 * std::max(1.0, std::abs(r.hi))) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.05 * (r.hi - r.lo);
  return {r.lo - pad, r.hi + pad};
}

class Plot {
 public:
  static constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

  Plot(std::string title, std::string x_label, std::string y_label, Range x, Range y)
      : x_(x), y_(y) {
    body_ += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
             escape(title) + "</text>\n";
    body_ += "<text x=\"" + num(kLeft + (kWidth - kLeft - kRight) / 2) + "\" y=\"" + num(kHeight - 12) +
             "\" text-anchor=\"middle\" font-size=\"12\">" + escape(x_label) + "</text>\n";
    body_ += "<text x=\"16\" y=\"" + num(kTop + (kHeight - kTop - kBottom) / 2) +
             "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
             num(kTop + (kHeight - kTop - kBottom) / 2) + ")\">" + escape(y_label) + "</text>\n";
    body_ += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight) +
             "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0;
      const double yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      body_ += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kHeight - kBottom + 16) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + label_num(xv) + "</text>\n";
      body_ += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(yv) + 3) +
               "\" text-anchor=\"end\" font-size=\"10\">" + label_num(yv) + "</text>\n";
    }
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  void scatter(std::span<const double> x, std::span<const double> y, std::string_view color = "#1f77b4") {
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
      body_ += "<circle cx=\"" + num(px(x[i])) + "\" cy=\"" + num(py(y[i])) + "\" r=\"3\" fill=\"" +
               std::string(color) + "\"/>\n";
    }
  }

  void line(std::span<const double> x, std::span<const double> y, std::string_view color = "#d62728",
            bool dashed = false) {
    std::string pts;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(x[i])) + "," + num(py(y[i]));
    }
    if (pts.empty()) return;
    body_ += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + std::string(color) + "\"" +
             (dashed ? " stroke-dasharray=\"5,4\"" : "") + "/>\n";
  }

  void hline(double y, std::string_view color = "#888", bool dashed = true) {
    const double xs[] = {x_.lo, x_.hi};
    const double ys[] = {y, y};
    line(xs, ys, color, dashed);
  }

  /// Vertical bars from zero at each x; `half_width` is in data units.
  void bars(std::span<const double> x, std::span<const double> heights, double half_width,
            std::string_view color = "#2ca02c") {
    const double base = py(std::clamp(0.0, y_.lo, y_.hi));
    for (std::size_t i = 0; i < x.size() && i < heights.size(); ++i) {
      if (!std::isfinite(heights[i])) continue;
      const double left = px(x[i] - half_width), right = px(x[i] + half_width);
      const double top = py(heights[i]);
      body_ += "<rect x=\"" + num(left) + "\" y=\"" + num(std::min(top, base)) + "\" width=\"" +
               num(right - left) + "\" height=\"" + num(std::abs(base - top)) + "\" fill=\"" +
               std::string(color) + "\"/>\n";
    }
  }

  void text(double x, double y, std::string_view s, int size = 10, std::string_view anchor = "middle") {
    body_ += "<text x=\"" + num(px(x)) + "\" y=\"" + num(py(y)) + "\" text-anchor=\"" + std::string(anchor) +
             "\" font-size=\"" + std::to_string(size) + "\">" + escape(s) + "</text>\n";
  }

  std::string str() const { return document(kWidth, kHeight, body_); }

  static std::string document(double w, double h, const std::string& body) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
           "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body +
           "</svg>\n";
  }

 private:
  Range x_, y_;
  std::string body_;
};

/// Square grid of cells coloured by r in [-1, 1]; cells flagged in `marked`
/// get an "X" overlay.
inline std::string heatmap(std::string_view title, const std::vector<std::string>& names,
                           const std::vector<std::vector<double>>& r,
                           const std::vector<std::vector<bool>>& marked) {
  const double cell = 48, left = 70, top = 50;
  const double k = static_cast<double>(names.size());
  std::string body = "<text x=\"" + num(left + cell * k / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
                     escape(title) + "</text>\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    body += "<text x=\"" + num(left - 6) + "\" y=\"" + num(top + cell * (i + 0.5) + 4) +
            "\" text-anchor=\"end\" font-size=\"11\">" + escape(names[i]) + "</text>\n";
    body += "<text x=\"" + num(left + cell * (i + 0.5)) + "\" y=\"" + num(top + cell * k + 16) +
            "\" text-anchor=\"middle\" font-size=\"11\">" + escape(names[i]) + "</text>\n";
    for (std::size_t j = 0; j < names.size(); ++j) {
      const double v = std::isfinite(r[i][j]) ? std::clamp(r[i][j], -1.0, 1.0) : 0.0;
      const int shade = static_cast<int>(std::lround(255 * (1.0 - std::abs(v))));
      char color[16];
      if (v >= 0) std::snprintf(color, sizeof color, "#%02x%02xff", shade, shade);
      else std::snprintf(color, sizeof color, "#ff%02x%02x", shade, shade);
      const double x0 = left + cell * j, y0 = top + cell * i;
      body += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
              "\" fill=\"" + color + "\" stroke=\"#fff\"/>\n";
      body += "<text x=\"" + num(x0 + cell / 2) + "\" y=\"" + num(y0 + cell / 2 + 4) +
              "\" text-anchor=\"middle\" font-size=\"10\">" + label_num(r[i][j]) + "</text>\n";
      if (marked[i][j]) {
        body += "<path d=\"M" + num(x0 + 4) + " " + num(y0 + 4) + " L" + num(x0 + cell - 4) + " " +
                num(y0 + cell - 4) + " M" + num(x0 + cell - 4) + " " + num(y0 + 4) + " L" + num(x0 + 4) + " " +
                num(y0 + cell - 4) + "\" stroke=\"#555\" stroke-width=\"1\"/>\n";
      }
    }
  }
  return Plot::document(left + cell * k + 20, top + cell * k + 30, body);
}

}  // namespace factorlab::svg
