#include "cfgreject/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace cfgreject {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded_range(const std::vector<double>& v) {
  if (v.empty()) return {};
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double a = *lo, b = *hi;
  if (!(b > a)) {
    const double pad = std::max(1.0, std::abs(a)) * 0.5;
    return {a - pad, b + pad};
  }
  const double pad = 0.05 * (b - a);
  return {a - pad, b + pad};
}

struct Frame {
  Range x, y;
  double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
  double py(double v) const {
    return kHeight - kBottom - (v - y.lo) / (y.hi - y.lo) * (kHeight - kTop - kBottom);
  }
};

std::string open_document(const std::string& title) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
      fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  out += "<title>" + escape(title) + "</title>\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + escape(title) + "</text>\n";
  return out;
}

std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string out = "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  out += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y1) + "\" width=\"" + fmt(x1 - x0) +
         "\" height=\"" + fmt(y0 - y1) + "\"/>\n</g>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = f.x.lo + (f.x.hi - f.x.lo) * i / 4.0;
    const double vy = f.y.lo + (f.y.hi - f.y.lo) * i / 4.0;
    out += "<text x=\"" + fmt(f.px(vx)) + "\" y=\"" + fmt(y0 + 16) +
           "\" text-anchor=\"middle\">" + fmt_tick(vx) + "</text>\n";
    out += "<text x=\"" + fmt(x0 - 6) + "\" y=\"" + fmt(f.py(vy) + 4) +
           "\" text-anchor=\"end\">" + fmt_tick(vy) + "</text>\n";
  }
  out += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(kHeight - 12) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + escape(x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + fmt((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"13\" "
         "transform=\"rotate(-90 16 " + fmt((y0 + y1) / 2) + ")\">" + escape(y_label) + "</text>\n";
  out += "</g>\n";
  return out;
}

// Five anchors of the viridis ramp, linearly interpolated.
std::string ramp(double t) {
  static constexpr std::array<std::array<double, 3>, 5> anchors{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
  const double u = t - static_cast<double>(i);
  char buf[16];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(anchors[i][c] + u * (anchors[i + 1][c] - anchors[i][c])));
  }
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

std::string scatter_svg(std::span<const Vec2> points, std::span<const double> values,
                        const std::string& title) {
  if (points.size() != values.size()) {
    throw std::invalid_argument("scatter_svg: points and values differ in length");
  }
  std::vector<double> xs, ys, logs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs.push_back(points[i].x);
    ys.push_back(points[i].y);
    logs.push_back(values[i] > 0.0 ? std::log(values[i]) : -INFINITY);
  }
  double lo = INFINITY, hi = -INFINITY;
  for (double l : logs) {
    if (std::isfinite(l)) {
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
  }
  const Frame frame{padded_range(xs), padded_range(ys)};
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return logs[a] < logs[b]; });

  std::string out = open_document(title);
  out += axes(frame, "x0", "x1");
  out += "<g stroke=\"none\">\n";
  for (std::size_t i : order) {
    const double t = std::isfinite(logs[i]) && hi > lo ? (logs[i] - lo) / (hi - lo)
                     : std::isfinite(logs[i])           ? 1.0
                                                        : 0.0;
    out += "<circle cx=\"" + fmt(frame.px(xs[i])) + "\" cy=\"" + fmt(frame.py(ys[i])) +
           "\" r=\"1.6\" fill=\"" + ramp(t) + "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string curve_svg(std::span<const double> xs, std::span<const double> ys,
                      std::optional<FitLine> fit, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
  if (xs.size() != ys.size()) throw std::invalid_argument("curve_svg: xs and ys differ in length");
  std::vector<double> vx(xs.begin(), xs.end());
  std::vector<double> vy(ys.begin(), ys.end());
  const Range rx = padded_range(vx);
  if (fit) {
    vy.push_back(fit->intercept + fit->slope * rx.lo);
    vy.push_back(fit->intercept + fit->slope * rx.hi);
  }
  const Frame frame{rx, padded_range(vy)};

  std::string out = open_document(title);
  out += axes(frame, x_label, y_label);
  if (fit && !xs.empty()) {
    out += "<line x1=\"" + fmt(frame.px(rx.lo)) + "\" y1=\"" +
           fmt(frame.py(fit->intercept + fit->slope * rx.lo)) + "\" x2=\"" + fmt(frame.px(rx.hi)) +
           "\" y2=\"" + fmt(frame.py(fit->intercept + fit->slope * rx.hi)) +
           "\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  }
  out += "<g fill=\"#1f77b4\" stroke=\"black\" stroke-width=\"0.5\">\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += "<circle cx=\"" + fmt(frame.px(xs[i])) + "\" cy=\"" + fmt(frame.py(ys[i])) +
           "\" r=\"3.5\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace cfgreject
