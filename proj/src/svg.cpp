#include "stabclust/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "stabclust/common.hpp"

namespace stabclust::svg {

namespace {

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                          "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
                          "#1f77b4", "#8c564b"};
constexpr int kPaletteSize = 12;

std::string f2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Canvas {
  std::ostringstream body;
  int width = 0;
  int height = 0;

  void open(int w, int h, bool timestamp) {
    width = w;
    height = h;
    body << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
         << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    if (timestamp) {
      const std::time_t now = std::time(nullptr);
      char buf[64];
      std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
      body << "<!-- generated: " << buf << " -->\n";
    }
    body << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 12,
            const std::string& anchor = "start", const std::string& fill = "#333") {
    body << "<text x=\"" << f2(x) << "\" y=\"" << f2(y) << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\""
         << fill << "\">" << escape_xml(s) << "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width_px = 1.0) {
    body << "<line x1=\"" << f2(x1) << "\" y1=\"" << f2(y1) << "\" x2=\"" << f2(x2)
         << "\" y2=\"" << f2(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
         << f2(width_px) << "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& fill) {
    body << "<circle cx=\"" << f2(x) << "\" cy=\"" << f2(y) << "\" r=\"" << f2(r)
         << "\" fill=\"" << fill << "\" fill-opacity=\"0.8\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill) {
    body << "<rect x=\"" << f2(x) << "\" y=\"" << f2(y) << "\" width=\"" << f2(w)
         << "\" height=\"" << f2(h) << "\" fill=\"" << fill << "\"/>\n";
  }

  void save(const std::string& path) {
    body << "</svg>\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write SVG: " + path);
    out << body.str();
  }
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void expand(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi <= lo) hi = lo + 1.0;
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  }
};

Range fresh_range() {
  Range r;
  r.lo = std::numeric_limits<double>::infinity();
  r.hi = -std::numeric_limits<double>::infinity();
  return r;
}

// five-stop dark-blue -> yellow ramp for continuous values
std::string ramp_color(double t) {
  static const double stops[5][3] = {{68, 1, 84},
                                     {59, 82, 139},
                                     {33, 145, 140},
                                     {94, 201, 98},
                                     {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 4.0;
  const int lo = std::min(3, static_cast<int>(pos));
  const double frac = pos - lo;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(stops[lo][0] + frac * (stops[lo + 1][0] - stops[lo][0])),
                static_cast<int>(stops[lo][1] + frac * (stops[lo + 1][1] - stops[lo][1])),
                static_cast<int>(stops[lo][2] + frac * (stops[lo + 1][2] - stops[lo][2])));
  return buf;
}

struct Frame {
  double left, right, top, bottom;
  Range xr, yr;
  bool log_x = false;

  double map_x(double v) const {
    const double t = log_x ? (std::log(v) - std::log(xr.lo)) / (std::log(xr.hi) - std::log(xr.lo))
                           : (v - xr.lo) / (xr.hi - xr.lo);
    return left + t * (right - left);
  }
  double map_y(double v) const {
    const double t = (v - yr.lo) / (yr.hi - yr.lo);
    return bottom - t * (bottom - top);
  }
};

void draw_axes(Canvas& canvas, const Frame& frame, const std::string& x_label,
               const std::string& y_label) {
  canvas.line(frame.left, frame.bottom, frame.right, frame.bottom, "#888");
  canvas.line(frame.left, frame.top, frame.left, frame.bottom, "#888");
  for (int t = 0; t <= 4; ++t) {
    const double frac = t / 4.0;
    double xv;
    if (frame.log_x) {
      xv = std::exp(std::log(frame.xr.lo) +
                    frac * (std::log(frame.xr.hi) - std::log(frame.xr.lo)));
    } else {
      xv = frame.xr.lo + frac * (frame.xr.hi - frame.xr.lo);
    }
    const double yv = frame.yr.lo + frac * (frame.yr.hi - frame.yr.lo);
    const double xp = frame.left + frac * (frame.right - frame.left);
    const double yp = frame.bottom - frac * (frame.bottom - frame.top);
    canvas.line(xp, frame.bottom, xp, frame.bottom + 4, "#888");
    canvas.text(xp, frame.bottom + 16, fmt_num(std::round(xv * 1e4) / 1e4), 10, "middle");
    canvas.line(frame.left - 4, yp, frame.left, yp, "#888");
    canvas.text(frame.left - 6, yp + 3, fmt_num(std::round(yv * 1e4) / 1e4), 10, "end");
  }
  canvas.text((frame.left + frame.right) / 2, frame.bottom + 32, x_label, 12, "middle");
  canvas.text(frame.left - 40, frame.top - 8, y_label, 12, "start");
}

}  // namespace

void write_line_chart(const std::string& path, const std::vector<LineSeries>& series,
                      const PlotOptions& opts) {
  Canvas canvas;
  canvas.open(opts.width, opts.height, opts.timestamp);
  canvas.text(opts.width / 2.0, 22, opts.title, 14, "middle", "#111");

  Frame frame{60, opts.width - 170.0, 40, opts.height - 50.0, fresh_range(), fresh_range(),
              opts.log_x};
  for (const auto& s : series) {
    for (double v : s.x) frame.xr.expand(v);
    for (double v : s.y) frame.yr.expand(v);
  }
  frame.xr.pad();
  frame.yr.pad();
  if (frame.log_x && frame.xr.lo <= 0.0) frame.log_x = false;
  draw_axes(canvas, frame, opts.x_label, opts.y_label);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const std::string color = kPalette[s % kPaletteSize];
    const auto& ls = series[s];
    std::ostringstream points;
    for (std::size_t i = 0; i < ls.x.size(); ++i) {
      if (i) points << ' ';
      points << f2(frame.map_x(ls.x[i])) << ',' << f2(frame.map_y(ls.y[i]));
    }
    canvas.body << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.8\" points=\"" << points.str() << "\"/>\n";
    for (std::size_t i = 0; i < ls.x.size(); ++i) {
      canvas.circle(frame.map_x(ls.x[i]), frame.map_y(ls.y[i]), 2.4, color);
    }
    const double ly = 50.0 + 16.0 * static_cast<double>(s);
    canvas.rect(opts.width - 160.0, ly - 8, 10, 10, color);
    canvas.text(opts.width - 146.0, ly + 1, ls.label, 11);
  }
  canvas.save(path);
}

void write_scatter_categorical(const std::string& path, const std::vector<double>& x,
                               const std::vector<double>& y,
                               const std::vector<int>& category,
                               const std::vector<std::string>& category_names,
                               const ScatterOptions& opts) {
  Canvas canvas;
  canvas.open(opts.width, opts.height, opts.timestamp);
  canvas.text(opts.width / 2.0, 22, opts.title, 14, "middle", "#111");
  Frame frame{55, opts.width - 150.0, 40, opts.height - 45.0, fresh_range(), fresh_range(),
              false};
  for (double v : x) frame.xr.expand(v);
  for (double v : y) frame.yr.expand(v);
  frame.xr.pad();
  frame.yr.pad();
  draw_axes(canvas, frame, opts.x_label, opts.y_label);
  for (std::size_t i = 0; i < x.size(); ++i) {
    canvas.circle(frame.map_x(x[i]), frame.map_y(y[i]), 2.2,
                  kPalette[category[i] % kPaletteSize]);
  }
  for (std::size_t c = 0; c < category_names.size(); ++c) {
    const double ly = 50.0 + 15.0 * static_cast<double>(c);
    if (ly > opts.height - 20.0) break;  // legend overflow: remaining names dropped
    canvas.rect(opts.width - 140.0, ly - 8, 9, 9, kPalette[c % kPaletteSize]);
    canvas.text(opts.width - 127.0, ly, category_names[c], 10);
  }
  canvas.save(path);
}

void write_scatter_continuous(const std::string& path, const std::vector<double>& x,
                              const std::vector<double>& y,
                              const std::vector<double>& value,
                              const std::string& value_label, const ScatterOptions& opts) {
  Canvas canvas;
  canvas.open(opts.width, opts.height, opts.timestamp);
  canvas.text(opts.width / 2.0, 22, opts.title, 14, "middle", "#111");
  Frame frame{55, opts.width - 110.0, 40, opts.height - 45.0, fresh_range(), fresh_range(),
              false};
  for (double v : x) frame.xr.expand(v);
  for (double v : y) frame.yr.expand(v);
  frame.xr.pad();
  frame.yr.pad();
  Range vr = fresh_range();
  for (double v : value) vr.expand(v);
  if (!(vr.hi > vr.lo)) vr.hi = vr.lo + 1.0;
  draw_axes(canvas, frame, opts.x_label, opts.y_label);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (value[i] - vr.lo) / (vr.hi - vr.lo);
    canvas.circle(frame.map_x(x[i]), frame.map_y(y[i]), 2.2, ramp_color(t));
  }
  // color bar
  const double bar_x = opts.width - 90.0;
  for (int s = 0; s < 60; ++s) {
    canvas.rect(bar_x, 50.0 + (59 - s) * 3.0, 14, 3.2, ramp_color(s / 59.0));
  }
  canvas.text(bar_x + 20, 56, fmt_num(std::round(vr.hi * 1e3) / 1e3), 10);
  canvas.text(bar_x + 20, 50.0 + 60 * 3.0, fmt_num(std::round(vr.lo * 1e3) / 1e3), 10);
  canvas.text(bar_x, 40, value_label, 11);
  canvas.save(path);
}

void write_heatmap(const std::string& path, const Matrix& values,
                   const std::vector<int>& order, const HeatmapOptions& opts) {
  const int n = static_cast<int>(values.rows());
  if (static_cast<int>(order.size()) != n) {
    throw DataError("write_heatmap: order size does not match matrix");
  }
  // stride down to at most max_cells rows/cols
  std::vector<int> picks;
  const int stride = std::max(1, (n + opts.max_cells - 1) / opts.max_cells);
  for (int i = 0; i < n; i += stride) picks.push_back(order[static_cast<std::size_t>(i)]);
  const int m = static_cast<int>(picks.size());

  const double grid = 640.0;
  const double cell = grid / std::max(1, m);
  const int width = 760;
  const int height = 720;
  Canvas canvas;
  canvas.open(width, height, opts.timestamp);
  canvas.text(width / 2.0, 22, opts.title, 14, "middle", "#111");
  const double ox = 50.0;
  const double oy = 40.0;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const double v = values(picks[static_cast<std::size_t>(r)],
                              picks[static_cast<std::size_t>(c)]);
      canvas.rect(ox + c * cell, oy + r * cell, cell + 0.3, cell + 0.3, ramp_color(v));
    }
  }
  for (int s = 0; s < 60; ++s) {
    canvas.rect(ox + grid + 20, oy + (59 - s) * 3.0, 14, 3.2, ramp_color(s / 59.0));
  }
  canvas.text(ox + grid + 40, oy + 8, "1.0", 10);
  canvas.text(ox + grid + 40, oy + 180, "0.0", 10);
  if (stride > 1) {
    canvas.text(ox, oy + grid + 20,
                "showing every " + std::to_string(stride) + "th row of " +
                    std::to_string(n),
                10);
  }
  canvas.save(path);
}

}  // namespace stabclust::svg
