#include "groupcdl/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "groupcdl/core/io.hpp"

namespace gcdl {

namespace {

// 3x5 glyphs for 0-9 . - e, one row per 3-bit mask
constexpr const char* kGlyphChars = "0123456789.-e";
constexpr unsigned char kGlyphs[13][5] = {
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
    {0, 0, 0, 0, 2}, {0, 0, 7, 0, 0}, {0, 7, 5, 6, 3},
};

class Canvas {
 public:
  Canvas(int w, int h) : img_(h, w, 3, std::vector<Real>(static_cast<std::size_t>(w) * h * 3, 1.0)) {}

  void put(int x, int y, const std::array<Real, 3>& c) {
    if (x < 0 || y < 0 || x >= img_.cols() || y >= img_.rows()) return;
    for (int k = 0; k < 3; ++k) img_.at(k, y, x) = c[k];
  }

  // Bresenham; dashed lines skip every other run of 6 pixels
  void line(int x0, int y0, int x1, int y1, const std::array<Real, 3>& c, bool dashed = false) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy, n = 0;
    while (true) {
      if (!dashed || (n / 6) % 2 == 0) {
        put(x0, y0, c);
        put(x0, y0 + 1, c);
      }
      ++n;
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void text(int x, int y, const std::string& s, int scale = 2) {
    const std::array<Real, 3> black{0, 0, 0};
    for (char ch : s) {
      const char* at = std::strchr(kGlyphChars, ch);
      if (at && ch) {
        const auto& g = kGlyphs[at - kGlyphChars];
        for (int r = 0; r < 5; ++r)
          for (int b = 0; b < 3; ++b)
            if (g[r] & (4 >> b))
              for (int u = 0; u < scale; ++u)
                for (int v = 0; v < scale; ++v) put(x + b * scale + u, y + r * scale + v, black);
      }
      x += 4 * scale;
    }
  }

  RealImage take() { return std::move(img_); }

 private:
  RealImage img_;
};

std::string tick_label(Real v) {
  char buf[32];
  if (v != 0 && (std::abs(v) >= 1e4 || std::abs(v) < 1e-2)) std::snprintf(buf, sizeof buf, "%.0e", v);
  else std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

RealImage render_line_plot(const std::vector<PlotSeries>& series, int width, int height, bool log_y) {
  require(width >= 100 && height >= 80, "render_line_plot: canvas too small");
  auto ty = [&](Real v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  Real x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size(), "render_line_plot: x and y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const Real pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  Canvas cv(width, height);
  const int left = 70, right = width - 15, top = 15, bottom = height - 35;
  auto px = [&](Real x) { return left + static_cast<int>(std::lround((x - x0) / (x1 - x0) * (right - left))); };
  auto py = [&](Real y) { return bottom - static_cast<int>(std::lround((y - y0) / (y1 - y0) * (bottom - top))); };
  const std::array<Real, 3> axis{0, 0, 0}, grid{0.85, 0.85, 0.85};

  for (int t = 0; t <= 4; ++t) {
    const Real xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
    cv.line(px(xv), top, px(xv), bottom, grid);
    cv.line(left, py(yv), right, py(yv), grid);
    cv.text(px(xv) - 12, bottom + 8, tick_label(xv));
    cv.text(4, py(yv) - 5, tick_label(log_y ? std::pow(10.0, yv) : yv));
  }
  cv.line(left, bottom, right, bottom, axis);
  cv.line(left, top, left, bottom, axis);

  for (const auto& s : series) {
    int lx = 0, ly = 0;
    bool have = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const int x = px(s.x[i]), y = py(ty(s.y[i]));
      if (have) cv.line(lx, ly, x, y, s.rgb, s.dashed);
      for (int u = -2; u <= 2; ++u)
        for (int v = -2; v <= 2; ++v) cv.put(x + u, y + v, s.rgb);
      lx = x;
      ly = y;
      have = true;
    }
  }
  return cv.take();
}

void write_line_plot(const std::filesystem::path& path, const std::vector<PlotSeries>& series, int width, int height,
                     bool log_y) {
  write_png(path, render_line_plot(series, width, height, log_y));
}

RealImage heatmap(const RealImage& values, Real max_value) {
  require(values.channels() == 1, "heatmap: single-channel input expected");
  RealImage out = values;
  const Real m = max_value > 0 ? max_value : 1;
  for (auto& v : out.vec()) v = std::clamp(v / m, 0.0, 1.0);
  return out;
}

}  // namespace gcdl
