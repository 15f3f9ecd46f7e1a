#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "groupcdl/core/planes.hpp"

namespace gcdl {

struct PlotSeries {
  std::vector<Real> x, y;
  std::array<Real, 3> rgb{0, 0, 0};
  bool dashed = false;
};

/// Line chart with axes, tick labels (digits only) and square markers, as a
/// 3-channel image.
RealImage render_line_plot(const std::vector<PlotSeries>& series, int width = 640, int height = 400,
                           bool log_y = false);
void write_line_plot(const std::filesystem::path& path, const std::vector<PlotSeries>& series, int width = 640,
                     int height = 400, bool log_y = false);

/// Magnitude heatmap scaled to [0, max] (gray).
RealImage heatmap(const RealImage& values, Real max_value);

}  // namespace gcdl
