#pragma once

// Minimal SVG charts: axes, polylines or scatter points, optional log-scale
// vertical axis.

#include <filesystem>
#include <string>
#include <vector>

namespace edyn {

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  bool scatter = false;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  ///< values <= 1e-300 are clipped to 1e-300
  int width = 800;
  int height = 500;
  double point_radius = 0.6;
};

inline constexpr double kLogClip = 1e-300;

/// Non-finite points are skipped; a polyline is broken at each gap.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opt);

void write_svg(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
               const PlotOptions& opt);

}  // namespace edyn
