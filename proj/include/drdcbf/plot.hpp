#pragma once

#include "drdcbf/sim.hpp"

#include <functional>
#include <string>
#include <vector>

namespace drdcbf {

/// Scalar field on the plot plane whose zero level set is drawn as the safe
/// set boundary (positive inside).
using PlaneField = std::function<double(double px, double py)>;

struct PlotOptions {
  std::string title;
  std::string x_column = "x";
  std::string y_column = "y";
  PlaneField boundary;  // optional
};

struct PlotFiles {
  std::string path_svg;
  std::string cert_svg;
};

/// XY path of every trajectory with the optional boundary overlay.
std::string path_svg(const std::vector<Trajectory>& runs, const PlotOptions& opts);
/// h and h0 (top panel) and V (bottom panel) against time.
std::string certificate_svg(const std::vector<Trajectory>& runs, const PlotOptions& opts);

/// Writes <out>_path.svg and <out>_cert.svg. Throws ConfigError on an empty
/// trajectory, a missing plot column or runs with different schemas.
PlotFiles write_plots(const std::vector<Trajectory>& runs, const std::string& out,
                      const PlotOptions& opts);

/// Polyline segments of the zero level set of `field` on a grid (marching squares).
std::vector<std::vector<std::pair<double, double>>> zero_contour(const PlaneField& field,
                                                                 double x0, double x1, double y0,
                                                                 double y1, int cells = 160);

}  // namespace drdcbf
