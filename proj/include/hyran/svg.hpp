#pragma once

#include <string>
#include <vector>

namespace hyran {

struct PlotCurve {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> stddev;  // may be empty: no band
};

// Writes a self-contained SVG line chart: one polyline per curve, a shaded
// +/- one-standard-deviation band, a legend and labeled axes. Output is
// byte-for-byte deterministic for identical input. Curves longer than
// max_points are down-sampled with a uniform stride (the last point is kept).
void emit_plot(const std::vector<PlotCurve>& curves, const std::string& path,
               const std::string& x_label = "round",
               const std::string& y_label = "cumulative regret", int max_points = 1000);

}  // namespace hyran
