#include "hyran/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hyran/errors.hpp"
#include "hyran/harness.hpp"

namespace hyran {

namespace {

constexpr int kWidth = 960;
constexpr int kHeight = 600;
constexpr int kMarginLeft = 80;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 30;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
const char* kDashes[] = {"", "8 4", "2 3", "8 4 2 4"};

std::string fmt(double v) {
  // Pixel coordinates rounded to 0.01 keep files small and deterministic.
  const double r = std::round(v * 100.0) / 100.0;
  return format_double(r == 0.0 ? 0.0 : r);  // normalize -0
}

// Largest "nice" step ({1,2,5} x 10^k) not exceeding range/4.
double nice_step(double range) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / 4.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {5.0, 2.0, 1.0}) {
    if (m * mag <= raw) return m * mag;
  }
  return mag;
}

std::vector<std::size_t> stride_indices(std::size_t n, int max_points) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t limit = static_cast<std::size_t>(std::max(2, max_points));
  const std::size_t stride = n <= limit ? 1 : (n + limit - 1) / limit;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

std::string escape_xml(const std::string& s) {
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

}  // namespace

void emit_plot(const std::vector<PlotCurve>& curves, const std::string& path,
               const std::string& x_label, const std::string& y_label, int max_points) {
  if (curves.empty()) throw std::invalid_argument("emit_plot: no curves");
  for (const auto& c : curves) {
    if (c.x.empty() || c.x.size() != c.mean.size())
      throw std::invalid_argument("emit_plot: curve '" + c.label + "' is empty or ragged");
    if (!c.stddev.empty() && c.stddev.size() != c.mean.size())
      throw std::invalid_argument("emit_plot: stddev length mismatch for '" + c.label + "'");
  }

  double x_min = curves[0].x.front(), x_max = curves[0].x.front();
  double y_min = 0.0, y_max = 0.0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      x_min = std::min(x_min, c.x[i]);
      x_max = std::max(x_max, c.x[i]);
      const double sd = c.stddev.empty() ? 0.0 : c.stddev[i];
      y_min = std::min(y_min, c.mean[i] - sd);
      y_max = std::max(y_max, c.mean[i] + sd);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const auto px = [&](double x) { return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) {
    return kMarginTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

  // grid + ticks
  const double xs = nice_step(x_max - x_min);
  const double ys = nice_step(y_max - y_min);
  svg << "<g font-family=\"sans-serif\" font-size=\"13\" fill=\"#333\">\n";
  for (double v = std::ceil(x_min / xs) * xs; v <= x_max + 1e-9 * xs; v += xs) {
    const double gx = px(v);
    svg << "<line x1=\"" << fmt(gx) << "\" y1=\"" << fmt(py(y_min)) << "\" x2=\"" << fmt(gx)
        << "\" y2=\"" << fmt(py(y_max)) << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(gx) << "\" y=\"" << fmt(py(y_min) + 20)
        << "\" text-anchor=\"middle\">" << format_double(v) << "</text>\n";
  }
  for (double v = std::ceil(y_min / ys) * ys; v <= y_max + 1e-9 * ys; v += ys) {
    const double gy = py(v);
    svg << "<line x1=\"" << fmt(px(x_min)) << "\" y1=\"" << fmt(gy) << "\" x2=\""
        << fmt(px(x_max)) << "\" y2=\"" << fmt(gy)
        << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(px(x_min) - 8) << "\" y=\"" << fmt(gy + 4)
        << "\" text-anchor=\"end\">" << format_double(v) << "</text>\n";
  }
  svg << "</g>\n";

  // axes
  svg << "<line x1=\"" << fmt(px(x_min)) << "\" y1=\"" << fmt(py(y_min)) << "\" x2=\""
      << fmt(px(x_max)) << "\" y2=\"" << fmt(py(y_min))
      << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  svg << "<line x1=\"" << fmt(px(x_min)) << "\" y1=\"" << fmt(py(y_min)) << "\" x2=\""
      << fmt(px(x_min)) << "\" y2=\"" << fmt(py(y_max))
      << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  svg << "<text x=\"" << fmt(kMarginLeft + plot_w / 2) << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"20\" y=\"" << fmt(kMarginTop + plot_h / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\" "
         "transform=\"rotate(-90 20 "
      << fmt(kMarginTop + plot_h / 2) << ")\">" << escape_xml(y_label) << "</text>\n";

  // bands first so lines stay on top
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& cv = curves[c];
    if (cv.stddev.empty()) continue;
    const auto idx = stride_indices(cv.x.size(), max_points);
    const char* color = kPalette[c % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<path fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" d=\"";
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      svg << (k == 0 ? 'M' : 'L') << fmt(px(cv.x[i])) << ' ' << fmt(py(cv.mean[i] + cv.stddev[i]));
    }
    for (std::size_t k = idx.size(); k-- > 0;) {
      const std::size_t i = idx[k];
      svg << 'L' << fmt(px(cv.x[i])) << ' ' << fmt(py(cv.mean[i] - cv.stddev[i]));
    }
    svg << "Z\"/>\n";
  }

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& cv = curves[c];
    const auto idx = stride_indices(cv.x.size(), max_points);
    const char* color = kPalette[c % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const char* dash = kDashes[c % (sizeof(kDashes) / sizeof(kDashes[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
    if (dash[0] != '\0') svg << " stroke-dasharray=\"" << dash << "\"";
    svg << " points=\"";
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      if (k) svg << ' ';
      svg << fmt(px(cv.x[i])) << ',' << fmt(py(cv.mean[i]));
    }
    svg << "\"/>\n";
  }

  // legend
  svg << "<g font-family=\"sans-serif\" font-size=\"14\">\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const double ly = kMarginTop + 10 + 22.0 * static_cast<double>(c);
    const char* color = kPalette[c % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const char* dash = kDashes[c % (sizeof(kDashes) / sizeof(kDashes[0]))];
    svg << "<line x1=\"" << kMarginLeft + 12 << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << kMarginLeft + 44 << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2.5\"";
    if (dash[0] != '\0') svg << " stroke-dasharray=\"" << dash << "\"";
    svg << "/>\n";
    svg << "<text x=\"" << kMarginLeft + 50 << "\" y=\"" << fmt(ly + 5) << "\">"
        << escape_xml(curves[c].label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plot: cannot open " + path);
  out << svg.str();
  if (!out.good()) throw std::runtime_error("emit_plot: write failed for " + path);
}

}  // namespace hyran
