#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "lmr/geometry.hpp"
#include "lmr/track.hpp"

namespace lmr {

/// Minimal SVG canvas in world coordinates (y up). Elements are buffered and
/// written in insertion order.
class SvgCanvas {
 public:
  /// Maps [lo, hi] onto a canvas `width_px` wide, keeping the aspect ratio.
  SvgCanvas(Vec2 lo, Vec2 hi, double width_px = 800.0);

  void polyline(const Polyline& pts, const std::string& colour, double stroke_px = 1.5, bool closed = false);
  void points(const Polyline& pts, const std::string& colour, double radius_px = 1.5);
  void segment(const Vec2& a, const Vec2& b, const std::string& colour, double stroke_px = 1.0);
  void text(const Vec2& at, const std::string& label, double size_px = 12.0, const std::string& colour = "#000");
  /// Occupied cells of a map as grey rectangles (row runs merged).
  void occupancy(const TrackMap& map, const std::string& colour = "#888");

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  Vec2 lo_, hi_;
  double scale_;
  double width_px_, height_px_;
  std::vector<std::string> body_;

  double px(double x) const { return (x - lo_.x()) * scale_; }
  double py(double y) const { return (hi_.y() - y) * scale_; }
};

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with axes, ticks and a legend.
void save_line_chart(const std::vector<ChartSeries>& series, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::filesystem::path& path);

struct BarGroup {
  std::string label;            // group label under the axis
  std::vector<double> values;   // one per bar name; NaN leaves a gap
};

/// Grouped bar chart; `threshold` (if finite) draws a dashed horizontal line.
void save_bar_chart(const std::vector<BarGroup>& groups, const std::vector<std::string>& bar_names,
                    const std::string& title, const std::string& y_label, const std::filesystem::path& path,
                    double threshold = std::numeric_limits<double>::quiet_NaN());

}  // namespace lmr
