#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <numbers>
#include <vector>

namespace lmr {

using Vec2 = Eigen::Vector2d;
using Polyline = std::vector<Vec2>;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, (-pi, pi]

  Pose() = default;
  Pose(double x_, double y_, double heading_) : x(x_), y(y_), heading(normalize_angle(heading_)) {}

  Vec2 position() const { return {x, y}; }
  Vec2 direction() const;

  bool operator==(const Pose&) const = default;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
inline Vec2 left_normal(const Vec2& v) { return {-v.y(), v.x()}; }

/// World point expressed in the frame of `frame` (x forward, y left).
Vec2 to_local(const Pose& frame, const Vec2& world);
Vec2 to_world(const Pose& frame, const Vec2& local);
Pose to_local(const Pose& frame, const Pose& world);
Pose to_world(const Pose& frame, const Pose& local);

/// Cumulative arc length at each vertex, starting at 0. For a closed line the
/// result has one extra entry: the total including the closing edge.
std::vector<double> cumulative_arc_length(const Polyline& line, bool closed = false);
double arc_length(const Polyline& line, bool closed = false);

/// Points at exactly `spacing` arc length apart by linear interpolation; the
/// last input point is always appended, so only the final interval may be
/// shorter. Throws Errc::degenerate_line if the line is shorter than spacing.
Polyline resample_line(const Polyline& line, double spacing);

/// `intervals` equal arc-length intervals (intervals + 1 points, endpoints kept).
Polyline resample_uniform(const Polyline& line, std::size_t intervals);

/// Linear interpolation of a per-vertex quantity onto new arc-length stations.
std::vector<double> interpolate_by_arc_length(const std::vector<double>& s_src,
                                              const std::vector<double>& values,
                                              const std::vector<double>& s_dst);

Vec2 point_at_arc_length(const Polyline& line, const std::vector<double>& s_cum, double s,
                         bool closed = false);

struct Projection {
  std::size_t segment = 0;  // index of the segment start vertex
  double t = 0.0;           // fraction along the segment
  double s = 0.0;           // arc length of the foot point
  double distance = 0.0;
  double lateral = 0.0;  // signed, positive to the left of the segment direction
  Vec2 foot = Vec2::Zero();
};

/// Orthogonal projection onto the nearest segment.
Projection project_onto(const Polyline& line, const Vec2& p, bool closed = false);

/// Unit tangents by central differences (one-sided at the ends of open lines).
std::vector<Vec2> central_difference_tangents(const Polyline& line, bool closed = false);

/// Signed curvature of the circle through three points (positive = left turn).
double circumcircle_curvature(const Vec2& a, const Vec2& b, const Vec2& c);

/// Per-vertex circumcircle curvature; open-line endpoints copy their neighbour.
std::vector<double> circumcircle_curvatures(const Polyline& line, bool closed = false);

/// Proper or touching intersection of segments [a0,a1] and [b0,b1]. On success
/// `ta` is the fraction along a.
bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1,
                        double* ta = nullptr);

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace lmr
