#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lmr/geometry.hpp"

namespace lmr {

struct LineSegment {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  bool operator==(const LineSegment&) const = default;
};

/// Planar range scan. Beam i has bearing -fov/2 + i * fov / n relative to the
/// sensor heading.
struct LidarScan {
  std::vector<double> distances;
  double fov = 4.7;
  double max_range = 30.0;

  std::size_t size() const { return distances.size(); }
  double bearing(std::size_t i) const {
    return -0.5 * fov + static_cast<double>(i) * fov / static_cast<double>(distances.size());
  }
};

struct LidarConfig {
  int n_beams = 1080;
  double fov = 4.7;
  double max_range = 30.0;
};

/// Occupancy-grid race track. Immutable after construction; cell (row, col)
/// covers [origin.x + col*res, +res) x [origin.y + row*res, +res). Anything
/// outside the grid counts as occupied.
class TrackMap {
 public:
  /// `occupied` is row-major with row 0 at the lowest y. Validates every
  /// invariant (positive resolution, non-empty grid, start pose in free
  /// space, single connected free region) and derives the start line.
  TrackMap(int rows, int cols, std::vector<std::uint8_t> occupied, double resolution, Vec2 origin,
           Pose start_pose, std::string name);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  const Pose& start_pose() const { return start_pose_; }
  const LineSegment& start_line() const { return start_line_; }
  const std::string& name() const { return name_; }

  bool occupied(int row, int col) const {
    if (row < 0 || col < 0 || row >= rows_ || col >= cols_) return true;
    return grid_[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(col)] != 0;
  }
  bool occupied_at(const Vec2& world) const;
  /// True when a disc of `radius` centred at `centre` touches an occupied cell.
  bool disc_collides(const Vec2& centre, double radius) const;
  std::size_t free_cell_count() const;
  Vec2 extent() const { return {cols_ * resolution_, rows_ * resolution_}; }

  /// Segment through `pose`, perpendicular to its heading, ending just inside
  /// the wall cells on either side.
  LineSegment crossing_line(const Pose& pose) const;

  bool operator==(const TrackMap&) const = default;

 private:
  int rows_;
  int cols_;
  std::vector<std::uint8_t> grid_;
  double resolution_;
  Vec2 origin_;
  Pose start_pose_;
  LineSegment start_line_;
  std::string name_;
};

/// Ordered centreline with per-point lateral free widths. Closed lines do not
/// repeat their first point.
struct CentrelineDescription {
  Polyline points;
  std::vector<double> widths_left;
  std::vector<double> widths_right;
  bool closed = false;

  std::size_t size() const { return points.size(); }
  double length() const { return arc_length(points, closed); }
};

struct CorridorShape {
  double length = 20.0;
  double width = 2.0;
};
struct AnnulusShape {
  double radius = 5.0;
  double width = 2.0;
};
struct RoundedRectShape {
  double length = 24.0;
  double height = 12.0;
  double corner_radius = 3.0;
  double width = 2.0;
};
/// Closed centripetal Catmull-Rom loop through the control points.
struct WaypointLoopShape {
  Polyline control_points;
  double width = 2.0;
};
using TrackShape = std::variant<CorridorShape, AnnulusShape, RoundedRectShape, WaypointLoopShape>;

struct Track {
  TrackMap map;
  CentrelineDescription centreline;
};

/// Rasterises a synthetic track and returns the analytic centreline used to
/// draw it. Throws Errc::width_too_small or Errc::self_intersecting.
Track generate_track(const TrackShape& shape, double resolution = 0.05, std::string name = "");

/// Named synthetic tracks: corridor, annulus, rounded_rect, waypoint_loop.
std::vector<std::string> builtin_track_names();
std::optional<TrackShape> builtin_track_shape(std::string_view name);

struct MapMetadata {
  double resolution = 0.05;
  Vec2 origin = Vec2::Zero();
  Pose start;
  double occupied_thresh = 0.45;
};

/// Loads an 8-bit PGM/PNG plus its sidecar `<stem>.meta` (key = value lines).
TrackMap load_track(const std::filesystem::path& image_path);
/// Writes `<image_path>` (PGM) and the matching sidecar.
void save_track(const TrackMap& map, const std::filesystem::path& image_path);
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);
std::filesystem::path centreline_path(const std::filesystem::path& image_path);

/// Loads a map plus `<stem>_centreline.csv` from the same directory.
Track load_track_bundle(const std::filesystem::path& image_path);
void save_track_bundle(const Track& track, const std::filesystem::path& image_path);

void save_centreline_csv(const CentrelineDescription& line, const std::filesystem::path& path);
/// Closedness is inferred: the line is closed when its last point lies within
/// two mean spacings of its first.
CentrelineDescription load_centreline_csv(const std::filesystem::path& path);

/// Distance along the ray to the first occupied cell, or max_range. Grid
/// traversal visits every cell the ray crosses. Throws Errc::origin_in_wall.
double cast_ray(const TrackMap& map, const Vec2& origin, double bearing, double max_range);
inline double cast_ray(const TrackMap& map, const Pose& origin, double bearing, double max_range) {
  return cast_ray(map, origin.position(), bearing, max_range);
}

/// Simulated LiDAR; `bearing` arguments are relative to pose.heading.
LidarScan scan(const TrackMap& map, const Pose& pose, int n_beams, double fov, double max_range);
inline LidarScan scan(const TrackMap& map, const Pose& pose, const LidarConfig& cfg) {
  return scan(map, pose, cfg.n_beams, cfg.fov, cfg.max_range);
}

}  // namespace lmr
