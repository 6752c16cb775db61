#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lmr/geometry.hpp"
#include "lmr/track.hpp"

namespace lmr {

struct ExtractionConfig {
  double gap_threshold = 0.8;  // m, consecutive-point split distance
  double spacing = 0.2;        // m, boundary and centreline resampling
  double w_max = 2.5;          // m, longest segment accepted as a match
  double w_track = 1.6;        // m, assumed width where one boundary is hidden
  double rear_cutoff = 0.0;    // m, returns with forward coordinate below this are dropped
};

/// The two boundary lines seen in a scan, both ordered in the direction of
/// travel (away from the region behind the vehicle), in the vehicle frame.
struct BoundaryPair {
  Polyline long_line;
  Polyline short_line;
  bool long_is_left = false;
};

enum class SegmentKind : std::uint8_t { matched, projected };

/// Cross-track segment from a long-boundary point to its partner.
struct TrackSegment {
  Vec2 long_point = Vec2::Zero();
  Vec2 short_point = Vec2::Zero();
  SegmentKind kind = SegmentKind::matched;
  int short_index = -1;  // k_i for matched segments, -1 when projected

  double length() const { return (short_point - long_point).norm(); }
  Vec2 midpoint() const { return 0.5 * (long_point + short_point); }
};

struct SegmentList {
  std::vector<TrackSegment> segments;
  int short_count = 0;         // points on the short boundary that was matched against
  bool all_projected = false;  // the first long point already exceeded w_max

  std::size_t matched_count() const;
};

/// Centreline of the visible track region in the vehicle frame.
struct LocalMap {
  Polyline points;
  std::vector<double> widths_left;
  std::vector<double> widths_right;
  std::vector<Vec2> normals;  // unit, left of the local tangent
  std::vector<double> s;      // cumulative arc length
  // True where the point lies between segments matched to interior points of
  // the short boundary, i.e. where both walls were actually seen.
  std::vector<bool> both_visible;
  double matched_length = 0.0;
  bool all_projected = false;

  std::size_t size() const { return points.size(); }
  double length() const { return s.empty() ? 0.0 : s.back(); }
  double projected_length() const { return length() - matched_length; }
};

/// Beam endpoints in the vehicle frame; max-range returns are dropped.
Polyline scan_to_points(const LidarScan& scan);

/// Splits the point sequence wherever consecutive points are further apart
/// than `gap_threshold` and keeps the two runs with the greatest arc length.
/// The run swept first (lower bearings) is the right boundary. An exact
/// length tie makes the left line the long one. Throws
/// Errc::extraction_failure when fewer than two runs of two points exist.
BoundaryPair identify_boundaries(const Polyline& points, double gap_threshold);

/// Pairs each long-boundary point with its nearest short-boundary point
/// (indices forced non-decreasing) while the pair is shorter than w_max; from
/// the first violation on, the rest of the long line is paired with its own
/// offset by w_track along the normal pointing at the short side.
SegmentList match_segments(const BoundaryPair& pair, double w_max, double w_track);

/// Segment midpoints resampled to near-uniform spacing, with half the segment
/// length as the width on each side. Throws Errc::extraction_failure for
/// fewer than two segments.
LocalMap build_local_map(const SegmentList& segments, double spacing);

/// The whole pipeline; pure, so identical scans give identical maps.
LocalMap extract(const LidarScan& scan, const ExtractionConfig& cfg = {});

/// Columns `s,x,y,w_left,w_right,nx,ny`.
void write_local_map_csv(const LocalMap& map, const std::filesystem::path& path);

}  // namespace lmr
