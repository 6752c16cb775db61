#include "lmr/localmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "lmr/error.hpp"

namespace lmr {

std::size_t SegmentList::matched_count() const {
  return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(), [](const TrackSegment& s) {
    return s.kind == SegmentKind::matched;
  }));
}

Polyline scan_to_points(const LidarScan& scan) {
  Polyline points;
  points.reserve(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const double d = scan.distances[i];
    if (!(d < scan.max_range)) continue;
    const double theta = scan.bearing(i);
    points.emplace_back(d * std::cos(theta), d * std::sin(theta));
  }
  return points;
}

BoundaryPair identify_boundaries(const Polyline& points, double gap_threshold) {
  if (points.size() < 4) throw Error(Errc::extraction_failure, "fewer than four scan points");

  struct Run {
    std::size_t begin, end;  // [begin, end)
    double length;
  };
  std::vector<Run> runs;
  std::size_t begin = 0;
  double len = 0.0;
  for (std::size_t i = 1; i <= points.size(); ++i) {
    const double step = i < points.size() ? (points[i] - points[i - 1]).norm() : 0.0;
    if (i == points.size() || step > gap_threshold) {
      if (i - begin >= 2) runs.push_back({begin, i, len});
      begin = i;
      len = 0.0;
    } else {
      len += step;
    }
  }
  if (runs.size() < 2) throw Error(Errc::extraction_failure, "fewer than two boundary runs");

  std::vector<std::size_t> order(runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return runs[a].length > runs[b].length; });
  const Run& right = runs[std::min(order[0], order[1])];
  const Run& left = runs[std::max(order[0], order[1])];

  // Scan order sweeps right to left: the right boundary already runs forward,
  // the left boundary runs backward and is reversed.
  Polyline right_line(points.begin() + static_cast<long>(right.begin), points.begin() + static_cast<long>(right.end));
  Polyline left_line(points.rbegin() + static_cast<long>(points.size() - left.end),
                     points.rbegin() + static_cast<long>(points.size() - left.begin));

  const double tie_tol = 1e-9 * std::max(left.length, right.length);
  BoundaryPair pair;
  pair.long_is_left = left.length + tie_tol >= right.length;
  pair.long_line = pair.long_is_left ? std::move(left_line) : std::move(right_line);
  pair.short_line = pair.long_is_left ? std::move(right_line) : std::move(left_line);
  return pair;
}

SegmentList match_segments(const BoundaryPair& pair, double w_max, double w_track) {
  const Polyline& lng = pair.long_line;
  const Polyline& shrt = pair.short_line;
  if (lng.size() < 2 || shrt.size() < 2) throw Error(Errc::degenerate_line, "boundary with fewer than two points");

  SegmentList out;
  out.short_count = static_cast<int>(shrt.size());
  const auto tangents = central_difference_tangents(lng);
  double side_votes = 0.0;  // > 0 when the short line lies left of the long line
  std::size_t k_prev = 0;
  for (std::size_t i = 0; i < lng.size(); ++i) {
    std::size_t k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < shrt.size(); ++j) {
      const double d = (lng[i] - shrt[j]).squaredNorm();
      if (d < best) {
        best = d;
        k = j;
      }
    }
    k = std::max(k, k_prev);
    const double dist = (lng[i] - shrt[k]).norm();
    if (dist < w_max) {
      out.segments.push_back({lng[i], shrt[k], SegmentKind::matched, static_cast<int>(k)});
      side_votes += cross(tangents[i], shrt[k] - lng[i]);
      k_prev = k;
      continue;
    }
    out.all_projected = (i == 0);
    double sign;
    if (side_votes != 0.0) {
      sign = side_votes > 0.0 ? 1.0 : -1.0;
    } else {
      sign = pair.long_is_left ? -1.0 : 1.0;
    }
    for (std::size_t r = i; r < lng.size(); ++r) {
      const Vec2 normal = sign * left_normal(tangents[r]);
      out.segments.push_back({lng[r], lng[r] + normal * w_track, SegmentKind::projected, -1});
    }
    break;
  }
  return out;
}

LocalMap build_local_map(const SegmentList& segments, double spacing) {
  if (segments.segments.size() < 2) throw Error(Errc::extraction_failure, "fewer than two track segments");

  Polyline mids;
  std::vector<double> half;
  std::vector<bool> matched;
  std::vector<bool> interior;
  for (const auto& seg : segments.segments) {
    const Vec2 m = seg.midpoint();
    if (!mids.empty() && (m - mids.back()).norm() < 1e-9) continue;
    // A midpoint stepping back against the previous direction is dropped.
    if (mids.size() >= 2 && (m - mids.back()).dot(mids.back() - mids[mids.size() - 2]) < 0.0) continue;
    mids.push_back(m);
    half.push_back(0.5 * seg.length());
    matched.push_back(seg.kind == SegmentKind::matched);
    interior.push_back(seg.kind == SegmentKind::matched && seg.short_index > 0 &&
                       seg.short_index + 1 < segments.short_count);
  }
  const auto s_mid = cumulative_arc_length(mids);
  if (mids.size() < 2 || s_mid.back() <= 0.0) {
    throw Error(Errc::extraction_failure, "degenerate centreline");
  }

  const auto intervals = static_cast<std::size_t>(std::max(1.0, std::round(s_mid.back() / spacing)));
  LocalMap map;
  map.points = resample_uniform(mids, intervals);
  map.s = cumulative_arc_length(map.points);

  // Stations of the resampled points along the midpoint polyline.
  std::vector<double> stations(map.points.size());
  for (std::size_t i = 0; i < stations.size(); ++i) {
    stations[i] = s_mid.back() * static_cast<double>(i) / static_cast<double>(intervals);
  }
  map.widths_left = interpolate_by_arc_length(s_mid, half, stations);
  map.widths_right = map.widths_left;

  map.both_visible.resize(map.points.size());
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto hi = static_cast<std::size_t>(std::lower_bound(s_mid.begin(), s_mid.end(), stations[i]) - s_mid.begin());
    const std::size_t up = std::min(hi, mids.size() - 1);
    const std::size_t lo = up > 0 && s_mid[up] > stations[i] ? up - 1 : up;
    map.both_visible[i] = interior[lo] && interior[up];
  }

  const auto tangents = central_difference_tangents(map.points);
  map.normals.reserve(tangents.size());
  for (const auto& t : tangents) map.normals.push_back(left_normal(t));

  double s_matched = 0.0;
  for (std::size_t i = 0; i < mids.size(); ++i) {
    if (matched[i]) s_matched = s_mid[i];
  }
  map.matched_length = s_matched * map.length() / s_mid.back();
  map.all_projected = segments.all_projected;
  return map;
}

LocalMap extract(const LidarScan& scan, const ExtractionConfig& cfg) {
  Polyline points = scan_to_points(scan);
  std::erase_if(points, [&](const Vec2& p) { return p.x() < cfg.rear_cutoff; });
  const BoundaryPair raw = identify_boundaries(points, cfg.gap_threshold);
  BoundaryPair pair;
  pair.long_is_left = raw.long_is_left;
  try {
    pair.long_line = resample_line(raw.long_line, cfg.spacing);
    pair.short_line = resample_line(raw.short_line, cfg.spacing);
  } catch (const Error& e) {
    throw Error(Errc::extraction_failure, e.what());
  }
  return build_local_map(match_segments(pair, cfg.w_max, cfg.w_track), cfg.spacing);
}

void write_local_map_csv(const LocalMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "s,x,y,w_left,w_right,nx,ny\n" << std::setprecision(10);
  for (std::size_t i = 0; i < map.size(); ++i) {
    out << map.s[i] << ',' << map.points[i].x() << ',' << map.points[i].y() << ',' << map.widths_left[i]
        << ',' << map.widths_right[i] << ',' << map.normals[i].x() << ',' << map.normals[i].y() << '\n';
  }
}

}  // namespace lmr
