#include "lmr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmr/error.hpp"

namespace lmr {

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Vec2 Pose::direction() const { return {std::cos(heading), std::sin(heading)}; }

Vec2 to_local(const Pose& frame, const Vec2& world) {
  const double c = std::cos(frame.heading), s = std::sin(frame.heading);
  const Vec2 d = world - frame.position();
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

Vec2 to_world(const Pose& frame, const Vec2& local) {
  const double c = std::cos(frame.heading), s = std::sin(frame.heading);
  return {frame.x + c * local.x() - s * local.y(), frame.y + s * local.x() + c * local.y()};
}

Pose to_local(const Pose& frame, const Pose& world) {
  const Vec2 p = to_local(frame, world.position());
  return Pose(p.x(), p.y(), world.heading - frame.heading);
}

Pose to_world(const Pose& frame, const Pose& local) {
  const Vec2 p = to_world(frame, local.position());
  return Pose(p.x(), p.y(), local.heading + frame.heading);
}

std::vector<double> cumulative_arc_length(const Polyline& line, bool closed) {
  std::vector<double> s;
  s.reserve(line.size() + 1);
  if (line.empty()) return s;
  s.push_back(0.0);
  for (std::size_t i = 1; i < line.size(); ++i) s.push_back(s.back() + (line[i] - line[i - 1]).norm());
  if (closed && line.size() > 1) s.push_back(s.back() + (line.front() - line.back()).norm());
  return s;
}

double arc_length(const Polyline& line, bool closed) {
  const auto s = cumulative_arc_length(line, closed);
  return s.empty() ? 0.0 : s.back();
}

Polyline resample_line(const Polyline& line, double spacing) {
  if (!(spacing > 0.0)) throw Error(Errc::invalid_argument, "resample spacing must be positive");
  const auto s = cumulative_arc_length(line);
  if (line.size() < 2 || s.back() < spacing) {
    throw Error(Errc::degenerate_line, "line shorter than resample spacing");
  }
  Polyline out;
  out.reserve(static_cast<std::size_t>(s.back() / spacing) + 2);
  out.push_back(line.front());
  std::size_t seg = 0;
  // Stations are k * spacing; comparing against a small epsilon keeps a
  // station that lands on the endpoint from being emitted twice.
  const double eps = 1e-9 * std::max(1.0, s.back());
  for (std::size_t k = 1;; ++k) {
    const double target = static_cast<double>(k) * spacing;
    if (target > s.back() - eps) break;
    while (seg + 1 < s.size() - 1 && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double t = len > 0.0 ? (target - s[seg]) / len : 0.0;
    out.push_back(line[seg] + t * (line[seg + 1] - line[seg]));
  }
  out.push_back(line.back());
  return out;
}

Polyline resample_uniform(const Polyline& line, std::size_t intervals) {
  const auto s = cumulative_arc_length(line);
  if (line.size() < 2 || s.back() <= 0.0 || intervals == 0) {
    throw Error(Errc::degenerate_line, "cannot resample a zero-length line");
  }
  Polyline out;
  out.reserve(intervals + 1);
  out.push_back(line.front());
  const double step = s.back() / static_cast<double>(intervals);
  std::size_t seg = 0;
  for (std::size_t k = 1; k < intervals; ++k) {
    const double target = static_cast<double>(k) * step;
    while (seg + 1 < s.size() - 1 && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double t = len > 0.0 ? (target - s[seg]) / len : 0.0;
    out.push_back(line[seg] + t * (line[seg + 1] - line[seg]));
  }
  out.push_back(line.back());
  return out;
}

std::vector<double> interpolate_by_arc_length(const std::vector<double>& s_src,
                                              const std::vector<double>& values,
                                              const std::vector<double>& s_dst) {
  std::vector<double> out;
  out.reserve(s_dst.size());
  std::size_t seg = 0;
  for (double s : s_dst) {
    if (s <= s_src.front()) {
      out.push_back(values.front());
      continue;
    }
    if (s >= s_src.back()) {
      out.push_back(values[s_src.size() - 1]);
      continue;
    }
    // s_dst is usually sorted; fall back to a search when it is not.
    if (s < s_src[seg]) seg = 0;
    while (seg + 1 < s_src.size() && s_src[seg + 1] < s) ++seg;
    const double len = s_src[seg + 1] - s_src[seg];
    const double t = len > 0.0 ? (s - s_src[seg]) / len : 0.0;
    out.push_back(values[seg] + t * (values[seg + 1] - values[seg]));
  }
  return out;
}

Vec2 point_at_arc_length(const Polyline& line, const std::vector<double>& s_cum, double s,
                         bool closed) {
  const std::size_t n = line.size();
  if (closed) {
    const double total = s_cum.back();
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  } else {
    s = std::clamp(s, 0.0, s_cum[n - 1]);
  }
  const std::size_t edges = closed ? n : n - 1;
  const auto it = std::upper_bound(s_cum.begin(), s_cum.begin() + static_cast<long>(edges) + 1, s);
  std::size_t seg = it == s_cum.begin() ? 0 : static_cast<std::size_t>(it - s_cum.begin()) - 1;
  seg = std::min(seg, edges - 1);
  const Vec2& a = line[seg];
  const Vec2& b = line[(seg + 1) % n];
  const double len = s_cum[seg + 1] - s_cum[seg];
  const double t = len > 0.0 ? (s - s_cum[seg]) / len : 0.0;
  return a + t * (b - a);
}

Projection project_onto(const Polyline& line, const Vec2& p, bool closed) {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  const std::size_t n = line.size();
  if (n == 0) return best;
  if (n == 1) {
    best.foot = line[0];
    best.distance = (p - line[0]).norm();
    return best;
  }
  const std::size_t edges = closed ? n : n - 1;
  double s_acc = 0.0;
  for (std::size_t i = 0; i < edges; ++i) {
    const Vec2& a = line[i];
    const Vec2& b = line[(i + 1) % n];
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 foot = a + t * ab;
    const double d = (p - foot).norm();
    const double len = std::sqrt(len2);
    if (d < best.distance) {
      best.segment = i;
      best.t = t;
      best.s = s_acc + t * len;
      best.distance = d;
      best.foot = foot;
      best.lateral = len > 0.0 ? cross(ab / len, p - a) : 0.0;
    }
    s_acc += len;
  }
  return best;
}

std::vector<Vec2> central_difference_tangents(const Polyline& line, bool closed) {
  const std::size_t n = line.size();
  std::vector<Vec2> t(n, Vec2::UnitX());
  if (n < 2) return t;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 d;
    if (closed) {
      d = line[(i + 1) % n] - line[(i + n - 1) % n];
    } else if (i == 0) {
      d = line[1] - line[0];
    } else if (i == n - 1) {
      d = line[n - 1] - line[n - 2];
    } else {
      d = line[i + 1] - line[i - 1];
    }
    const double len = d.norm();
    t[i] = len > 0.0 ? Vec2(d / len) : (i > 0 ? t[i - 1] : Vec2(Vec2::UnitX()));
  }
  return t;
}

double circumcircle_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double ab = (b - a).norm(), bc = (c - b).norm(), ca = (a - c).norm();
  const double denom = ab * bc * ca;
  if (denom <= 0.0) return 0.0;
  return 2.0 * cross(b - a, c - a) / denom;
}

std::vector<double> circumcircle_curvatures(const Polyline& line, bool closed) {
  const std::size_t n = line.size();
  std::vector<double> k(n, 0.0);
  if (n < 3) return k;
  for (std::size_t i = 0; i < n; ++i) {
    if (!closed && (i == 0 || i == n - 1)) continue;
    k[i] = circumcircle_curvature(line[(i + n - 1) % n], line[i], line[(i + 1) % n]);
  }
  if (!closed) {
    k[0] = k[1];
    k[n - 1] = k[n - 2];
  }
  return k;
}

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1,
                        double* ta) {
  const Vec2 r = a1 - a0, q = b1 - b0;
  const double denom = cross(r, q);
  if (std::abs(denom) < 1e-15) return false;
  const double t = cross(b0 - a0, q) / denom;
  const double u = cross(b0 - a0, r) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
  if (ta) *ta = t;
  return true;
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace lmr
