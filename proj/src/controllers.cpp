#include "lmr/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "lmr/error.hpp"

namespace lmr {

void PurePursuitConfig::validate() const {
  if (!(lookahead_base > 0.0) || !(lookahead_gain >= 0.0) || !(wheelbase > 0.0) || !(max_steer > 0.0)) {
    throw Error(Errc::invalid_argument, "pure pursuit needs lookahead_base > 0 and lookahead_gain >= 0");
  }
}

double pure_pursuit_steer(double alpha, double lookahead, double wheelbase) {
  return std::atan(wheelbase * std::sin(alpha) / lookahead);
}

std::size_t lookahead_index(const Trajectory& traj, std::size_t closest, double distance) {
  const std::size_t n = traj.size();
  double travelled = 0.0;
  std::size_t i = closest;
  for (std::size_t step = 0; step + 1 < n || (traj.closed && step < n); ++step) {
    const std::size_t next = i + 1 < n ? i + 1 : (traj.closed ? 0 : n - 1);
    if (next == i) break;
    travelled += (traj.points[next] - traj.points[i]).norm();
    i = next;
    if (travelled >= distance) return i;
    if (!traj.closed && i == n - 1) break;
  }
  return traj.closed ? i : n - 1;
}

Action pure_pursuit_step(const Trajectory& traj, const VehicleState& state, const PurePursuitConfig& cfg) {
  if (traj.empty()) throw Error(Errc::empty_trajectory, "pure pursuit on an empty trajectory");
  const Vec2 pos = state.pose.position();
  std::size_t closest = 0;
  double best = (traj.points[0] - pos).squaredNorm();
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double d = (traj.points[i] - pos).squaredNorm();
    if (d < best) {
      best = d;
      closest = i;
    }
  }
  const double ld = cfg.lookahead(state.speed);
  const Vec2 target = to_local(state.pose, traj.points[lookahead_index(traj, closest, ld)]);
  const double alpha = std::atan2(target.y(), target.x());
  Action a;
  a.steer = std::clamp(pure_pursuit_steer(alpha, ld, cfg.wheelbase), -cfg.max_steer, cfg.max_steer);
  a.speed = traj.speed[closest];
  return a;
}

double FtgConfig::speed_for(double steer) const {
  const double mag = std::abs(steer);
  for (const auto& band : speed_bands) {
    if (mag < band.max_abs_steer) return band.speed;
  }
  return slow_speed;
}

void FtgConfig::validate() const {
  bool ok = bubble_radius > 0.0 && safe_distance > 0.0 && disparity_threshold > 0.0 && disparity_pad >= 0.0 && fov_clip > 0.0 && max_steer > 0.0;
  double prev_limit = 0.0;
  double prev_speed = speed_bands.empty() ? slow_speed : speed_bands.front().speed;
  for (const auto& band : speed_bands) {
    ok = ok && band.max_abs_steer > prev_limit && band.speed <= prev_speed;
    prev_limit = band.max_abs_steer;
    prev_speed = band.speed;
  }
  ok = ok && slow_speed <= prev_speed;
  if (!ok) throw Error(Errc::invalid_argument, "FTG config invalid or speed map not non-increasing");
}

Gap widest_gap(const std::vector<double>& ranges, double threshold, std::size_t lo, std::size_t hi) {
  Gap best;
  std::size_t start = lo;
  for (std::size_t i = lo; i <= hi; ++i) {
    const bool open = i < hi && ranges[i] >= threshold;
    if (open) continue;
    if (i - start > best.size()) best = {start, i};
    start = i + 1;
  }
  return best;
}

Action ftg_step(const LidarScan& scan, const FtgConfig& cfg) {
  const std::size_t n = scan.size();
  std::vector<double> r(scan.distances);
  std::size_t lo = n;
  std::size_t hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = std::min(r[i], scan.max_range);
    if (std::abs(scan.bearing(i)) <= cfg.fov_clip) {
      lo = std::min(lo, i);
      hi = i + 1;
    }
  }
  if (lo >= hi) return {0.0, 0.0};

  // Disparity extension: at each range jump, the near range is laid over the
  // beams on the far side that a car-width pad would sweep.
  const std::vector<double> raw(r);
  const double step = n > 1 ? std::abs(scan.bearing(1) - scan.bearing(0)) : 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(raw[i + 1] - raw[i]) <= cfg.disparity_threshold) continue;
    const double near = std::min(raw[i], raw[i + 1]);
    const double spread = cfg.disparity_pad < near ? std::asin(cfg.disparity_pad / near) : M_PI;
    const auto count = static_cast<std::size_t>(std::ceil(spread / step));
    if (raw[i + 1] > raw[i]) {
      for (std::size_t j = i + 1; j < n && j <= i + count; ++j) r[j] = std::min(r[j], near);
    } else {
      for (std::size_t j = i + 1; j-- > 0 && j + count >= i + 1;) r[j] = std::min(r[j], near);
    }
  }

  std::size_t nearest = lo;
  for (std::size_t i = lo; i < hi; ++i) {
    if (r[i] < r[nearest]) nearest = i;
  }
  const double near_bearing = scan.bearing(nearest);
  const double near_range = r[nearest];
  for (std::size_t i = lo; i < hi; ++i) {
    const double db = scan.bearing(i) - near_bearing;
    const double d2 = r[i] * r[i] + near_range * near_range - 2.0 * r[i] * near_range * std::cos(db);
    if (d2 <= cfg.bubble_radius * cfg.bubble_radius) r[i] = 0.0;
  }

  const Gap gap = widest_gap(r, cfg.safe_distance, lo, hi);
  if (gap.size() == 0) return {0.0, 0.0};
  double far = 0.0;
  for (std::size_t i = gap.begin; i < gap.end; ++i) far = std::max(far, r[i]);
  // Several beams can share the furthest range (max-range returns): aim at
  // the middle of the longest such run.
  const Gap tied = widest_gap(r, far - 1e-9, gap.begin, gap.end);
  const std::size_t best = tied.begin + (tied.size() - 1) / 2;
  Action a;
  a.steer = std::clamp(scan.bearing(best), -cfg.max_steer, cfg.max_steer);
  a.speed = cfg.speed_for(a.steer);
  return a;
}

}  // namespace lmr
