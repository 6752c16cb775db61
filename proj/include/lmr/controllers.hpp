#pragma once

#include <vector>

#include "lmr/track.hpp"
#include "lmr/trajopt.hpp"
#include "lmr/vehicle.hpp"

namespace lmr {

struct PurePursuitConfig {
  double lookahead_base = 0.3;   // m
  double lookahead_gain = 0.05;  // s
  double wheelbase = 0.33;       // m
  double max_steer = 0.4;        // rad

  double lookahead(double speed) const { return lookahead_base + lookahead_gain * speed; }
  void validate() const;
};

/// arctan(wheelbase * sin(alpha) / lookahead), unclamped.
double pure_pursuit_steer(double alpha, double lookahead, double wheelbase);

/// Index of the trajectory point a lookahead distance past the closest one
/// (wrapping on closed trajectories, the last point otherwise).
std::size_t lookahead_index(const Trajectory& traj, std::size_t closest, double distance);

/// Steers toward the lookahead point and commands the trajectory speed at the
/// closest point. Throws Errc::empty_trajectory for an empty trajectory.
Action pure_pursuit_step(const Trajectory& traj, const VehicleState& state, const PurePursuitConfig& cfg);

struct FtgSpeedBand {
  double max_abs_steer;  // band applies while |steer| < this
  double speed;
};

struct FtgConfig {
  double bubble_radius = 0.5;    // m, cleared around the nearest return
  double safe_distance = 1.5;    // m, beams at least this long form gaps
  double fov_clip = M_PI / 2.0;  // rad, beams beyond +-fov_clip ignored
  double max_steer = 0.4;        // rad
  double disparity_threshold = 0.3;  // m, range jump treated as an obstacle edge
  double disparity_pad = 0.3;        // m, padding laid over the far side of an edge
  std::vector<FtgSpeedBand> speed_bands{{0.1, 5.0}, {0.25, 3.0}};
  double slow_speed = 1.5;  // beyond the last band

  double speed_for(double steer) const;
  void validate() const;
};

struct Gap {
  std::size_t begin = 0;  // first beam
  std::size_t end = 0;    // one past the last beam
  std::size_t size() const { return end - begin; }
};

/// Widest run of beams longer than `threshold` within [lo, hi); ties go to
/// the lowest index. Empty gap when none exists.
Gap widest_gap(const std::vector<double>& ranges, double threshold, std::size_t lo, std::size_t hi);

/// Follow-The-Gap: clear a bubble around the nearest return, pick the widest
/// gap and steer at its furthest return (the middle one when several tie).
/// No gap -> stop with zero steering.
Action ftg_step(const LidarScan& scan, const FtgConfig& cfg);

}  // namespace lmr
