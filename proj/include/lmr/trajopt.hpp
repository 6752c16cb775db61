#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "lmr/geometry.hpp"
#include "lmr/localmap.hpp"
#include "lmr/track.hpp"
#include "lmr/vehicle.hpp"

namespace lmr {

struct Trajectory {
  Polyline points;
  std::vector<double> curvature;
  std::vector<double> speed;
  std::vector<double> s;  // s[0] = 0
  bool closed = false;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  /// Total length, including the closing segment of a closed trajectory.
  double length() const;
};

/// Terminal speed for open horizons: the highest speed from which the
/// vehicle can still brake to `v_safe` within `braking_distance`.
struct TerminalRule {
  double v_safe = 2.0;
  double braking_distance = 11.0;

  double speed(const VehicleLimits& limits) const;
};

struct MinCurvatureResult {
  Polyline path;
  std::vector<double> offsets;  // along the centreline normals
  std::vector<Vec2> normals;
  double objective = 0.0;            // sum of squared linearised curvature
  double centreline_objective = 0.0;  // same, all offsets zero
  int iterations = 0;
};

/// Unit normals (left of travel) of a centreline from central differences.
std::vector<Vec2> centreline_normals(const CentrelineDescription& line);

/// Curvature of the offset path at every point, taken as heading change over
/// the mean length of the two adjacent segments and linearised in the offsets
/// around the centreline. Endpoints of an open line get zero.
std::vector<double> linearised_curvature(const CentrelineDescription& line, const std::vector<double>& offsets);

/// Sum of squared linearised curvature.
double curvature_objective(const CentrelineDescription& line, const std::vector<double>& offsets);

/// Offsets minimising the summed squared curvature inside the track, kept
/// `limits.half_width + margin` away from each boundary (the margin is shrunk
/// where the track is too narrow for it). With an anchor (open lines only)
/// the first offset puts the path through the anchor position and the second
/// matches its heading as far as the bounds allow. With an anchor and a
/// positive `margin_ramp`, an anchor lying inside the margin band widens the
/// bounds to reach it, closing back linearly over `margin_ramp` metres.
/// Errors: fewer than 5 points or inconsistent widths -> invalid_argument;
/// track narrower than the vehicle -> infeasible.
MinCurvatureResult min_curvature_path(const CentrelineDescription& line, const VehicleLimits& limits,
                                      const std::optional<Pose>& anchor = std::nullopt, double margin = 0.0,
                                      double margin_ramp = 0.0);

/// Forward-backward speed profile. `ds[i]` is the distance from point i to
/// point i+1 (n-1 entries for open paths, n for closed). Open paths start at
/// min(v_start, lateral cap) and end at or below `v_end` when given; closed
/// paths are periodic and ignore both.
std::vector<double> speed_profile(const std::vector<double>& ds, const std::vector<double>& curvature,
                                  const VehicleLimits& limits, double v_start, std::optional<double> v_end,
                                  bool closed);

/// Builds a trajectory from path points: circumcircle curvature and profile.
Trajectory make_trajectory(const Polyline& path, bool closed, const VehicleLimits& limits, double v_start,
                           std::optional<double> v_end);

/// Penalised least-squares smoothing of an open reference line (second
/// differences weighted by `lambda`); the first point is kept. Widths are
/// shifted so the boundaries stay where they were, then smoothed with the
/// same weight.
CentrelineDescription smooth_reference(const CentrelineDescription& line, double lambda);

struct LocalPlanConfig {
  TerminalRule terminal;
  double smoothing = 50.0;   // reference smoothing weight, 0 disables
  double margin = 0.5;        // extra clearance beyond the vehicle half-width
  double start_lead = 0.04;  // s of full acceleration added to the current speed at the first point
  double margin_ramp = 3.0;   // m over which bounds widened to reach the vehicle close again
  double continuity_heading = 0.3;  // rad, largest start heading taken from the previous plan; 0 disables
};

/// Centreline of the local map from the vehicle's projection onwards,
/// resampled at the map's mean spacing starting from the projection.
/// Throws Errc::empty_trajectory when fewer than 5 points remain.
CentrelineDescription trim_local_map(const LocalMap& map, const Vec2& vehicle = Vec2::Zero());

/// Anchored minimum-curvature raceline over a local map plus its speed
/// profile, in the vehicle frame (vehicle at the origin facing +x). The path
/// leaves the origin at `start_heading` (vehicle frame).
Trajectory plan_local_trajectory(const LocalMap& map, double speed, const VehicleLimits& limits,
                                 const LocalPlanConfig& cfg = {}, double start_heading = 0.0);

/// Raceline over a full centreline in world coordinates. Closed lines give
/// periodic profiles; open ones start from standstill and end stopped.
Trajectory plan_global_trajectory(const CentrelineDescription& line, const VehicleLimits& limits,
                                  double margin = 0.0);

/// Trajectory of the centreline itself with its speed profile.
Trajectory centreline_trajectory(const CentrelineDescription& line, const VehicleLimits& limits);

/// Columns `s,x,y,kappa,v`.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace lmr
