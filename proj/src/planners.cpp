#include "lmr/planners.hpp"

#include <cmath>

#include "lmr/error.hpp"

namespace lmr {

namespace {

PurePursuitConfig with_vehicle(PurePursuitConfig pp, const VehicleLimits& limits) {
  pp.wheelbase = limits.wheelbase;
  pp.max_steer = limits.max_steer;
  pp.validate();
  return pp;
}

VehicleState vehicle_frame_state(const Observation& obs) {
  VehicleState s;
  s.speed = obs.speed;
  s.steer = obs.steer;
  s.time = obs.time;
  return s;
}

VehicleState world_state(const Observation& obs) {
  if (!obs.pose) throw Error(Errc::invalid_argument, "map-based planner observed without a pose");
  VehicleState s;
  s.pose = *obs.pose;
  s.speed = obs.speed;
  s.steer = obs.steer;
  s.time = obs.time;
  return s;
}

const LidarScan& require_scan(const Observation& obs) {
  if (!obs.scan) throw Error(Errc::invalid_argument, "planner observed without a scan");
  return *obs.scan;
}

CentrelineDescription as_centreline(const LocalMap& map) {
  CentrelineDescription c;
  c.points = map.points;
  c.widths_left = map.widths_left;
  c.widths_right = map.widths_right;
  return c;
}

}  // namespace

FtgPlanner::FtgPlanner(FtgConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void FtgPlanner::perceive(const Observation& obs) { require_scan(obs); }

Action FtgPlanner::plan(const Observation& obs) { return ftg_step(require_scan(obs), cfg_); }

GlobalTwoStagePlanner::GlobalTwoStagePlanner(const CentrelineDescription& centreline, const VehicleLimits& limits,
                                             PurePursuitConfig pp, double margin, double localisation_us)
    : traj_(plan_global_trajectory(centreline, limits, margin)),
      pp_(with_vehicle(pp, limits)),
      localisation_us_(localisation_us) {}

void GlobalTwoStagePlanner::perceive(const Observation& obs) { state_ = world_state(obs); }

Action GlobalTwoStagePlanner::plan(const Observation&) { return pure_pursuit_step(traj_, state_, pp_); }

LocalTwoStagePlanner::LocalTwoStagePlanner(const VehicleLimits& limits, ExtractionConfig extraction,
                                           PurePursuitConfig pp, LocalPlanConfig plan)
    : limits_(limits), extraction_(extraction), pp_(with_vehicle(pp, limits)), plan_cfg_(plan) {}

void LocalTwoStagePlanner::reset() {
  map_.reset();
  traj_.reset();
  previous_.reset();
}

void LocalTwoStagePlanner::perceive(const Observation& obs) {
  map_.reset();
  if (traj_) previous_ = std::move(traj_);
  traj_.reset();
  map_ = extract(require_scan(obs), extraction_);
}

double LocalTwoStagePlanner::continued_heading(const Observation& obs) const {
  if (!previous_ || previous_->size() < 2 || plan_cfg_.continuity_heading <= 0.0) return 0.0;
  const double dt = obs.time - previous_obs_.time;
  if (dt <= 0.0 || dt > 0.2) return 0.0;
  // Odometry from the measured speed and steering since the previous plan.
  const double v = 0.5 * (obs.speed + previous_obs_.speed);
  const double yaw_rate = v * std::tan(0.5 * (obs.steer + previous_obs_.steer)) / limits_.wheelbase;
  const double turn = yaw_rate * dt;
  const Vec2 moved = v * dt * Vec2(std::cos(0.5 * turn), std::sin(0.5 * turn));

  const auto foot = project_onto(previous_->points, moved, false);
  const auto tangents = central_difference_tangents(previous_->points);
  const std::size_t i = std::min(foot.segment, previous_->size() - 2);
  const Vec2 dir = (1.0 - foot.t) * tangents[i] + foot.t * tangents[i + 1];
  const double heading = normalize_angle(std::atan2(dir.y(), dir.x()) - turn);
  return std::abs(heading) <= plan_cfg_.continuity_heading ? heading : 0.0;
}

Action LocalTwoStagePlanner::plan(const Observation& obs) {
  if (!map_) throw Error(Errc::extraction_failure, "no local map");
  const double heading = continued_heading(obs);
  previous_.reset();
  previous_obs_ = obs;
  traj_ = plan_local_trajectory(*map_, obs.speed, limits_, plan_cfg_, heading);
  return pure_pursuit_step(*traj_, vehicle_frame_state(obs), pp_);
}

GlobalMpccPlanner::GlobalMpccPlanner(const CentrelineDescription& centreline, MpccConfig cfg, double localisation_us)
    : reference_(centreline), controller_(std::move(cfg)), localisation_us_(localisation_us) {}

void GlobalMpccPlanner::reset() { controller_.reset(); }

void GlobalMpccPlanner::perceive(const Observation& obs) { state_ = world_state(obs); }

Action GlobalMpccPlanner::plan(const Observation& obs) { return controller_.step(reference_, state_, obs.time); }

LocalMpccPlanner::LocalMpccPlanner(MpccConfig cfg, ExtractionConfig extraction, TerminalRule terminal)
    : extraction_(extraction), terminal_(terminal), controller_(std::move(cfg)) {
  controller_.config().terminal_speed = terminal_.speed(controller_.config().limits);
}

void LocalMpccPlanner::reset() {
  controller_.reset();
  map_.reset();
}

void LocalMpccPlanner::perceive(const Observation& obs) {
  map_.reset();
  map_ = extract(require_scan(obs), extraction_);
}

Action LocalMpccPlanner::plan(const Observation& obs) {
  if (!map_) throw Error(Errc::extraction_failure, "no local map");
  const ReferencePath ref(smooth_reference(as_centreline(*map_), LocalPlanConfig{}.smoothing));
  return controller_.step(ref, vehicle_frame_state(obs), obs.time);
}

CentrelineFollower::CentrelineFollower(const CentrelineDescription& centreline, const VehicleLimits& limits,
                                       double speed, ExtractionConfig extraction, PurePursuitConfig pp)
    : traj_(centreline_trajectory(centreline, limits)), extraction_(extraction), pp_(with_vehicle(pp, limits)) {
  for (auto& v : traj_.speed) v = speed;
}

void CentrelineFollower::perceive(const Observation& obs) {
  state_ = world_state(obs);
  map_.reset();
  try {
    map_ = extract(require_scan(obs), extraction_);
  } catch (const Error&) {
  }
}

Action CentrelineFollower::plan(const Observation&) { return pure_pursuit_step(traj_, state_, pp_); }

}  // namespace lmr
