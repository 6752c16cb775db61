#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lmr/track.hpp"
#include "lmr/vehicle.hpp"

namespace lmr {

/// What a planner is given each planning step. Mapless planners only get the
/// scan and speed; map-based planners also get the true pose.
struct Observation {
  double time = 0.0;
  double speed = 0.0;
  double steer = 0.0;
  std::optional<LidarScan> scan;
  std::optional<Pose> pose;
};

class Planner {
 public:
  virtual ~Planner() = default;

  virtual std::string name() const = 0;
  virtual bool is_mapless() const = 0;
  virtual bool needs_scan() const { return is_mapless(); }
  /// Clears per-episode state (warm starts, caches).
  virtual void reset() {}
  /// Builds the internal representation (local map, localisation).
  virtual void perceive(const Observation& obs) = 0;
  virtual Action plan(const Observation& obs) = 0;
  /// When set, reported in place of the measured perception time.
  virtual std::optional<double> simulated_perception_us() const { return std::nullopt; }
};

struct SimConfig {
  double physics_dt = 0.01;
  int steps_per_plan = 4;
  double timeout = 60.0;
  double lap_coverage = 0.8;
  LidarConfig lidar;
};

enum class Outcome : std::uint8_t { lap_complete, collision, timeout, planner_failure };
const char* to_string(Outcome o);

struct StateSample {
  double t, x, y, theta, v, delta, action_v, action_delta;
};

struct PlanSample {
  double t = 0.0;
  Action action;
  bool fallback = false;
  std::string error;  // set when the fallback was used
  double perception_us = 0.0;
  double planning_us = 0.0;
};

struct EpisodeTrace {
  std::string planner;
  std::string track;
  std::uint64_t seed = 0;
  Pose start;
  std::vector<StateSample> states;
  std::vector<PlanSample> plans;
  Outcome outcome = Outcome::timeout;
  double lap_time = 0.0;          // lap_complete only
  Vec2 event_point = Vec2::Zero();  // collision location or final position
  double coverage = 0.0;          // fraction of centreline bins visited
  std::string failure;            // planner_failure message

  std::size_t fallback_count() const;
  /// FNV-1a over the simulated quantities (states, actions, outcome); wall
  /// times are excluded.
  std::uint64_t hash() const;
};

/// Actuators slew toward the (clamped) command, then one explicit Euler step
/// of the kinematic bicycle with the updated speed and steering.
VehicleState step_dynamics(const VehicleState& state, const Action& action, double dt, const VehicleLimits& limits);

/// Last steering held, speed decayed by 0.7 with a 1 m/s floor; (0, 1) when
/// nothing was planned yet.
Action fallback_action(const std::optional<Action>& last_good);

/// Uniform over centreline arc length, on the centreline, tangent heading.
Pose random_start(const Track& track, std::uint64_t seed);

/// Closed-loop episode until one lap, a collision, a planner failure or the
/// timeout. Deterministic in everything except the recorded wall times.
EpisodeTrace run_episode(const Track& track, Planner& planner, const Pose& start, std::uint64_t seed,
                         const VehicleLimits& limits, const SimConfig& cfg = {});

/// Columns `t,x,y,theta,v,delta,action_v,action_delta`.
void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path);

}  // namespace lmr
