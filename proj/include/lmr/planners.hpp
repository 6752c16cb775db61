#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmr/controllers.hpp"
#include "lmr/localmap.hpp"
#include "lmr/mpcc.hpp"
#include "lmr/sim.hpp"
#include "lmr/trajopt.hpp"

namespace lmr {

class FtgPlanner : public Planner {
 public:
  explicit FtgPlanner(FtgConfig cfg = {});
  std::string name() const override { return "ftg"; }
  bool is_mapless() const override { return true; }
  void perceive(const Observation& obs) override;
  Action plan(const Observation& obs) override;
  /// Reactive: there is no perception stage to time.
  std::optional<double> simulated_perception_us() const override { return 0.0; }

 private:
  FtgConfig cfg_;
};

/// Raceline computed once over the full centreline, tracked with pure pursuit
/// from the true pose.
class GlobalTwoStagePlanner : public Planner {
 public:
  GlobalTwoStagePlanner(const CentrelineDescription& centreline, const VehicleLimits& limits,
                        PurePursuitConfig pp = {}, double margin = 0.5, double localisation_us = 1000.0);
  std::string name() const override { return "global_two_stage"; }
  bool is_mapless() const override { return false; }
  void perceive(const Observation& obs) override;
  Action plan(const Observation& obs) override;
  std::optional<double> simulated_perception_us() const override { return localisation_us_; }
  const Trajectory& trajectory() const { return traj_; }

 private:
  Trajectory traj_;
  PurePursuitConfig pp_;
  double localisation_us_;
  VehicleState state_;
};

/// Local map from each scan, anchored raceline over it, pure pursuit in the
/// vehicle frame.
class LocalTwoStagePlanner : public Planner {
 public:
  LocalTwoStagePlanner(const VehicleLimits& limits, ExtractionConfig extraction = {}, PurePursuitConfig pp = {},
                       LocalPlanConfig plan = {});
  std::string name() const override { return "local_two_stage"; }
  bool is_mapless() const override { return true; }
  void reset() override;
  void perceive(const Observation& obs) override;
  Action plan(const Observation& obs) override;
  const std::optional<LocalMap>& local_map() const { return map_; }
  const std::optional<Trajectory>& trajectory() const { return traj_; }

 private:
  VehicleLimits limits_;
  ExtractionConfig extraction_;
  PurePursuitConfig pp_;
  LocalPlanConfig plan_cfg_;
  std::optional<LocalMap> map_;
  std::optional<Trajectory> traj_;
  std::optional<Trajectory> previous_;
  Observation previous_obs_;

  double continued_heading(const Observation& obs) const;
};

class GlobalMpccPlanner : public Planner {
 public:
  GlobalMpccPlanner(const CentrelineDescription& centreline, MpccConfig cfg, double localisation_us = 1000.0);
  std::string name() const override { return "global_mpcc"; }
  bool is_mapless() const override { return false; }
  void reset() override;
  void perceive(const Observation& obs) override;
  Action plan(const Observation& obs) override;
  std::optional<double> simulated_perception_us() const override { return localisation_us_; }
  MpccController& controller() { return controller_; }

 private:
  ReferencePath reference_;
  MpccController controller_;
  double localisation_us_;
  VehicleState state_;
};

class LocalMpccPlanner : public Planner {
 public:
  LocalMpccPlanner(MpccConfig cfg, ExtractionConfig extraction = {}, TerminalRule terminal = {});
  std::string name() const override { return "local_mpcc"; }
  bool is_mapless() const override { return true; }
  void reset() override;
  void perceive(const Observation& obs) override;
  Action plan(const Observation& obs) override;
  MpccController& controller() { return controller_; }

 private:
  ExtractionConfig extraction_;
  TerminalRule terminal_;
  MpccController controller_;
  std::optional<LocalMap> map_;
};

/// Pure pursuit on the true centreline at constant speed; also extracts a
/// local map every step for length statistics.
class CentrelineFollower : public Planner {
 public:
  CentrelineFollower(const CentrelineDescription& centreline, const VehicleLimits& limits, double speed,
                     ExtractionConfig extraction = {}, PurePursuitConfig pp = {});
  std::string name() const override { return "centreline_follower"; }
  bool is_mapless() const override { return false; }
  bool needs_scan() const override { return true; }
  void perceive(const Observation& obs) override;
  Action plan(const Observation& obs) override;
  /// Local map of the latest step, if extraction succeeded.
  const std::optional<LocalMap>& local_map() const { return map_; }

 private:
  Trajectory traj_;
  ExtractionConfig extraction_;
  PurePursuitConfig pp_;
  std::optional<LocalMap> map_;
  VehicleState state_;
};

}  // namespace lmr
