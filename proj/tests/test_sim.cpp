#include <cmath>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "lmr/error.hpp"
#include "lmr/planners.hpp"
#include "lmr/sim.hpp"
#include "test_support.hpp"

using namespace lmr;
using lmr::testing::builtin;

namespace {

class ThrowingPlanner : public Planner {
 public:
  explicit ThrowingPlanner(bool library_error) : library_error_(library_error) {}
  std::string name() const override { return "throwing"; }
  bool is_mapless() const override { return true; }
  void perceive(const Observation&) override {}
  Action plan(const Observation&) override {
    if (library_error_) throw Error(Errc::extraction_failure, "nothing seen");
    throw std::runtime_error("bug");
  }

 private:
  bool library_error_;
};

// Straight ahead at a fixed speed; fails every third call with a library error.
class FlakyPlanner : public Planner {
 public:
  std::string name() const override { return "flaky"; }
  bool is_mapless() const override { return false; }
  void perceive(const Observation&) override {}
  Action plan(const Observation&) override {
    if (++calls_ % 3 == 0) throw Error(Errc::solver_failure, "flaky");
    return {0.05, 4.0};
  }

 private:
  int calls_ = 0;
};

}  // namespace

TEST_CASE("dynamics examples") {
  const VehicleLimits limits;
  VehicleState s;
  s.speed = 1.0;
  auto n = step_dynamics(s, {0.0, 1.0}, 0.01, limits);
  CHECK(n.pose.x == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(n.pose.y == 0.0);
  CHECK(n.pose.heading == 0.0);
  CHECK(n.time == doctest::Approx(0.01));

  VehicleState turning;
  turning.speed = 1.0;
  turning.steer = 0.1;
  n = step_dynamics(turning, {0.1, 1.0}, 0.01, limits);
  CHECK(n.pose.heading / 0.01 == doctest::Approx(std::tan(0.1) / 0.33).epsilon(1e-12));
  CHECK(n.pose.heading / 0.01 == doctest::Approx(0.3039).epsilon(1e-3));

  VehicleState rest;
  for (int i = 0; i < 100; ++i) rest = step_dynamics(rest, {0.0, 8.0}, 0.01, limits);
  CHECK(rest.speed == doctest::Approx(4.0).epsilon(1e-9));

  VehicleState steer;
  for (int i = 0; i < 5; ++i) steer = step_dynamics(steer, {1.0, 0.0}, 0.01, limits);
  // Rate-limited toward the clamped command.
  CHECK(steer.steer == doctest::Approx(5 * 0.01 * limits.max_steer_rate).epsilon(1e-9));
  for (int i = 0; i < 100; ++i) steer = step_dynamics(steer, {1.0, 0.0}, 0.01, limits);
  CHECK(steer.steer == doctest::Approx(limits.max_steer));
}

TEST_CASE("fallback action examples") {
  Action a = fallback_action(Action{0.1, 4.0});
  CHECK(a.steer == 0.1);
  CHECK(a.speed == doctest::Approx(2.8).epsilon(1e-12));
  Action b{0.1, 4.0};
  for (int i = 0; i < 10; ++i) b = fallback_action(b);
  CHECK(b.speed == 1.0);
  CHECK(b.steer == 0.1);
  const Action c = fallback_action(std::nullopt);
  CHECK(c.steer == 0.0);
  CHECK(c.speed == 1.0);
}

TEST_CASE("random starts lie on the centreline facing along it") {
  const auto& track = builtin("annulus");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Pose p = random_start(track, seed);
    const auto proj = project_onto(track.centreline.points, p.position(), true);
    CHECK(proj.distance < 1e-9);
    const Vec2 tangent = track.centreline.points[(proj.segment + 1) % track.centreline.points.size()] -
                         track.centreline.points[proj.segment];
    CHECK(std::abs(normalize_angle(p.heading - std::atan2(tangent.y(), tangent.x()))) < 0.02);
    CHECK(random_start(track, seed).x == p.x);
  }
  CHECK(random_start(track, 1).x != random_start(track, 2).x);
}

TEST_CASE("follow the gap never laps the corridor") {
  const auto& track = builtin("corridor");
  FtgPlanner ftg;
  SimConfig cfg;
  cfg.timeout = 20.0;
  const auto trace = run_episode(track, ftg, track.map.start_pose(), 0, VehicleLimits{}, cfg);
  CHECK(trace.outcome != Outcome::lap_complete);
}

TEST_CASE("episodes are deterministic") {
  const auto& track = builtin("waypoint_loop");
  const VehicleLimits limits;
  SimConfig cfg;
  cfg.timeout = 6.0;
  for (int which = 0; which < 2; ++which) {
    auto make = [&]() -> std::unique_ptr<Planner> {
      if (which == 0) return std::make_unique<FtgPlanner>();
      return std::make_unique<LocalTwoStagePlanner>(limits);
    };
    auto p1 = make();
    auto p2 = make();
    const Pose start = random_start(track, 3);
    const auto a = run_episode(track, *p1, start, 3, limits, cfg);
    const auto b = run_episode(track, *p2, start, 3, limits, cfg);
    CHECK(a.hash() == b.hash());
    CHECK(a.states.size() == b.states.size());
    // The same planner object reused after reset gives the same trace too.
    const auto c = run_episode(track, *p1, start, 3, limits, cfg);
    CHECK(c.hash() == a.hash());
  }
}

TEST_CASE("episode bookkeeping") {
  const auto& track = builtin("annulus");
  const VehicleLimits limits;
  GlobalTwoStagePlanner planner(track.centreline, limits);
  const auto trace = run_episode(track, planner, random_start(track, 0), 0, limits);
  REQUIRE(trace.outcome == Outcome::lap_complete);
  CHECK(trace.coverage >= 0.8);
  CHECK(trace.lap_time > 0.0);
  CHECK(trace.lap_time <= trace.states.back().t);
  CHECK(trace.lap_time > trace.states.back().t - 0.01);
  for (std::size_t i = 0; i < trace.states.size(); ++i) {
    CHECK(std::abs(trace.states[i].t - 0.01 * static_cast<double>(i + 1)) < 1e-9);
    CHECK_FALSE(track.map.disc_collides({trace.states[i].x, trace.states[i].y}, limits.half_width));
  }
  REQUIRE(!trace.plans.empty());
  for (std::size_t i = 0; i < trace.plans.size(); ++i) {
    CHECK(std::abs(trace.plans[i].t - 0.04 * static_cast<double>(i)) < 1e-9);
    CHECK(trace.plans[i].perception_us == 1000.0);
    CHECK_FALSE(trace.plans[i].fallback);
  }
  CHECK(trace.fallback_count() == 0);
}

TEST_CASE("planner errors fall back, other exceptions end the episode") {
  const auto& track = builtin("rounded_rect");
  const VehicleLimits limits;
  SimConfig cfg;
  cfg.timeout = 2.0;

  ThrowingPlanner soft(true);
  const auto a = run_episode(track, soft, track.map.start_pose(), 0, limits, cfg);
  CHECK(a.outcome != Outcome::planner_failure);
  REQUIRE(!a.plans.empty());
  CHECK(a.fallback_count() == a.plans.size());
  CHECK(a.plans.front().action == Action{0.0, 1.0});
  CHECK_FALSE(a.plans.front().error.empty());

  ThrowingPlanner hard(false);
  const auto b = run_episode(track, hard, track.map.start_pose(), 0, limits, cfg);
  CHECK(b.outcome == Outcome::planner_failure);
  CHECK(b.failure.find("bug") != std::string::npos);

  FlakyPlanner flaky;
  const auto c = run_episode(track, flaky, track.map.start_pose(), 0, limits, cfg);
  REQUIRE(c.plans.size() >= 3);
  CHECK_FALSE(c.plans[1].fallback);
  CHECK(c.plans[2].fallback);
  CHECK(c.plans[2].action.steer == 0.05);
  CHECK(c.plans[2].action.speed == doctest::Approx(2.8));
}

TEST_CASE("local two-stage planner laps the annulus within a profile-derived bound") {
  // Bound: 1.5x the time to drive the true centreline at its own friction-
  // limited speed profile (closed, flying lap).
  const auto& track = builtin("annulus");
  const VehicleLimits limits;
  const auto centre = centreline_trajectory(track.centreline, limits);
  double centre_time = 0.0;
  for (std::size_t i = 0; i < centre.size(); ++i) {
    const std::size_t j = (i + 1) % centre.size();
    centre_time += 2.0 * (centre.points[j] - centre.points[i]).norm() / (centre.speed[i] + centre.speed[j]);
  }
  const double circumference = 2.0 * M_PI * 5.0;
  CHECK(centre_time > circumference / limits.v_max);

  LocalTwoStagePlanner planner(limits);
  const auto trace = run_episode(track, planner, random_start(track, 1), 1, limits);
  MESSAGE("lap " << trace.lap_time << " s, centreline profile " << centre_time << " s");
  REQUIRE(trace.outcome == Outcome::lap_complete);
  CHECK(trace.lap_time < 1.5 * centre_time);
}

TEST_CASE("trace csv") {
  const auto& track = builtin("annulus");
  FtgPlanner ftg;
  SimConfig cfg;
  cfg.timeout = 0.5;
  const auto trace = run_episode(track, ftg, random_start(track, 0), 0, VehicleLimits{}, cfg);
  lmr::testing::TempDir dir("trace");
  write_trace_csv(trace, dir.path() / "t.csv");
  std::ifstream in(dir.path() / "t.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x,y,theta,v,delta,action_v,action_delta");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == trace.states.size());
}
