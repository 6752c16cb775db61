#include <cmath>
#include <random>

#include "doctest.h"
#include "lmr/controllers.hpp"
#include "lmr/error.hpp"
#include "lmr/sim.hpp"
#include "test_support.hpp"

using namespace lmr;

namespace {

Trajectory ray_trajectory(double angle, double length, double speed, double spacing = 0.1) {
  Trajectory t;
  const Vec2 d(std::cos(angle), std::sin(angle));
  for (double s = 0.0; s <= length + 1e-9; s += spacing) {
    t.points.push_back(d * s);
    t.s.push_back(s);
    t.curvature.push_back(0.0);
    t.speed.push_back(speed);
  }
  return t;
}

Vec2 rigid(const Vec2& p, double rot, const Vec2& shift) {
  return Vec2(std::cos(rot) * p.x() - std::sin(rot) * p.y(), std::sin(rot) * p.x() + std::cos(rot) * p.y()) + shift;
}

// Walls at y = +-1 seen from the origin, everything further than max_range clipped.
LidarScan corridor_scan(int n = 1080) {
  LidarScan scan;
  scan.distances.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const double s = std::abs(std::sin(scan.bearing(i)));
    scan.distances[i] = s > 1e-12 ? std::min(scan.max_range, 1.0 / s) : scan.max_range;
  }
  return scan;
}

}  // namespace

TEST_CASE("steering law examples") {
  CHECK(pure_pursuit_steer(0.0, 1.0, 0.33) == 0.0);
  const double d = pure_pursuit_steer(0.2, 1.0, 0.33);
  CHECK(std::abs(d - std::atan(0.33 * std::sin(0.2))) <= 1e-12);
  CHECK(d == doctest::Approx(0.0655).epsilon(1e-3));

  PurePursuitConfig cfg;
  cfg.lookahead_base = 0.5;
  cfg.lookahead_gain = 0.15;
  CHECK(std::abs(cfg.lookahead(4.0) - 1.1) <= 1e-12);
}

TEST_CASE("pure pursuit step measures the bearing to the lookahead point") {
  PurePursuitConfig cfg;
  VehicleState st;
  st.speed = 4.0;
  const auto traj = ray_trajectory(0.2, 10.0, 6.0);
  const Action a = pure_pursuit_step(traj, st, cfg);
  CHECK(std::abs(a.steer - std::atan(cfg.wheelbase * std::sin(0.2) / cfg.lookahead(4.0))) <= 1e-12);
  CHECK(a.speed == 6.0);

  // Straight ahead: no steering.
  CHECK(pure_pursuit_step(ray_trajectory(0.0, 10.0, 3.0), st, cfg).steer == 0.0);
}

TEST_CASE("pure pursuit clamps steering and handles short and closed trajectories") {
  PurePursuitConfig cfg;
  VehicleState st;
  st.speed = 2.0;
  // Target almost behind the vehicle on the left.
  auto behind = ray_trajectory(2.5, 5.0, 2.0);
  CHECK(pure_pursuit_step(behind, st, cfg).steer == doctest::Approx(cfg.max_steer));

  // Lookahead beyond the end of an open trajectory tracks the last point.
  auto shortt = ray_trajectory(0.3, 0.2, 2.0);
  CHECK(lookahead_index(shortt, 0, 5.0) == shortt.size() - 1);

  // Closed square loop: the lookahead wraps past the last vertex.
  Trajectory loop;
  loop.closed = true;
  loop.points = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  loop.curvature = {0, 0, 0, 0};
  loop.speed = {1, 1, 1, 1};
  loop.s = {0, 1, 2, 3};
  CHECK(lookahead_index(loop, 3, 1.5) == 1);
  CHECK(lookahead_index(loop, 2, 0.5) == 3);

  CHECK_THROWS_AS(pure_pursuit_step(Trajectory{}, st, cfg), Error);
}

TEST_CASE("pure pursuit is invariant under rigid transforms") {
  std::mt19937_64 rng(11);
  PurePursuitConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory traj;
    Vec2 p(lmr::testing::uniform(rng, -2, 2), lmr::testing::uniform(rng, -2, 2));
    double heading = lmr::testing::uniform(rng, -M_PI, M_PI);
    for (int i = 0; i < 60; ++i) {
      traj.points.push_back(p);
      traj.speed.push_back(lmr::testing::uniform(rng, 1, 8));
      traj.curvature.push_back(0.0);
      traj.s.push_back(i * 0.2);
      heading += lmr::testing::uniform(rng, -0.1, 0.1);
      p += 0.2 * Vec2(std::cos(heading), std::sin(heading));
    }
    VehicleState st;
    st.pose = Pose(lmr::testing::uniform(rng, -1, 1), lmr::testing::uniform(rng, -1, 1),
                   lmr::testing::uniform(rng, -M_PI, M_PI));
    st.speed = lmr::testing::uniform(rng, 0, 8);
    const Action a = pure_pursuit_step(traj, st, cfg);

    const double rot = lmr::testing::uniform(rng, -M_PI, M_PI);
    const Vec2 shift(lmr::testing::uniform(rng, -50, 50), lmr::testing::uniform(rng, -50, 50));
    Trajectory moved = traj;
    for (auto& q : moved.points) q = rigid(q, rot, shift);
    VehicleState st2 = st;
    const Vec2 pos = rigid(st.pose.position(), rot, shift);
    st2.pose = Pose(pos.x(), pos.y(), st.pose.heading + rot);
    const Action b = pure_pursuit_step(moved, st2, cfg);
    CHECK(std::abs(a.steer - b.steer) <= 1e-9);
    CHECK(a.speed == b.speed);
  }
}

TEST_CASE("pure pursuit removes a lateral offset on a straight") {
  // 0.5 m left of a straight line at 3 m/s, closed loop at the simulator rates.
  const VehicleLimits limits;
  PurePursuitConfig cfg;
  const auto traj = ray_trajectory(0.0, 40.0, 3.0);
  VehicleState st;
  st.pose = Pose(0.0, 0.5, 0.0);
  st.speed = 3.0;
  Action act;
  double last_outside = 0.0;
  for (int step = 0; step < 800; ++step) {
    if (step % 4 == 0) act = pure_pursuit_step(traj, st, cfg);
    st = step_dynamics(st, act, 0.01, limits);
    if (std::abs(st.pose.y) >= 0.05) last_outside = st.time;
  }
  MESSAGE("cross-track last at or above 5 cm at t = " << last_outside << " s");
  CHECK(last_outside < 5.0);
  CHECK(std::abs(st.pose.y) < 0.05);
}

TEST_CASE("widest gap enumeration") {
  std::vector<double> r(200, 1.0);
  for (int i = 20; i < 50; ++i) r[static_cast<std::size_t>(i)] = 5.0;
  for (int i = 100; i < 180; ++i) r[static_cast<std::size_t>(i)] = 4.0;
  const Gap g = widest_gap(r, 1.5, 0, r.size());
  CHECK(g.begin == 100);
  CHECK(g.end == 180);
  // Restricting the search window truncates the run.
  const Gap h = widest_gap(r, 1.5, 0, 120);
  CHECK(h.begin == 20);
  CHECK(h.size() == 30);
  // A run touching the window end is closed there.
  const Gap k = widest_gap(r, 1.5, 150, 200);
  CHECK(k.begin == 150);
  CHECK(k.end == 180);
  CHECK(widest_gap(std::vector<double>(10, 0.5), 1.5, 0, 10).size() == 0);
}

TEST_CASE("follow the gap on crafted scans") {
  FtgConfig cfg;
  SUBCASE("symmetric corridor steers straight") {
    const Action a = ftg_step(corridor_scan(), cfg);
    CHECK(a.steer == 0.0);
    CHECK(a.speed == 5.0);
  }
  SUBCASE("obstacle on the right steers left") {
    auto scan = corridor_scan();
    for (std::size_t i = 0; i < scan.size(); ++i) {
      const double b = scan.bearing(i);
      if (b > -0.35 && b < -0.02) scan.distances[i] = std::min(scan.distances[i], 2.0);
    }
    const Action a = ftg_step(scan, cfg);
    CHECK(a.steer > 0.0);
  }
  SUBCASE("two gaps of 30 and 80 beams") {
    LidarScan scan;
    scan.distances.assign(1080, 1.0);
    for (std::size_t i = 300; i < 330; ++i) scan.distances[i] = 6.0;
    for (std::size_t i = 600; i < 680; ++i) scan.distances[i] = 4.0;
    FtgConfig plain = cfg;
    plain.disparity_pad = 0.0;
    const Action a = ftg_step(scan, plain);
    // Furthest return of the 80-beam gap is tied across it: middle beam 639.
    CHECK(a.steer == doctest::Approx(std::clamp(scan.bearing(639), -cfg.max_steer, cfg.max_steer)));
    CHECK(a.steer > 0.0);
  }
  SUBCASE("no gap gives the emergency action") {
    LidarScan scan;
    scan.distances.assign(1080, 1.2);
    const Action a = ftg_step(scan, cfg);
    CHECK(a.steer == 0.0);
    CHECK(a.speed == 0.0);
  }
}

TEST_CASE("follow the gap is stateless and bounded") {
  std::mt19937_64 rng(5);
  FtgConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    LidarScan scan;
    scan.distances.resize(1080);
    for (auto& d : scan.distances) d = lmr::testing::uniform(rng, 0.2, 30.0);
    const Action a = ftg_step(scan, cfg);
    const Action b = ftg_step(scan, cfg);
    CHECK(a == b);
    CHECK(std::abs(a.steer) <= cfg.max_steer);
  }
}

TEST_CASE("follow the gap speed map and validation") {
  FtgConfig cfg;
  CHECK(cfg.speed_for(0.0) == 5.0);
  CHECK(cfg.speed_for(-0.15) == 3.0);
  CHECK(cfg.speed_for(0.3) == 1.5);
  FtgConfig bad = cfg;
  bad.speed_bands = {{0.1, 3.0}, {0.25, 5.0}};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.bubble_radius = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
