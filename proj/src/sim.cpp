#include "lmr/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>

#include "lmr/error.hpp"

namespace lmr {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::lap_complete: return "lap_complete";
    case Outcome::collision: return "collision";
    case Outcome::timeout: return "timeout";
    case Outcome::planner_failure: return "planner_failure";
  }
  return "unknown";
}

std::size_t EpisodeTrace::fallback_count() const {
  return static_cast<std::size_t>(std::count_if(plans.begin(), plans.end(), [](const PlanSample& p) { return p.fallback; }));
}

namespace {

class Fnv1a {
 public:
  void add(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) { add(&v, sizeof v); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::uint64_t EpisodeTrace::hash() const {
  Fnv1a h;
  for (const auto& s : states) {
    for (const double v : {s.t, s.x, s.y, s.theta, s.v, s.delta, s.action_v, s.action_delta}) h.add(v);
  }
  for (const auto& p : plans) {
    h.add(p.t);
    h.add(p.action.steer);
    h.add(p.action.speed);
    h.add(&p.fallback, sizeof p.fallback);
  }
  h.add(&outcome, sizeof outcome);
  h.add(lap_time);
  h.add(event_point.x());
  h.add(event_point.y());
  return h.value();
}

VehicleState step_dynamics(const VehicleState& state, const Action& action, double dt, const VehicleLimits& limits) {
  VehicleState next = state;
  const double steer_cmd = std::clamp(action.steer, -limits.max_steer, limits.max_steer);
  const double speed_cmd = std::clamp(action.speed, 0.0, limits.v_max);
  const double max_dsteer = limits.max_steer_rate * dt;
  const double max_dspeed = limits.a_long_max * dt;
  next.steer = state.steer + std::clamp(steer_cmd - state.steer, -max_dsteer, max_dsteer);
  next.speed = state.speed + std::clamp(speed_cmd - state.speed, -max_dspeed, max_dspeed);
  const double th = state.pose.heading;
  next.pose = Pose(state.pose.x + dt * next.speed * std::cos(th), state.pose.y + dt * next.speed * std::sin(th),
                   th + dt * next.speed * std::tan(next.steer) / limits.wheelbase);
  next.time = state.time + dt;
  return next;
}

Action fallback_action(const std::optional<Action>& last_good) {
  if (!last_good) return {0.0, 1.0};
  return {last_good->steer, std::max(1.0, 0.7 * last_good->speed)};
}

Pose random_start(const Track& track, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  const auto& c = track.centreline;
  const auto s_cum = cumulative_arc_length(c.points, c.closed);
  const double s = u * s_cum.back();
  const Vec2 p = point_at_arc_length(c.points, s_cum, s, c.closed);
  const Vec2 ahead = point_at_arc_length(c.points, s_cum, std::min(s + 0.05, c.closed ? s + 0.05 : s_cum.back()), c.closed);
  const Vec2 behind = point_at_arc_length(c.points, s_cum, std::max(s - 0.05, c.closed ? s - 0.05 : 0.0), c.closed);
  const Vec2 t = ahead - behind;
  return Pose(p.x(), p.y(), std::atan2(t.y(), t.x()));
}

namespace {

// Visited-bin bookkeeping along the centreline.
class Coverage {
 public:
  explicit Coverage(const CentrelineDescription& line) : line_(line), visited_(line.points.size(), false) {}

  void update(const Vec2& p) {
    const std::size_t n = line_.points.size();
    std::size_t best = last_;
    double best_d = std::numeric_limits<double>::infinity();
    if (!initialised_) {
      for (std::size_t i = 0; i < n; ++i) consider(i, p, best, best_d);
      initialised_ = true;
    } else {
      const std::size_t window = std::min<std::size_t>(n, 30);
      for (std::size_t k = 0; k <= 2 * window; ++k) {
        const long idx = static_cast<long>(last_) + static_cast<long>(k) - static_cast<long>(window);
        if (!line_.closed && (idx < 0 || idx >= static_cast<long>(n))) continue;
        consider(static_cast<std::size_t>((idx % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n)), p,
                 best, best_d);
      }
    }
    last_ = best;
    if (!visited_[best]) {
      visited_[best] = true;
      ++count_;
    }
  }

  double fraction() const { return static_cast<double>(count_) / static_cast<double>(visited_.size()); }

 private:
  void consider(std::size_t i, const Vec2& p, std::size_t& best, double& best_d) const {
    const double d = (line_.points[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }

  const CentrelineDescription& line_;
  std::vector<bool> visited_;
  std::size_t count_ = 0;
  std::size_t last_ = 0;
  bool initialised_ = false;
};

double micros_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EpisodeTrace run_episode(const Track& track, Planner& planner, const Pose& start, std::uint64_t seed,
                         const VehicleLimits& limits, const SimConfig& cfg) {
  if (track.map.disc_collides(start.position(), 0.0)) throw Error(Errc::start_in_wall, "episode start in a wall");
  EpisodeTrace trace;
  trace.planner = planner.name();
  trace.track = track.map.name();
  trace.seed = seed;
  trace.start = start;

  planner.reset();
  const LineSegment finish = track.map.crossing_line(start);
  const Vec2 forward = start.direction();
  Coverage coverage(track.centreline);
  coverage.update(start.position());

  VehicleState state;
  state.pose = start;
  Action action;
  std::optional<Action> last_good;
  const auto max_steps = static_cast<long>(std::ceil(cfg.timeout / cfg.physics_dt - 1e-9));

  for (long step = 0;; ++step) {
    if (step % cfg.steps_per_plan == 0) {
      Observation obs;
      obs.time = static_cast<double>(step) * cfg.physics_dt;
      obs.speed = state.speed;
      obs.steer = state.steer;
      if (planner.needs_scan()) obs.scan = scan(track.map, state.pose, cfg.lidar);
      if (!planner.is_mapless()) obs.pose = state.pose;

      PlanSample sample;
      sample.t = obs.time;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          planner.perceive(obs);
        } catch (...) {
          sample.perception_us = micros_since(t0);
          throw;
        }
        sample.perception_us = micros_since(t0);
        const auto t1 = std::chrono::steady_clock::now();
        try {
          action = planner.plan(obs);
        } catch (...) {
          sample.planning_us = micros_since(t1);
          throw;
        }
        sample.planning_us = micros_since(t1);
        last_good = action;
      } catch (const Error& e) {
        action = fallback_action(last_good);
        last_good = action;
        sample.fallback = true;
        sample.error = to_string(e.code());
      } catch (const std::exception& e) {
        trace.outcome = Outcome::planner_failure;
        trace.failure = e.what();
        trace.event_point = state.pose.position();
        break;
      }
      if (const auto sim_us = planner.simulated_perception_us()) sample.perception_us = *sim_us;
      sample.action = action;
      trace.plans.push_back(sample);
    }

    const VehicleState prev = state;
    state = step_dynamics(state, action, cfg.physics_dt, limits);
    state.time = static_cast<double>(step + 1) * cfg.physics_dt;
    trace.states.push_back({state.time, state.pose.x, state.pose.y, state.pose.heading, state.speed, state.steer,
                            action.speed, action.steer});

    const Vec2 pos = state.pose.position();
    if (track.map.disc_collides(pos, limits.half_width)) {
      trace.outcome = Outcome::collision;
      trace.event_point = pos;
      break;
    }
    coverage.update(pos);
    double frac = 0.0;
    const Vec2 motion = pos - prev.pose.position();
    if (coverage.fraction() >= cfg.lap_coverage && motion.dot(forward) > 0.0 &&
        segments_intersect(prev.pose.position(), pos, finish.a, finish.b, &frac)) {
      trace.outcome = Outcome::lap_complete;
      trace.lap_time = prev.time + frac * cfg.physics_dt;
      trace.event_point = pos;
      break;
    }
    if (step + 1 >= max_steps) {
      trace.outcome = Outcome::timeout;
      trace.event_point = pos;
      break;
    }
  }
  trace.coverage = coverage.fraction();
  return trace;
}

void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "t,x,y,theta,v,delta,action_v,action_delta\n" << std::setprecision(10);
  for (const auto& s : trace.states) {
    out << s.t << ',' << s.x << ',' << s.y << ',' << s.theta << ',' << s.v << ',' << s.delta << ',' << s.action_v << ','
        << s.action_delta << '\n';
  }
}

}  // namespace lmr
