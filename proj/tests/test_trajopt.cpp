#include "doctest.h"

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "lmr/error.hpp"
#include "lmr/trajopt.hpp"
#include "test_support.hpp"

using namespace lmr;
using lmr::testing::builtin;
using lmr::testing::uniform;

namespace {

// Heading change over mean segment length at point i of a closed loop,
// evaluated exactly (no linearisation).
double exact_kappa(const Polyline& c, const std::vector<Vec2>& nrm, const std::vector<double>& a, std::size_t i) {
  const std::size_t n = c.size();
  const std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
  const Vec2 pm = c[im] + a[im] * nrm[im];
  const Vec2 p = c[i] + a[i] * nrm[i];
  const Vec2 pp = c[ip] + a[ip] * nrm[ip];
  const Vec2 u = p - pm, v = pp - p;
  const double turn = std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
  return turn / (0.5 * (u.norm() + v.norm()));
}

// Linearisation of exact_kappa about zero offsets by central differences.
double kappa_at(const Polyline& c, const std::vector<Vec2>& nrm, const std::vector<double>& a, std::size_t i) {
  const std::size_t n = c.size();
  std::vector<double> z(n, 0.0);
  double k = exact_kappa(c, nrm, z, i);
  const double h = 1e-6;
  for (const std::size_t j : {(i + n - 1) % n, i, (i + 1) % n}) {
    z[j] = h;
    const double up = exact_kappa(c, nrm, z, i);
    z[j] = -h;
    const double dn = exact_kappa(c, nrm, z, i);
    z[j] = 0.0;
    k += (up - dn) / (2 * h) * a[j];
  }
  return k;
}

std::vector<Vec2> loop_normals(const Polyline& c) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec2 t = (c[(i + 1) % c.size()] - c[(i + c.size() - 1) % c.size()]).normalized();
    out.emplace_back(-t.y(), t.x());
  }
  return out;
}

// Exact minimum over the offset grid by dynamic programming on consecutive
// offset pairs (every grid combination is covered).
double grid_minimum(const Polyline& c, const std::vector<double>& grid) {
  const std::size_t n = c.size();
  const std::size_t g = grid.size();
  const auto nrm = loop_normals(c);
  std::vector<double> a(n, 0.0);
  auto term = [&](std::size_t i, std::size_t gm, std::size_t g0, std::size_t gp) {
    a[(i + n - 1) % n] = grid[gm];
    a[i] = grid[g0];
    a[(i + 1) % n] = grid[gp];
    const double k = kappa_at(c, nrm, a, i);
    return k * k;
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g0 = 0; g0 < g; ++g0) {
    for (std::size_t g1 = 0; g1 < g; ++g1) {
      // cost[prev][cur] after fixing offsets up to index i
      std::vector<double> cost(g * g, std::numeric_limits<double>::infinity());
      cost[g0 * g + g1] = 0.0;
      for (std::size_t i = 1; i + 1 < n; ++i) {
        std::vector<double> next(g * g, std::numeric_limits<double>::infinity());
        for (std::size_t pm = 0; pm < g; ++pm) {
          for (std::size_t p0 = 0; p0 < g; ++p0) {
            const double base = cost[pm * g + p0];
            if (!std::isfinite(base)) continue;
            for (std::size_t pp = 0; pp < g; ++pp) {
              const double v = base + term(i, pm, p0, pp);
              next[p0 * g + pp] = std::min(next[p0 * g + pp], v);
            }
          }
        }
        cost.swap(next);
      }
      for (std::size_t pm = 0; pm < g; ++pm) {
        for (std::size_t p0 = 0; p0 < g; ++p0) {
          const double base = cost[pm * g + p0];
          if (!std::isfinite(base)) continue;
          best = std::min(best, base + term(n - 1, pm, p0, g0) + term(0, p0, g0, g1));
        }
      }
    }
  }
  return best;
}

CentrelineDescription coarse_loop(std::mt19937_64& rng) {
  CentrelineDescription c;
  c.closed = true;
  const double r0 = uniform(rng, 5.0, 8.0);
  const double amp = uniform(rng, 0.5, 2.0);
  const int lobes = 2 + static_cast<int>(uniform(rng, 0.0, 2.0));
  const double phase = uniform(rng, 0.0, 2.0 * M_PI);
  const double stretch = uniform(rng, 1.0, 1.6);
  for (int i = 0; i < 12; ++i) {
    const double th = 2.0 * M_PI * i / 12.0;
    const double r = r0 + amp * std::sin(lobes * th + phase);
    c.points.emplace_back(stretch * r * std::cos(th), r * std::sin(th));
    c.widths_left.push_back(1.0);
    c.widths_right.push_back(1.0);
  }
  return c;
}

LocalMap straight_map(double y, double x0, double x1, double w) {
  LocalMap m;
  for (double x = x0; x <= x1 + 1e-9; x += 0.2) {
    m.points.emplace_back(x, y);
    m.widths_left.push_back(w);
    m.widths_right.push_back(w);
    m.normals.emplace_back(0.0, 1.0);
    m.both_visible.push_back(true);
  }
  m.s = cumulative_arc_length(m.points);
  m.matched_length = m.length();
  return m;
}

bool legal(const Trajectory& t, const VehicleLimits& lim) {
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (t.speed[i] * t.speed[i] * std::abs(t.curvature[i]) > lim.a_lat_max * (1 + 1e-6)) return false;
    if (t.speed[i] > lim.v_max * (1 + 1e-12)) return false;
    if (i + 1 < n || t.closed) {
      const std::size_t j = (i + 1) % n;
      const double ds = (t.points[j] - t.points[i]).norm();
      if (std::abs(t.speed[j] * t.speed[j] - t.speed[i] * t.speed[i]) / (2 * ds) > lim.a_long_max * (1 + 1e-6)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("straight corridor needs no offsets") {
  const auto& track = builtin("corridor");
  const auto r = min_curvature_path(track.centreline, VehicleLimits{});
  for (const double a : r.offsets) CHECK(std::abs(a) < 1e-9);
  CHECK(r.objective <= 1e-9);
}

TEST_CASE("annulus raceline hugs the outside") {
  const auto& track = builtin("annulus");
  const VehicleLimits lim;
  const auto r = min_curvature_path(track.centreline, lim);
  const auto kappa = circumcircle_curvatures(r.path, true);
  double kmax = 0.0;
  for (const double k : kappa) kmax = std::max(kmax, std::abs(k));
  CHECK(kmax < 0.2);
  CHECK(r.objective <= r.centreline_objective);
  for (std::size_t i = 0; i < r.offsets.size(); ++i) {
    CHECK(r.offsets[i] <= track.centreline.widths_left[i] - lim.half_width + 1e-6);
    CHECK(-r.offsets[i] <= track.centreline.widths_right[i] - lim.half_width + 1e-6);
  }
}

TEST_CASE("QP matches grid enumeration on coarse loops") {
  std::mt19937_64 rng(11);
  const std::vector<double> grid{-0.85, -0.4, 0.0, 0.4, 0.85};
  for (int k = 0; k < 5; ++k) {
    const auto c = coarse_loop(rng);
    const auto r = min_curvature_path(c, VehicleLimits{});
    const double brute = grid_minimum(c.points, grid);
    CHECK(r.objective <= r.centreline_objective);
    CHECK(r.objective <= brute * 1.02);
    // The continuous optimum can only beat the grid.
    CHECK(r.objective <= brute + 1e-9);
  }
  // Annulus coarsened to 12 points.
  const auto& ann = builtin("annulus").centreline;
  CentrelineDescription c;
  c.closed = true;
  for (std::size_t i = 0; i < 12; ++i) {
    c.points.push_back(ann.points[i * ann.points.size() / 12]);
    c.widths_left.push_back(1.0);
    c.widths_right.push_back(1.0);
  }
  const auto r = min_curvature_path(c, VehicleLimits{});
  CHECK(r.objective <= grid_minimum(c.points, grid) + 1e-9);
}

TEST_CASE("anchored local plan starts at the vehicle") {
  const auto m = straight_map(-0.3, -1.0, 10.0, 1.0);
  const auto t = plan_local_trajectory(m, 2.0, VehicleLimits{});
  CHECK(std::abs(t.points[0].x()) < 1e-12);
  CHECK(std::abs(t.points[0].y()) < 1e-12);
  // Initial heading matched: the second point is straight ahead.
  CHECK(std::abs(t.points[1].y()) < 1e-9);
}

TEST_CASE("invalid inputs") {
  CentrelineDescription narrow;
  for (int i = 0; i < 10; ++i) {
    narrow.points.emplace_back(i * 0.2, 0.0);
    narrow.widths_left.push_back(0.1);
    narrow.widths_right.push_back(0.1);
  }
  try {
    min_curvature_path(narrow, VehicleLimits{});
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::infeasible);
  }
  narrow.points.resize(4);
  narrow.widths_left.resize(4);
  narrow.widths_right.resize(4);
  CHECK_THROWS_AS(min_curvature_path(narrow, VehicleLimits{}), Error);

  // Vehicle past the end of the map: nothing left to plan over.
  const auto m = straight_map(0.0, -3.0, -0.2, 1.0);
  try {
    plan_local_trajectory(m, 0.0, VehicleLimits{});
    FAIL("expected empty trajectory");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_trajectory);
  }
}

TEST_CASE("speed profile formula examples") {
  VehicleLimits lim;
  std::vector<double> ds(9, 0.2);
  const auto flat = speed_profile(ds, std::vector<double>(10, 0.0), lim, 8.0, std::nullopt, false);
  for (const double v : flat) CHECK(v == 8.0);

  lim.a_lat_max = 7.85;
  const auto capped = speed_profile(ds, std::vector<double>(10, 0.5), lim, 8.0, std::nullopt, false);
  for (const double v : capped) CHECK(v == doctest::Approx(std::sqrt(7.85 / 0.5)));
  CHECK(capped[0] == doctest::Approx(3.96).epsilon(1e-3));

  const auto launch = speed_profile(ds, std::vector<double>(10, 0.0), VehicleLimits{}, 0.0, std::nullopt, false);
  CHECK(launch[0] == 0.0);
  CHECK(launch[1] == doctest::Approx(std::sqrt(2 * 4 * 0.2)));
  CHECK(launch[1] == doctest::Approx(1.265).epsilon(1e-3));

  CHECK(TerminalRule{}.speed(VehicleLimits{}) == 8.0);
  CHECK(TerminalRule{2.0, 2.0}.speed(VehicleLimits{}) == doctest::Approx(std::sqrt(20.0)));
}

TEST_CASE("randomised profiles respect both constraint families") {
  std::mt19937_64 rng(5);
  const VehicleLimits lim;
  for (int k = 0; k < 200; ++k) {
    const bool closed = k % 2 == 1;
    const std::size_t n = 20 + static_cast<std::size_t>(uniform(rng, 0, 200));
    std::vector<double> kappa(n), ds(closed ? n : n - 1);
    for (auto& x : kappa) x = uniform(rng, -1.5, 1.5) * (uniform(rng, 0, 1) < 0.3 ? 1.0 : 0.05);
    for (auto& x : ds) x = uniform(rng, 0.05, 0.5);
    const double v0 = uniform(rng, 0.0, 8.0);
    const auto v = speed_profile(ds, kappa, lim, v0, std::optional(uniform(rng, 0.0, 8.0)), closed);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(v[i] * v[i] * std::abs(kappa[i]) <= lim.a_lat_max * (1 + 1e-6));
      CHECK(v[i] <= lim.v_max);
      CHECK(v[i] >= 0.0);
      if (i + 1 < n || closed) {
        const std::size_t j = (i + 1) % n;
        CHECK(std::abs(v[j] * v[j] - v[i] * v[i]) / (2 * ds[i]) <= lim.a_long_max * (1 + 1e-6));
      }
    }
  }
}

TEST_CASE("corridor local plan follows the closed-form straight profile") {
  const auto m = straight_map(0.0, -1.0, 20.0, 1.0);
  LocalPlanConfig cfg;
  cfg.terminal = TerminalRule{2.0, 2.0};
  cfg.start_lead = 0.0;
  const VehicleLimits lim;
  const auto t = plan_local_trajectory(m, 0.0, lim, cfg);
  const double v_end = std::sqrt(4.0 + 2.0 * lim.a_long_max * 2.0);
  const double len = t.s.back();
  double vmax_seen = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::abs(t.points[i].y()) < 1e-9);
    const double up = std::sqrt(2.0 * lim.a_long_max * t.s[i]);
    const double down = std::sqrt(v_end * v_end + 2.0 * lim.a_long_max * (len - t.s[i]));
    CHECK(t.speed[i] == doctest::Approx(std::min({lim.v_max, up, down})).epsilon(1e-9));
    vmax_seen = std::max(vmax_seen, t.speed[i]);
  }
  CHECK(vmax_seen == lim.v_max);
  CHECK(t.speed.back() == doctest::Approx(v_end));
}

TEST_CASE("global plans are legal and periodic") {
  const VehicleLimits lim;
  for (const char* name : {"annulus", "rounded_rect", "waypoint_loop"}) {
    CAPTURE(std::string(name));
    const auto& track = builtin(name);
    const auto t = plan_global_trajectory(track.centreline, lim);
    CHECK(t.closed);
    CHECK(legal(t, lim));
    const auto kappa = circumcircle_curvatures(t.points, true);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.curvature[i] == kappa[i]);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.s[i] > t.s[i - 1]);
    for (const double v : t.speed) CHECK(v > 0.0);
    const auto base = centreline_trajectory(track.centreline, lim);
    CHECK(legal(base, lim));
  }
}
