#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "lmr/error.hpp"
#include "lmr/image_io.hpp"
#include "lmr/track.hpp"
#include "test_support.hpp"

using namespace lmr;
using lmr::testing::builtin;
using lmr::testing::TempDir;
using lmr::testing::uniform;

namespace {

Errc error_code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected lmr::Error");
  return Errc::invalid_argument;
}

void write_map(const std::filesystem::path& image, const GrayImage& img, const std::string& meta) {
  write_pgm(image, img);
  std::ofstream(sidecar_path(image)) << meta;
}

// Exact entry distance of a ray into an axis-aligned box, or +inf.
double ray_box(const Vec2& o, const Vec2& d, const Vec2& lo, const Vec2& hi) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < lo[k] || o[k] > hi[k]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double a = (lo[k] - o[k]) / d[k], b = (hi[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t0 <= t1 ? t0 : std::numeric_limits<double>::infinity();
}

// Brute force over every occupied cell (and the out-of-grid region).
double brute_force_ray(const TrackMap& map, const Vec2& o, double bearing, double max_range) {
  const Vec2 d(std::cos(bearing), std::sin(bearing));
  const double res = map.resolution();
  double best = max_range;
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      if (!map.occupied(r, c)) continue;
      const Vec2 lo = map.origin() + Vec2(c * res, r * res);
      best = std::min(best, ray_box(o, d, lo, lo + Vec2(res, res)));
    }
  }
  // Leaving the grid counts as a hit.
  const Vec2 lo = map.origin(), hi = map.origin() + map.extent();
  double exit = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (d[k] > 0) exit = std::min(exit, (hi[k] - o[k]) / d[k]);
    if (d[k] < 0) exit = std::min(exit, (lo[k] - o[k]) / d[k]);
  }
  return std::min(best, exit);
}

// Exact distance from a point inside the annulus to its walls along a ray.
double annulus_ray(const Vec2& o, double bearing, double r_in, double r_out) {
  const Vec2 d(std::cos(bearing), std::sin(bearing));
  const double b = o.dot(d);
  double best = std::numeric_limits<double>::infinity();
  for (double r : {r_in, r_out}) {
    const double disc = b * b - (o.squaredNorm() - r * r);
    if (disc < 0.0) continue;
    for (double t : {-b - std::sqrt(disc), -b + std::sqrt(disc)}) {
      if (t > 1e-12) best = std::min(best, t);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("load_track: 3x3 all-free image scales by resolution") {
  TempDir dir("track");
  GrayImage img{3, 3, std::vector<std::uint8_t>(9, 255)};
  write_map(dir.path() / "tiny.pgm", img,
            "resolution = 0.05\norigin_x = 0\norigin_y = 0\nstart_x = 0.07\nstart_y = 0.07\n"
            "start_heading = 0\noccupied_thresh = 0.45\n");
  const TrackMap map = load_track(dir.path() / "tiny.pgm");
  CHECK(map.rows() == 3);
  CHECK(map.cols() == 3);
  CHECK(map.free_cell_count() == 9);
  CHECK(map.extent().x() == doctest::Approx(0.15));
  CHECK(map.extent().y() == doctest::Approx(0.15));
  CHECK(map.name() == "tiny");
}

TEST_CASE("load_track: each failure has its own error code") {
  TempDir dir("track_err");
  GrayImage img{4, 3, std::vector<std::uint8_t>(12, 255)};
  const std::string good =
      "resolution = 0.05\norigin_x = 0\norigin_y = 0\nstart_x = 0.025\nstart_y = 0.025\nstart_heading = 0\n";

  CHECK(error_code_of([&] { load_track(dir.path() / "absent.pgm"); }) == Errc::missing_file);

  write_pgm(dir.path() / "nometa.pgm", img);
  CHECK(error_code_of([&] { load_track(dir.path() / "nometa.pgm"); }) == Errc::missing_file);

  write_map(dir.path() / "badmeta.pgm", img, "resolution = 0.05\norigin_x = zero\n");
  CHECK(error_code_of([&] { load_track(dir.path() / "badmeta.pgm"); }) == Errc::malformed_metadata);

  write_map(dir.path() / "negres.pgm", img,
            "resolution = -1\norigin_x = 0\norigin_y = 0\nstart_x = 0.025\nstart_y = 0.07\nstart_heading = 0\n");
  CHECK(error_code_of([&] { load_track(dir.path() / "negres.pgm"); }) == Errc::malformed_metadata);

  // Column 1 is a wall splitting the free space in two; image row 0 is the top.
  GrayImage split = img;
  for (int r = 0; r < 3; ++r) split.pixels[static_cast<std::size_t>(r * 4 + 1)] = 0;
  write_map(dir.path() / "split.pgm", split, good);
  CHECK(error_code_of([&] { load_track(dir.path() / "split.pgm"); }) == Errc::disconnected_free_space);

  // Bottom-left pixel (world cell 0,0) is a wall and the start pose sits in it.
  GrayImage walled = img;
  walled.pixels[8] = 0;
  write_map(dir.path() / "walled.pgm", walled, good);
  CHECK(error_code_of([&] { load_track(dir.path() / "walled.pgm"); }) == Errc::start_in_wall);
}

TEST_CASE("occupancy threshold is a fraction of full scale") {
  TempDir dir("thresh");
  GrayImage img{3, 1, {255, 114, 115}};
  write_map(dir.path() / "t.pgm", img,
            "resolution = 1\norigin_x = 0\norigin_y = 0\nstart_x = 0.5\nstart_y = 0.5\n"
            "start_heading = 0\noccupied_thresh = 0.45\n");
  // 0.45 * 255 = 114.75: 114 is occupied, 115 free, so free space is split.
  CHECK(error_code_of([&] { load_track(dir.path() / "t.pgm"); }) == Errc::disconnected_free_space);
}

TEST_CASE("generated maps round-trip through save/load bit-identically") {
  TempDir dir("roundtrip");
  for (const auto& name : builtin_track_names()) {
    const Track& t = builtin(name);
    const auto image = dir.path() / (name + ".pgm");
    save_track_bundle(t, image);
    const Track back = load_track_bundle(image);
    CHECK(back.map == t.map);
    CHECK(back.centreline.closed == t.centreline.closed);
    REQUIRE(back.centreline.size() == t.centreline.size());
    for (std::size_t i = 0; i < t.centreline.size(); ++i) {
      CHECK(back.centreline.points[i] == t.centreline.points[i]);
      CHECK(back.centreline.widths_left[i] == t.centreline.widths_left[i]);
    }
  }
}

TEST_CASE("generate_track: corridor centreline follows the axis") {
  const Track& t = builtin("corridor");
  CHECK_FALSE(t.centreline.closed);
  CHECK(t.centreline.length() == doctest::Approx(20.0));
  for (std::size_t i = 0; i < t.centreline.size(); ++i) {
    CHECK(t.centreline.points[i].y() == 0.0);
    CHECK(t.centreline.widths_left[i] == doctest::Approx(1.0));
    CHECK(t.centreline.widths_right[i] == doctest::Approx(1.0));
  }
}

TEST_CASE("generate_track: annulus centreline curvature is 1/radius") {
  const Track& t = builtin("annulus");
  CHECK(t.centreline.closed);
  for (double k : circumcircle_curvatures(t.centreline.points, true)) CHECK(k == doctest::Approx(0.2).epsilon(1e-3));
}

TEST_CASE("generate_track: centreline and width offsets lie in free space") {
  for (const auto& name : builtin_track_names()) {
    const Track& t = builtin(name);
    const double res = t.map.resolution();
    const auto tangents = central_difference_tangents(t.centreline.points, t.centreline.closed);
    const std::size_t n = t.centreline.size();
    // The corridor's end caps are walls, so only its interior stations are checked.
    const std::size_t skip = t.centreline.closed ? 0 : 1;
    for (std::size_t i = skip; i + skip < n; ++i) {
      const Vec2& c = t.centreline.points[i];
      const Vec2 nrm = left_normal(tangents[i]);
      CHECK_FALSE(t.map.occupied_at(c));
      CHECK_FALSE(t.map.occupied_at(c + nrm * (t.centreline.widths_left[i] - res)));
      CHECK_FALSE(t.map.occupied_at(c - nrm * (t.centreline.widths_right[i] - res)));
    }
    // Spacing is near-uniform.
    const auto s = cumulative_arc_length(t.centreline.points, t.centreline.closed);
    double lo = 1e9, hi = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      lo = std::min(lo, s[i] - s[i - 1]);
      hi = std::max(hi, s[i] - s[i - 1]);
    }
    CHECK(hi / lo <= 1.5);
  }
}

TEST_CASE("generate_track: waypoint loop is closed and connected") {
  const Track& t = builtin("waypoint_loop");
  CHECK(t.centreline.closed);
  CHECK(t.centreline.length() > 60.0);
  // TrackMap's constructor flood-fills; count free cells against the band area as a cross-check.
  const double band_area = t.centreline.length() * 2.0;
  const double free_area = static_cast<double>(t.map.free_cell_count()) * 0.05 * 0.05;
  CHECK(free_area == doctest::Approx(band_area).epsilon(0.03));
}

TEST_CASE("generate_track: invalid shapes") {
  CHECK(error_code_of([] { generate_track(CorridorShape{20.0, 0.08}, 0.05); }) == Errc::width_too_small);
  WaypointLoopShape bow;
  bow.width = 1.0;
  bow.control_points = {{0, 0}, {10, 10}, {10, 0}, {0, 10}};  // figure eight
  CHECK(error_code_of([&] { generate_track(bow, 0.05); }) == Errc::self_intersecting);
}

TEST_CASE("cast_ray: corridor analytic distances") {
  const Track& t = builtin("corridor");
  const double diag = t.map.resolution() * std::sqrt(2.0);
  const Vec2 o(5.0, 0.0);
  CHECK(std::abs(cast_ray(t.map, o, 0.5 * std::numbers::pi, 30.0) - 1.0) <= diag);
  CHECK(std::abs(cast_ray(t.map, o, -0.5 * std::numbers::pi, 30.0) - 1.0) <= diag);
  CHECK(cast_ray(t.map, Vec2(1.0, 0.0), 0.0, 10.0) == 10.0);
  CHECK(cast_ray(t.map, o, 0.3, 30.0) == cast_ray(t.map, o, 0.3, 30.0));
  CHECK(error_code_of([&] { cast_ray(t.map, Vec2(5.0, 1.5), 0.0, 10.0); }) == Errc::origin_in_wall);
}

TEST_CASE("cast_ray: monotone in max_range") {
  const Track& t = builtin("annulus");
  const Vec2 o(0.0, -5.0);
  double prev = 0.0;
  for (double r : {0.1, 0.5, 1.0, 2.0, 5.0, 30.0}) {
    const double d = cast_ray(t.map, o, 0.4, r);
    CHECK(d >= prev);
    CHECK(d <= r);
    prev = d;
  }
}

TEST_CASE("cast_ray agrees with exact geometry within a cell diagonal") {
  std::mt19937_64 rng(7);
  {
    const Track& t = builtin("annulus");
    const double diag = t.map.resolution() * std::sqrt(2.0);
    int checked = 0, close = 0;
    while (checked < 1000) {
      const double ang = uniform(rng, -std::numbers::pi, std::numbers::pi);
      const double rad = uniform(rng, 4.1, 5.9);
      const Vec2 o(rad * std::cos(ang), rad * std::sin(ang));
      if (t.map.occupied_at(o)) continue;
      const double b = uniform(rng, -std::numbers::pi, std::numbers::pi);
      // Grazing rays make along-ray error unbounded for any raster, so agreement
      // is checked on hit points: the raster hit lies within a diagonal of the
      // exact wall, and the exact hit lies within a diagonal of an occupied cell.
      const double exact = annulus_ray(o, b, 4.0, 6.0);
      const double d = cast_ray(t.map, o, b, 30.0);
      const Vec2 dir(std::cos(b), std::sin(b));
      const Vec2 hit = o + d * dir;
      CHECK(std::min(std::abs(hit.norm() - 4.0), std::abs(hit.norm() - 6.0)) <= diag);
      CHECK(t.map.disc_collides(o + exact * dir, diag));
      if (std::abs(d - exact) <= diag) ++close;
      ++checked;
    }
    CHECK(close >= 900);
  }
  {
    const Track& t = builtin("corridor");
    const double diag = t.map.resolution() * std::sqrt(2.0);
    for (int k = 0; k < 1000; ++k) {
      const Vec2 o(uniform(rng, 0.1, 19.9), uniform(rng, -0.9, 0.9));
      const double b = uniform(rng, -std::numbers::pi, std::numbers::pi);
      const Vec2 d(std::cos(b), std::sin(b));
      double exact = std::numeric_limits<double>::infinity();
      if (d.x() > 0) exact = std::min(exact, (20.0 - o.x()) / d.x());
      if (d.x() < 0) exact = std::min(exact, -o.x() / d.x());
      if (d.y() > 0) exact = std::min(exact, (1.0 - o.y()) / d.y());
      if (d.y() < 0) exact = std::min(exact, (-1.0 - o.y()) / d.y());
      CHECK(std::abs(cast_ray(t.map, o, b, 30.0) - std::min(exact, 30.0)) <= diag);
    }
  }
}

TEST_CASE("cast_ray matches a brute-force ray/cell intersection") {
  std::mt19937_64 rng(11);
  const Track& t = builtin("waypoint_loop");
  int checked = 0;
  while (checked < 25) {
    const auto& c = t.centreline.points[static_cast<std::size_t>(uniform(rng, 0, t.centreline.size() - 1))];
    const Vec2 o = c + Vec2(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
    if (t.map.occupied_at(o)) continue;
    const double b = uniform(rng, -std::numbers::pi, std::numbers::pi);
    CHECK(cast_ray(t.map, o, b, 30.0) == doctest::Approx(brute_force_ray(t.map, o, b, 30.0)).epsilon(1e-9));
    ++checked;
  }
}

TEST_CASE("scan: beam bearings and analytic distances") {
  const Track& t = builtin("corridor");
  LidarScan s = scan(t.map, Pose(15.0, 0.0, 0.0), 1080, 4.7, 30.0);
  REQUIRE(s.size() == 1080);
  CHECK(s.bearing(0) == doctest::Approx(-2.35));
  CHECK(s.bearing(540) == doctest::Approx(0.0));
  CHECK(std::abs(s.distances[540] - 5.0) <= 0.05 * std::sqrt(2.0));

  const LidarScan blind = scan(t.map, Pose(10.0, 0.0, 0.0), 64, 4.7, 0.5);
  for (double d : blind.distances) CHECK(d == 0.5);

  CHECK(error_code_of([&] { scan(t.map, Pose(10.0, 3.0, 0.0), 64, 4.7, 30.0); }) == Errc::origin_in_wall);
  CHECK(error_code_of([&] { scan(t.map, Pose(10.0, 0.0, 0.0), 1, 4.7, 30.0); }) == Errc::invalid_argument);
}
