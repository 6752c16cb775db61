#include "lmr/track.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lmr/error.hpp"
#include "lmr/image_io.hpp"

namespace lmr {
namespace {

constexpr double kCentrelineSpacing = 0.1;
constexpr double kRasterSpacing = 0.02;
constexpr double kMapMargin = 0.5;

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// 4-connected flood fill from the first free cell; true if it reaches every free cell.
bool free_space_connected(int rows, int cols, const std::vector<std::uint8_t>& grid) {
  const auto n = grid.size();
  std::size_t first = n;
  std::size_t free_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid[i] == 0) {
      ++free_total;
      if (first == n) first = i;
    }
  }
  if (free_total == 0) return false;
  std::vector<std::uint8_t> seen(n, 0);
  std::deque<std::size_t> queue{first};
  seen[first] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    const std::size_t idx = queue.front();
    queue.pop_front();
    ++reached;
    const int r = static_cast<int>(idx / static_cast<std::size_t>(cols));
    const int c = static_cast<int>(idx % static_cast<std::size_t>(cols));
    const int dr[4] = {1, -1, 0, 0};
    const int dc[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int rr = r + dr[k], cc = c + dc[k];
      if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
      const std::size_t j = static_cast<std::size_t>(rr) * static_cast<std::size_t>(cols) +
                            static_cast<std::size_t>(cc);
      if (grid[j] == 0 && !seen[j]) {
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return reached == free_total;
}

Polyline close_and_resample(const Polyline& dense_closed, double spacing) {
  Polyline ring = dense_closed;
  ring.push_back(dense_closed.front());
  const double len = arc_length(ring);
  const auto n = static_cast<std::size_t>(std::max(3.0, std::round(len / spacing)));
  Polyline out = resample_uniform(ring, n);
  out.pop_back();
  return out;
}

// Centripetal Catmull-Rom (Barry-Goldman form) through a closed control polygon.
Polyline catmull_rom_loop(const Polyline& ctrl, int samples_per_span) {
  const std::size_t n = ctrl.size();
  Polyline out;
  auto knot = [](double t, const Vec2& a, const Vec2& b) {
    return t + std::sqrt(std::max((b - a).norm(), 1e-12));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p0 = ctrl[(i + n - 1) % n];
    const Vec2& p1 = ctrl[i];
    const Vec2& p2 = ctrl[(i + 1) % n];
    const Vec2& p3 = ctrl[(i + 2) % n];
    const double t0 = 0.0, t1 = knot(t0, p0, p1), t2 = knot(t1, p1, p2), t3 = knot(t2, p2, p3);
    for (int k = 0; k < samples_per_span; ++k) {
      const double t = t1 + (t2 - t1) * static_cast<double>(k) / samples_per_span;
      const Vec2 a1 = (t1 - t) / (t1 - t0) * p0 + (t - t0) / (t1 - t0) * p1;
      const Vec2 a2 = (t2 - t) / (t2 - t1) * p1 + (t - t1) / (t2 - t1) * p2;
      const Vec2 a3 = (t3 - t) / (t3 - t2) * p2 + (t - t2) / (t3 - t2) * p3;
      const Vec2 b1 = (t2 - t) / (t2 - t0) * a1 + (t - t0) / (t2 - t0) * a2;
      const Vec2 b2 = (t3 - t) / (t3 - t1) * a2 + (t - t1) / (t3 - t1) * a3;
      out.push_back((t2 - t) / (t2 - t1) * b1 + (t - t1) / (t2 - t1) * b2);
    }
  }
  return out;
}

Polyline rounded_rect_loop(const RoundedRectShape& s) {
  // Counter-clockwise, starting mid bottom edge, centred on the origin.
  const double hx = 0.5 * s.length, hy = 0.5 * s.height, r = s.corner_radius;
  Polyline dense;
  auto straight = [&](const Vec2& a, const Vec2& b) {
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / kRasterSpacing)));
    for (int k = 0; k < n; ++k) dense.push_back(a + (b - a) * (static_cast<double>(k) / n));
  };
  auto arc = [&](const Vec2& c, double a0) {
    const int n = std::max(2, static_cast<int>(std::ceil(0.5 * std::numbers::pi * r / kRasterSpacing)));
    for (int k = 0; k < n; ++k) {
      const double a = a0 + 0.5 * std::numbers::pi * static_cast<double>(k) / n;
      dense.push_back(c + r * Vec2(std::cos(a), std::sin(a)));
    }
  };
  const double pi = std::numbers::pi;
  straight({0.0, -hy}, {hx - r, -hy});
  arc({hx - r, -hy + r}, -0.5 * pi);
  straight({hx, -hy + r}, {hx, hy - r});
  arc({hx - r, hy - r}, 0.0);
  straight({hx - r, hy}, {-hx + r, hy});
  arc({-hx + r, hy - r}, 0.5 * pi);
  straight({-hx, hy - r}, {-hx, -hy + r});
  arc({-hx + r, -hy + r}, pi);
  straight({-hx + r, -hy}, {0.0, -hy});
  return dense;
}

void check_self_intersection(const Polyline& loop, double width, double resolution) {
  const auto kappa = circumcircle_curvatures(loop, true);
  const double min_radius = 0.5 * width + resolution;
  for (double k : kappa) {
    if (std::abs(k) > 1.0 / min_radius) {
      throw Error(Errc::self_intersecting, "centreline curvature too tight for the track width");
    }
  }
  const auto s = cumulative_arc_length(loop, true);
  const double total = s.back();
  const double min_gap = width + 2.0 * resolution;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    for (std::size_t j = i + 1; j < loop.size(); ++j) {
      const double ds = std::min(s[j] - s[i], total - (s[j] - s[i]));
      if (ds <= 2.0 * width) continue;
      if ((loop[i] - loop[j]).norm() < min_gap) {
        throw Error(Errc::self_intersecting, "track bands overlap");
      }
    }
  }
}

struct Raster {
  int rows = 0;
  int cols = 0;
  Vec2 origin = Vec2::Zero();
  std::vector<std::uint8_t> grid;
};

Raster make_raster(const Polyline& pts, double half_width, double res) {
  Vec2 lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double pad = half_width + kMapMargin;
  Raster r;
  r.origin = Vec2(std::floor((lo.x() - pad) / res) * res, std::floor((lo.y() - pad) / res) * res);
  r.cols = static_cast<int>(std::ceil((hi.x() + pad - r.origin.x()) / res));
  r.rows = static_cast<int>(std::ceil((hi.y() + pad - r.origin.y()) / res));
  r.grid.assign(static_cast<std::size_t>(r.rows) * static_cast<std::size_t>(r.cols), 1);
  return r;
}

// Marks cells whose centre lies strictly within half_width of the closed loop.
void carve_loop(Raster& r, const Polyline& dense, double half_width, double res) {
  const std::size_t n = dense.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = dense[i];
    const Vec2& b = dense[(i + 1) % n];
    const Vec2 lo = a.cwiseMin(b).array() - half_width;
    const Vec2 hi = a.cwiseMax(b).array() + half_width;
    const int c0 = std::max(0, static_cast<int>(std::floor((lo.x() - r.origin.x()) / res)));
    const int c1 = std::min(r.cols - 1, static_cast<int>(std::floor((hi.x() - r.origin.x()) / res)));
    const int r0 = std::max(0, static_cast<int>(std::floor((lo.y() - r.origin.y()) / res)));
    const int r1 = std::min(r.rows - 1, static_cast<int>(std::floor((hi.y() - r.origin.y()) / res)));
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const Vec2 c = r.origin + Vec2((col + 0.5) * res, (row + 0.5) * res);
        if (distance_to_segment(c, a, b) < half_width) {
          r.grid[static_cast<std::size_t>(row) * static_cast<std::size_t>(r.cols) +
                 static_cast<std::size_t>(col)] = 0;
        }
      }
    }
  }
}

Track loop_track(const Polyline& dense, double width, double res, std::string name) {
  check_self_intersection(close_and_resample(dense, 4.0 * kCentrelineSpacing), width, res);
  Polyline fine = close_and_resample(dense, kRasterSpacing);
  Raster raster = make_raster(fine, 0.5 * width, res);
  carve_loop(raster, fine, 0.5 * width, res);

  CentrelineDescription line;
  line.points = close_and_resample(dense, kCentrelineSpacing);
  line.widths_left.assign(line.points.size(), 0.5 * width);
  line.widths_right.assign(line.points.size(), 0.5 * width);
  line.closed = true;
  const Vec2 t = line.points[1] - line.points.back();
  const Pose start(line.points[0].x(), line.points[0].y(), std::atan2(t.y(), t.x()));
  TrackMap map(raster.rows, raster.cols, std::move(raster.grid), res, raster.origin, start,
               std::move(name));
  return Track{std::move(map), std::move(line)};
}

Track corridor_track(const CorridorShape& s, double res, std::string name) {
  const double hw = 0.5 * s.width;
  Raster raster = make_raster({Vec2(0.0, 0.0), Vec2(s.length, 0.0)}, hw, res);
  for (int row = 0; row < raster.rows; ++row) {
    for (int col = 0; col < raster.cols; ++col) {
      const Vec2 c = raster.origin + Vec2((col + 0.5) * res, (row + 0.5) * res);
      if (c.x() > 0.0 && c.x() < s.length && std::abs(c.y()) < hw) {
        raster.grid[static_cast<std::size_t>(row) * static_cast<std::size_t>(raster.cols) +
                    static_cast<std::size_t>(col)] = 0;
      }
    }
  }
  CentrelineDescription line;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round(s.length / kCentrelineSpacing)));
  for (std::size_t k = 0; k <= n; ++k) line.points.emplace_back(s.length * static_cast<double>(k) / n, 0.0);
  line.widths_left.assign(line.points.size(), hw);
  line.widths_right.assign(line.points.size(), hw);
  line.closed = false;
  const Pose start(std::min(1.0, 0.5 * s.length), 0.0, 0.0);
  TrackMap map(raster.rows, raster.cols, std::move(raster.grid), res, raster.origin, start,
               std::move(name));
  return Track{std::move(map), std::move(line)};
}

double shape_width(const TrackShape& shape) {
  return std::visit([](const auto& s) { return s.width; }, shape);
}

}  // namespace

TrackMap::TrackMap(int rows, int cols, std::vector<std::uint8_t> occupied, double resolution,
                   Vec2 origin, Pose start_pose, std::string name)
    : rows_(rows),
      cols_(cols),
      grid_(std::move(occupied)),
      resolution_(resolution),
      origin_(std::move(origin)),
      start_pose_(start_pose),
      name_(std::move(name)) {
  if (!(resolution_ > 0.0)) throw Error(Errc::malformed_metadata, "resolution must be positive");
  if (rows_ <= 0 || cols_ <= 0 ||
      grid_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_)) {
    throw Error(Errc::malformed_metadata, "grid is empty or mis-sized");
  }
  for (auto& v : grid_) v = v ? 1 : 0;
  if (occupied_at(start_pose_.position())) throw Error(Errc::start_in_wall, "start pose lies in a wall");
  if (!free_space_connected(rows_, cols_, grid_)) {
    throw Error(Errc::disconnected_free_space, "free space is not a single connected region");
  }
  start_line_ = crossing_line(start_pose_);
}

bool TrackMap::occupied_at(const Vec2& world) const {
  const Vec2 g = (world - origin_) / resolution_;
  return occupied(static_cast<int>(std::floor(g.y())), static_cast<int>(std::floor(g.x())));
}

bool TrackMap::disc_collides(const Vec2& centre, double radius) const {
  const Vec2 g = (centre - origin_) / resolution_;
  const double rg = radius / resolution_;
  const int c0 = static_cast<int>(std::floor(g.x() - rg)), c1 = static_cast<int>(std::floor(g.x() + rg));
  const int r0 = static_cast<int>(std::floor(g.y() - rg)), r1 = static_cast<int>(std::floor(g.y() + rg));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (!occupied(r, c)) continue;
      const double dx = std::max({c - g.x(), 0.0, g.x() - (c + 1)});
      const double dy = std::max({r - g.y(), 0.0, g.y() - (r + 1)});
      if (dx * dx + dy * dy < rg * rg) return true;
    }
  }
  return false;
}

std::size_t TrackMap::free_cell_count() const {
  return static_cast<std::size_t>(std::count(grid_.begin(), grid_.end(), std::uint8_t{0}));
}

LineSegment TrackMap::crossing_line(const Pose& pose) const {
  const double range = std::hypot(extent().x(), extent().y());
  const double left = cast_ray(*this, pose.position(), pose.heading + 0.5 * std::numbers::pi, range);
  const double right = cast_ray(*this, pose.position(), pose.heading - 0.5 * std::numbers::pi, range);
  const Vec2 n = left_normal(pose.direction());
  const double inset = 0.5 * resolution_;
  return LineSegment{pose.position() - n * (right + inset), pose.position() + n * (left + inset)};
}

std::vector<std::string> builtin_track_names() {
  return {"corridor", "annulus", "rounded_rect", "waypoint_loop"};
}

std::optional<TrackShape> builtin_track_shape(std::string_view name) {
  if (name == "corridor") return CorridorShape{20.0, 2.0};
  if (name == "annulus") return AnnulusShape{5.0, 2.0};
  if (name == "rounded_rect") return RoundedRectShape{24.0, 12.0, 3.0, 2.0};
  if (name == "waypoint_loop") {
    WaypointLoopShape s;
    s.width = 2.0;
    s.control_points = {
        {0.0, 0.0},   {8.0, 0.0},    {16.0, 0.0},  {24.0, 0.0},  {29.0, 1.5},  {31.0, 6.0},
        {29.0, 10.5}, {24.0, 12.0},  {18.0, 12.0}, {14.0, 9.0},  {10.0, 9.0},  {6.0, 12.0},
        {0.0, 12.0},  {-5.0, 10.5}, {-7.0, 6.0},  {-5.0, 1.5},
    };
    return s;
  }
  return std::nullopt;
}

Track generate_track(const TrackShape& shape, double resolution, std::string name) {
  if (!(resolution > 0.0)) throw Error(Errc::invalid_argument, "resolution must be positive");
  if (shape_width(shape) < 2.0 * resolution) {
    throw Error(Errc::width_too_small, "track width below two cells");
  }
  if (const auto* c = std::get_if<CorridorShape>(&shape)) {
    if (!(c->length > 0.0)) throw Error(Errc::invalid_argument, "corridor length must be positive");
    return corridor_track(*c, resolution, name.empty() ? "corridor" : std::move(name));
  }
  if (const auto* a = std::get_if<AnnulusShape>(&shape)) {
    if (a->radius <= 0.5 * a->width) throw Error(Errc::self_intersecting, "annulus radius too small");
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * a->radius / kRasterSpacing));
    Polyline dense;
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = -0.5 * std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(k) / n;
      dense.emplace_back(a->radius * std::cos(ang), a->radius * std::sin(ang));
    }
    return loop_track(dense, a->width, resolution, name.empty() ? "annulus" : std::move(name));
  }
  if (const auto* r = std::get_if<RoundedRectShape>(&shape)) {
    if (r->corner_radius <= 0.5 * r->width || 2.0 * r->corner_radius > std::min(r->length, r->height)) {
      throw Error(Errc::self_intersecting, "corner radius incompatible with the rectangle");
    }
    return loop_track(rounded_rect_loop(*r), r->width, resolution,
                      name.empty() ? "rounded_rect" : std::move(name));
  }
  const auto& w = std::get<WaypointLoopShape>(shape);
  if (w.control_points.size() < 3) throw Error(Errc::invalid_argument, "need at least 3 control points");
  return loop_track(catmull_rom_loop(w.control_points, 200), w.width, resolution,
                    name.empty() ? "waypoint_loop" : std::move(name));
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  auto p = image_path;
  p.replace_extension(".meta");
  return p;
}

std::filesystem::path centreline_path(const std::filesystem::path& image_path) {
  return image_path.parent_path() / (image_path.stem().string() + "_centreline.csv");
}

TrackMap load_track(const std::filesystem::path& image_path) {
  const GrayImage img = read_gray_image(image_path);
  const auto meta_file = sidecar_path(image_path);
  if (!std::filesystem::exists(meta_file)) {
    throw Error(Errc::missing_file, "missing sidecar " + meta_file.string());
  }
  MapMetadata meta;
  try {
    boost::property_tree::ptree tree;
    boost::property_tree::read_ini(meta_file.string(), tree);
    meta.resolution = tree.get<double>("resolution");
    meta.origin = Vec2(tree.get<double>("origin_x"), tree.get<double>("origin_y"));
    meta.start = Pose(tree.get<double>("start_x"), tree.get<double>("start_y"),
                      tree.get<double>("start_heading"));
    meta.occupied_thresh = tree.get<double>("occupied_thresh", 0.45);
  } catch (const boost::property_tree::ptree_error& e) {
    throw Error(Errc::malformed_metadata, meta_file.string() + ": " + e.what());
  }
  if (!(meta.occupied_thresh > 0.0 && meta.occupied_thresh <= 1.0)) {
    throw Error(Errc::malformed_metadata, "occupied_thresh outside (0, 1]");
  }
  const double cutoff = meta.occupied_thresh * 255.0;
  std::vector<std::uint8_t> grid(img.pixels.size());
  for (int row = 0; row < img.height; ++row) {
    const int img_row = img.height - 1 - row;  // images are stored top row first
    for (int col = 0; col < img.width; ++col) {
      grid[static_cast<std::size_t>(row) * static_cast<std::size_t>(img.width) +
           static_cast<std::size_t>(col)] = img.at(img_row, col) < cutoff ? 1 : 0;
    }
  }
  return TrackMap(img.height, img.width, std::move(grid), meta.resolution, meta.origin, meta.start,
                  image_path.stem().string());
}

void save_track(const TrackMap& map, const std::filesystem::path& image_path) {
  GrayImage img;
  img.width = map.cols();
  img.height = map.rows();
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  for (int row = 0; row < map.rows(); ++row) {
    const int img_row = map.rows() - 1 - row;
    for (int col = 0; col < map.cols(); ++col) {
      img.pixels[static_cast<std::size_t>(img_row) * static_cast<std::size_t>(img.width) +
                 static_cast<std::size_t>(col)] = map.occupied(row, col) ? 0 : 255;
    }
  }
  write_pgm(image_path, img);
  std::ofstream meta(sidecar_path(image_path));
  if (!meta) throw Error(Errc::io_error, "cannot write sidecar for " + image_path.string());
  meta << "resolution = " << format_double(map.resolution()) << '\n'
       << "origin_x = " << format_double(map.origin().x()) << '\n'
       << "origin_y = " << format_double(map.origin().y()) << '\n'
       << "start_x = " << format_double(map.start_pose().x) << '\n'
       << "start_y = " << format_double(map.start_pose().y) << '\n'
       << "start_heading = " << format_double(map.start_pose().heading) << '\n'
       << "occupied_thresh = 0.45\n";
}

void save_centreline_csv(const CentrelineDescription& line, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "x,y,w_left,w_right\n" << std::setprecision(17);
  for (std::size_t i = 0; i < line.size(); ++i) {
    out << line.points[i].x() << ',' << line.points[i].y() << ',' << line.widths_left[i] << ','
        << line.widths_right[i] << '\n';
  }
}

CentrelineDescription load_centreline_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  if (header.rfind("x,y,w_left,w_right", 0) != 0) {
    throw Error(Errc::malformed_metadata, "unexpected centreline header in " + path.string());
  }
  CentrelineDescription line;
  std::string row;
  while (std::getline(in, row)) {
    if (row.empty()) continue;
    std::replace(row.begin(), row.end(), ',', ' ');
    std::istringstream fields(row);
    double x, y, wl, wr;
    if (!(fields >> x >> y >> wl >> wr)) throw Error(Errc::malformed_metadata, "bad centreline row: " + row);
    line.points.emplace_back(x, y);
    line.widths_left.push_back(wl);
    line.widths_right.push_back(wr);
  }
  if (line.size() < 2) throw Error(Errc::malformed_metadata, "centreline needs at least two points");
  const double mean_spacing = arc_length(line.points) / static_cast<double>(line.size() - 1);
  line.closed = (line.points.back() - line.points.front()).norm() <= 2.0 * mean_spacing;
  return line;
}

Track load_track_bundle(const std::filesystem::path& image_path) {
  TrackMap map = load_track(image_path);
  return Track{std::move(map), load_centreline_csv(centreline_path(image_path))};
}

void save_track_bundle(const Track& track, const std::filesystem::path& image_path) {
  save_track(track.map, image_path);
  save_centreline_csv(track.centreline, centreline_path(image_path));
}

double cast_ray(const TrackMap& map, const Vec2& origin, double bearing, double max_range) {
  const double res = map.resolution();
  const Vec2 p = (origin - map.origin()) / res;
  int col = static_cast<int>(std::floor(p.x()));
  int row = static_cast<int>(std::floor(p.y()));
  if (map.occupied(row, col)) throw Error(Errc::origin_in_wall, "ray origin inside a wall");
  const double dx = std::cos(bearing), dy = std::sin(bearing);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int step_c = dx > 0.0 ? 1 : -1;
  const int step_r = dy > 0.0 ? 1 : -1;
  const double delta_c = dx != 0.0 ? std::abs(1.0 / dx) : inf;
  const double delta_r = dy != 0.0 ? std::abs(1.0 / dy) : inf;
  double next_c = dx != 0.0 ? ((col + (step_c > 0 ? 1 : 0)) - p.x()) / dx : inf;
  double next_r = dy != 0.0 ? ((row + (step_r > 0 ? 1 : 0)) - p.y()) / dy : inf;
  const double limit = max_range / res;
  while (true) {
    double t;
    if (next_c < next_r) {
      t = next_c;
      next_c += delta_c;
      col += step_c;
    } else {
      t = next_r;
      next_r += delta_r;
      row += step_r;
    }
    if (t >= limit) return max_range;
    if (map.occupied(row, col)) return t * res;
  }
}

LidarScan scan(const TrackMap& map, const Pose& pose, int n_beams, double fov, double max_range) {
  if (n_beams < 2) throw Error(Errc::invalid_argument, "scan needs at least two beams");
  if (!(max_range > 0.0)) throw Error(Errc::invalid_argument, "max_range must be positive");
  if (map.occupied_at(pose.position())) throw Error(Errc::origin_in_wall, "scan pose inside a wall");
  LidarScan out;
  out.fov = fov;
  out.max_range = max_range;
  out.distances.resize(static_cast<std::size_t>(n_beams));
  for (int i = 0; i < n_beams; ++i) {
    const double rel = -0.5 * fov + static_cast<double>(i) * fov / static_cast<double>(n_beams);
    out.distances[static_cast<std::size_t>(i)] = cast_ray(map, pose.position(), pose.heading + rel, max_range);
  }
  return out;
}

}  // namespace lmr
