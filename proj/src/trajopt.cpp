#include "lmr/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "lmr/error.hpp"
#include "lmr/qp.hpp"

namespace lmr {

void VehicleLimits::validate() const {
  const bool ok = v_max > 0 && a_long_max > 0 && a_lat_max > 0 && wheelbase > 0 && max_steer > 0 &&
                  max_steer < M_PI / 2 && half_width > 0 && max_steer_rate > 0;
  if (!ok) throw Error(Errc::invalid_argument, "vehicle limits must be positive with max_steer < pi/2");
}

double Trajectory::length() const {
  if (points.empty()) return 0.0;
  return closed ? s.back() + (points.front() - points.back()).norm() : s.back();
}

double TerminalRule::speed(const VehicleLimits& limits) const {
  return std::min(limits.v_max, std::sqrt(v_safe * v_safe + 2.0 * limits.a_long_max * braking_distance));
}

std::vector<Vec2> centreline_normals(const CentrelineDescription& line) {
  const auto tangents = central_difference_tangents(line.points, line.closed);
  std::vector<Vec2> normals;
  normals.reserve(tangents.size());
  for (const auto& t : tangents) normals.push_back(left_normal(t));
  return normals;
}

namespace {

void check_line(const CentrelineDescription& line) {
  const std::size_t n = line.points.size();
  if (n < 5) throw Error(Errc::invalid_argument, "centreline needs at least 5 points");
  if (line.widths_left.size() != n || line.widths_right.size() != n) {
    throw Error(Errc::invalid_argument, "width count does not match point count");
  }
}

// Curvature at `mid` as heading change over mean adjacent segment length,
// linearised in the three offsets around the centreline.
struct CurvatureRow {
  std::size_t prev, mid, next;
  double kappa0;
  double d_prev, d_mid, d_next;
};

std::vector<CurvatureRow> curvature_rows(const CentrelineDescription& line, const std::vector<Vec2>& normals) {
  const std::size_t n = line.points.size();
  std::vector<CurvatureRow> out;
  const std::size_t first = line.closed ? 0 : 1;
  const std::size_t last = line.closed ? n : n - 1;
  for (std::size_t i = first; i < last; ++i) {
    const std::size_t im = (i + n - 1) % n;
    const std::size_t ip = (i + 1) % n;
    const Vec2 a = line.points[i] - line.points[im];
    const Vec2 b = line.points[ip] - line.points[i];
    const double la = a.norm();
    const double lb = b.norm();
    if (la <= 0.0 || lb <= 0.0) throw Error(Errc::invalid_argument, "repeated centreline point");
    const double turn = std::atan2(cross(a, b), a.dot(b));
    const double len = 0.5 * (la + lb);
    const double k0 = turn / len;
    const Vec2 ka = -left_normal(a) / (la * la * len) - k0 / len * a / (2.0 * la);
    const Vec2 kb = left_normal(b) / (lb * lb * len) - k0 / len * b / (2.0 * lb);
    out.push_back({im, i, ip, k0, -ka.dot(normals[im]), (ka - kb).dot(normals[i]), kb.dot(normals[ip])});
  }
  return out;
}

}  // namespace

std::vector<double> linearised_curvature(const CentrelineDescription& line, const std::vector<double>& offsets) {
  const auto normals = centreline_normals(line);
  std::vector<double> kappa(line.points.size(), 0.0);
  for (const auto& r : curvature_rows(line, normals)) {
    kappa[r.mid] = r.kappa0 + r.d_prev * offsets[r.prev] + r.d_mid * offsets[r.mid] + r.d_next * offsets[r.next];
  }
  return kappa;
}

double curvature_objective(const CentrelineDescription& line, const std::vector<double>& offsets) {
  double sum = 0.0;
  for (const double k : linearised_curvature(line, offsets)) sum += k * k;
  return sum;
}

MinCurvatureResult min_curvature_path(const CentrelineDescription& line, const VehicleLimits& limits,
                                      const std::optional<Pose>& anchor, double margin, double margin_ramp) {
  check_line(line);
  if (anchor && line.closed) throw Error(Errc::invalid_argument, "anchor given for a closed line");
  const std::size_t n = line.points.size();
  const auto normals = centreline_normals(line);
  const auto rows = curvature_rows(line, normals);

  // kappa = M * offsets + kappa0
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd kappa0(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto ri = static_cast<Eigen::Index>(r);
    trips.emplace_back(ri, static_cast<Eigen::Index>(row.prev), row.d_prev);
    trips.emplace_back(ri, static_cast<Eigen::Index>(row.mid), row.d_mid);
    trips.emplace_back(ri, static_cast<Eigen::Index>(row.next), row.d_next);
    kappa0[ri] = row.kappa0;
  }
  SparseMatrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  M.setFromTriplets(trips.begin(), trips.end());
  SparseMatrix H = SparseMatrix(M.transpose()) * M;
  double diag_max = 0.0;
  for (Eigen::Index i = 0; i < H.rows(); ++i) diag_max = std::max(diag_max, H.coeff(i, i));
  SparseMatrix reg(H.rows(), H.cols());
  reg.setIdentity();
  H += (1e-10 * std::max(1.0, diag_max)) * reg;
  const Eigen::VectorXd g = M.transpose() * kappa0;

  Eigen::VectorXd lo(static_cast<Eigen::Index>(n));
  Eigen::VectorXd hi(static_cast<Eigen::Index>(n));
  Eigen::VectorXd lo_wall(static_cast<Eigen::Index>(n));
  Eigen::VectorXd hi_wall(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double wl = line.widths_left[i];
    const double wr = line.widths_right[i];
    const double room = 0.5 * (wl + wr) - limits.half_width;
    const bool pinned = anchor && i < 2;
    if (room < 0.0 && !pinned) {
      throw Error(Errc::infeasible, "track narrower than the vehicle at point " + std::to_string(i));
    }
    const double m = std::clamp(room, 0.0, std::max(margin, 0.0));
    lo_wall[ii] = -(wr - limits.half_width);
    hi_wall[ii] = wl - limits.half_width;
    lo[ii] = lo_wall[ii] + m;
    hi[ii] = hi_wall[ii] - m;
  }

  // A vehicle already inside the margin band gets bounds that widen to reach
  // it and close back over margin_ramp metres.
  if (anchor && margin_ramp > 0.0) {
    const double a0 = (anchor->position() - line.points[0]).dot(normals[0]);
    const double over_hi = std::max(0.0, a0 - hi[0]);
    const double over_lo = std::max(0.0, lo[0] - a0);
    const auto station = cumulative_arc_length(line.points);
    for (std::size_t i = 0; i < n && station[i] < margin_ramp; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double w = 1.0 - station[i] / margin_ramp;
      hi[ii] = std::max(hi[ii], std::min(hi_wall[ii], hi[ii] + w * over_hi));
      lo[ii] = std::min(lo[ii], std::max(lo_wall[ii], lo[ii] - w * over_lo));
    }
  }

  if (anchor) {
    const Vec2 pos = anchor->position();
    const double a0 = (pos - line.points[0]).dot(normals[0]);
    lo[0] = hi[0] = a0;
    const Vec2 dir = anchor->direction();
    const double denom = cross(dir, normals[1]);
    if (std::abs(denom) > 1e-6) {
      const Vec2 p0 = line.points[0] + a0 * normals[0];
      const double a1 = -cross(dir, line.points[1] - p0) / denom;
      const double lo1 = std::min(lo[1], a0);
      const double hi1 = std::max(hi[1], a0);
      lo[1] = hi[1] = std::clamp(a1, lo1, hi1);
    } else if (lo[1] > hi[1]) {
      lo[1] = hi[1] = a0;
    }
  }

  const auto qp = solve_box_qp(H, g, lo, hi);
  MinCurvatureResult res;
  res.offsets.assign(qp.x.data(), qp.x.data() + qp.x.size());
  res.normals = normals;
  res.path.reserve(n);
  for (std::size_t i = 0; i < n; ++i) res.path.push_back(line.points[i] + res.offsets[i] * normals[i]);
  res.objective = curvature_objective(line, res.offsets);
  res.centreline_objective = kappa0.squaredNorm();
  res.iterations = qp.iterations;
  return res;
}

std::vector<double> speed_profile(const std::vector<double>& ds, const std::vector<double>& curvature,
                                  const VehicleLimits& limits, double v_start, std::optional<double> v_end,
                                  bool closed) {
  const std::size_t n = curvature.size();
  if (ds.size() != (closed ? n : (n == 0 ? 0 : n - 1))) {
    throw Error(Errc::invalid_argument, "speed profile: ds size does not match curvature size");
  }
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = std::abs(curvature[i]);
    v[i] = k > 0.0 ? std::min(limits.v_max, std::sqrt(limits.a_lat_max / k)) : limits.v_max;
  }
  if (n == 0) return v;
  const double two_a = 2.0 * limits.a_long_max;
  auto forward = [&](std::size_t i, std::size_t next) {
    const double reach = std::sqrt(v[i] * v[i] + two_a * ds[i]);
    if (reach < v[next]) {
      v[next] = reach;
      return true;
    }
    return false;
  };
  auto backward = [&](std::size_t i, std::size_t next) {
    const double reach = std::sqrt(v[next] * v[next] + two_a * ds[i]);
    if (reach < v[i]) {
      v[i] = reach;
      return true;
    }
    return false;
  };

  if (!closed) {
    v[0] = std::min(v[0], std::max(v_start, 0.0));
    for (std::size_t i = 0; i + 1 < n; ++i) forward(i, i + 1);
    if (v_end) v[n - 1] = std::min(v[n - 1], std::max(*v_end, 0.0));
    for (std::size_t i = n - 1; i-- > 0;) backward(i, i + 1);
    return v;
  }

  // The slowest lateral cap is never lowered, so sweeps anchored there settle.
  const auto start = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  for (int sweep = 0; sweep < 3; ++sweep) {
    bool changed = false;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t i = (start + j) % n;
      changed = forward(i, (i + 1) % n) || changed;
    }
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t i = (start + n - j) % n;
      changed = backward(i, (i + 1) % n) || changed;
    }
    if (!changed) return v;
  }
  throw Error(Errc::solver_failure, "closed speed profile did not reach a fixed point in 3 sweeps");
}

Trajectory make_trajectory(const Polyline& path, bool closed, const VehicleLimits& limits, double v_start,
                           std::optional<double> v_end) {
  if (path.size() < 2) throw Error(Errc::empty_trajectory, "trajectory needs at least two points");
  Trajectory t;
  t.points = path;
  t.closed = closed;
  t.curvature = path.size() >= 3 ? circumcircle_curvatures(path, closed) : std::vector<double>(path.size(), 0.0);
  auto s = cumulative_arc_length(path, closed);
  std::vector<double> ds(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) ds[i] = s[i + 1] - s[i];
  if (closed) s.pop_back();
  t.s = std::move(s);
  t.speed = speed_profile(ds, t.curvature, limits, v_start, v_end, closed);
  return t;
}

CentrelineDescription trim_local_map(const LocalMap& map, const Vec2& vehicle) {
  if (map.size() < 2) throw Error(Errc::empty_trajectory, "local map has fewer than two points");
  const auto proj = project_onto(map.points, vehicle, false);
  const double spacing = map.length() / static_cast<double>(map.size() - 1);
  // Uniform stations from the foot point; the final interval may be shorter.
  std::vector<double> at;
  for (double s = proj.s; s < map.length() - 0.5 * spacing; s += spacing) at.push_back(s);
  at.push_back(map.length());

  CentrelineDescription out;
  for (const double s : at) out.points.push_back(point_at_arc_length(map.points, map.s, s));
  out.widths_left = interpolate_by_arc_length(map.s, map.widths_left, at);
  out.widths_right = interpolate_by_arc_length(map.s, map.widths_right, at);
  if (out.points.size() < 5) throw Error(Errc::empty_trajectory, "local map too short ahead of the vehicle");
  return out;
}

CentrelineDescription smooth_reference(const CentrelineDescription& line, double lambda) {
  const auto n = static_cast<Eigen::Index>(line.points.size());
  if (lambda <= 0.0 || n < 3 || line.closed) return line;
  // (I + lambda D'D) x = c, first point pinned with a heavy weight
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, i == 0 ? 1e8 : 1.0);
  for (Eigen::Index r = 0; r + 2 < n; ++r) {
    const double d[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) trips.emplace_back(r + a, r + b, lambda * d[a] * d[b]);
    }
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw Error(Errc::solver_failure, "reference smoothing failed");
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = i == 0 ? 1e8 : 1.0;
    rhs(i, 0) = w * line.points[static_cast<std::size_t>(i)].x();
    rhs(i, 1) = w * line.points[static_cast<std::size_t>(i)].y();
  }
  const Eigen::MatrixXd xy = ldlt.solve(rhs);

  CentrelineDescription out = line;
  const auto normals = centreline_normals(line);
  for (std::size_t i = 0; i < line.points.size(); ++i) {
    const Vec2 p(xy(static_cast<Eigen::Index>(i), 0), xy(static_cast<Eigen::Index>(i), 1));
    const double shift = (p - line.points[i]).dot(normals[i]);
    out.points[i] = p;
    out.widths_left[i] = std::max(0.0, line.widths_left[i] - shift);
    out.widths_right[i] = std::max(0.0, line.widths_right[i] + shift);
  }
  out.points[0] = line.points[0];

  // Boundary noise is smoothed the same way, without the pin.
  for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) -= i == 0 ? 1e8 - 1.0 : 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> plain(A);
  if (plain.info() != Eigen::Success) throw Error(Errc::solver_failure, "reference smoothing failed");
  Eigen::MatrixXd widths(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    widths(i, 0) = out.widths_left[static_cast<std::size_t>(i)];
    widths(i, 1) = out.widths_right[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd smooth = plain.solve(widths);
  for (std::size_t i = 0; i < line.points.size(); ++i) {
    out.widths_left[i] = std::max(0.0, smooth(static_cast<Eigen::Index>(i), 0));
    out.widths_right[i] = std::max(0.0, smooth(static_cast<Eigen::Index>(i), 1));
  }
  return out;
}

Trajectory plan_local_trajectory(const LocalMap& map, double speed, const VehicleLimits& limits,
                                 const LocalPlanConfig& cfg, double start_heading) {
  const auto line = smooth_reference(trim_local_map(map), cfg.smoothing);
  const auto path = min_curvature_path(line, limits, Pose(0.0, 0.0, start_heading), cfg.margin, cfg.margin_ramp);
  const double v_start = std::min(limits.v_max, std::max(speed, 0.0) + limits.a_long_max * cfg.start_lead);
  return make_trajectory(path.path, false, limits, v_start, cfg.terminal.speed(limits));
}

Trajectory plan_global_trajectory(const CentrelineDescription& line, const VehicleLimits& limits, double margin) {
  const auto path = min_curvature_path(line, limits, std::nullopt, margin);
  return make_trajectory(path.path, line.closed, limits, 0.0, line.closed ? std::nullopt : std::optional(0.0));
}

Trajectory centreline_trajectory(const CentrelineDescription& line, const VehicleLimits& limits) {
  return make_trajectory(line.points, line.closed, limits, 0.0, line.closed ? std::nullopt : std::optional(0.0));
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "s,x,y,kappa,v\n" << std::setprecision(10);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << traj.s[i] << ',' << traj.points[i].x() << ',' << traj.points[i].y() << ',' << traj.curvature[i] << ','
        << traj.speed[i] << '\n';
  }
}

}  // namespace lmr
