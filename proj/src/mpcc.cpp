#include "lmr/mpcc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "lmr/error.hpp"

namespace lmr {

ReferencePath::ReferencePath(const CentrelineDescription& line)
    : points_(line.points), wl_(line.widths_left), wr_(line.widths_right), closed_(line.closed) {
  if (points_.size() < 3) throw Error(Errc::invalid_argument, "reference needs at least 3 points");
  s_ = cumulative_arc_length(points_, closed_);
  length_ = s_.back();
  const auto tangents = central_difference_tangents(points_, closed_);
  heading_.reserve(s_.size());
  for (const auto& t : tangents) {
    const double h = std::atan2(t.y(), t.x());
    heading_.push_back(heading_.empty() ? h : heading_.back() + normalize_angle(h - heading_.back()));
  }
  curvature_ = circumcircle_curvatures(points_, closed_);
  if (closed_) {
    heading_.push_back(heading_.back() + normalize_angle(heading_.front() - heading_.back()));
    curvature_.push_back(curvature_.front());
    wl_.push_back(wl_.front());
    wr_.push_back(wr_.front());
  }
}

ReferencePath::Sample ReferencePath::at(double s) const {
  const std::size_t last = points_.size() - 1;
  if (closed_) {
    s = std::fmod(s, length_);
    if (s < 0.0) s += length_;
  } else if (s <= 0.0) {
    const double h = heading_.front();
    return {points_.front() + s * Vec2(std::cos(h), std::sin(h)), h, 0.0, wl_.front(), wr_.front()};
  } else if (s >= length_) {
    const double h = heading_.back();
    return {points_.back() + (s - length_) * Vec2(std::cos(h), std::sin(h)), h, 0.0, wl_.back(), wr_.back()};
  }
  auto it = std::upper_bound(s_.begin(), s_.end(), s);
  std::size_t i = it == s_.begin() ? 0 : static_cast<std::size_t>(it - s_.begin()) - 1;
  i = std::min(i, s_.size() - 2);
  const double span = s_[i + 1] - s_[i];
  const double f = span > 0.0 ? (s - s_[i]) / span : 0.0;
  const Vec2& a = points_[i];
  const Vec2& b = points_[closed_ && i == last ? 0 : i + 1];
  auto lerp = [f](double x, double y) { return x + f * (y - x); };
  return {a + f * (b - a), lerp(heading_[i], heading_[i + 1]), lerp(curvature_[i], curvature_[i + 1]),
          lerp(wl_[i], wl_[i + 1]), lerp(wr_[i], wr_[i + 1])};
}

double ReferencePath::project(const Vec2& p) const { return project_onto(points_, p, closed_).s; }

void MpccConfig::validate() const {
  const bool ok = horizon >= 2 && dt > 0.0 && q_contour > 0.0 && q_lag > 0.0 && gamma >= 0.0 && r_steer >= 0.0 &&
                  r_speed >= 0.0 && r_progress >= 0.0 && slack_weight > 0.0 && max_iterations >= 1;
  if (!ok) throw Error(Errc::invalid_argument, "MPCC config out of range");
  limits.validate();
}

std::vector<MpccStage> mpcc_rollout(const MpccStage& initial, const std::vector<MpccInput>& inputs, double dt,
                                    double wheelbase) {
  std::vector<MpccStage> z;
  z.reserve(inputs.size() + 1);
  z.push_back(initial);
  for (const auto& u : inputs) {
    const MpccStage& c = z.back();
    z.push_back({c.x + dt * u.speed * std::cos(c.theta), c.y + dt * u.speed * std::sin(c.theta),
                 c.theta + dt * u.speed * std::tan(u.steer) / wheelbase, c.s + dt * u.progress_rate});
  }
  return z;
}

double dynamics_residual(const MpccSolution& sol, const MpccConfig& cfg) {
  double worst = 0.0;
  for (std::size_t k = 0; k < sol.inputs.size(); ++k) {
    const auto next = mpcc_rollout(sol.states[k], {sol.inputs[k]}, cfg.dt, cfg.limits.wheelbase)[1];
    const auto& z = sol.states[k + 1];
    worst = std::max({worst, std::abs(next.x - z.x), std::abs(next.y - z.y), std::abs(next.theta - z.theta),
                      std::abs(next.s - z.s)});
  }
  return worst;
}

namespace {

struct Errors {
  double contour, lag, violation;
};

Errors stage_errors(const ReferencePath& ref, const MpccStage& z, double clearance) {
  const auto r = ref.at(z.s);
  const double dx = z.x - r.point.x();
  const double dy = z.y - r.point.y();
  const double sn = std::sin(r.heading);
  const double cs = std::cos(r.heading);
  const double ec = -sn * dx + cs * dy;
  const double el = cs * dx + sn * dy;
  const double viol = std::max({0.0, ec - (r.width_left - clearance), -ec - (r.width_right - clearance)});
  return {ec, el, viol};
}

double evaluate(const ReferencePath& ref, const VehicleState& state, const std::vector<MpccStage>& z,
                const std::vector<MpccInput>& u, const MpccConfig& cfg, double clearance) {
  double j = 0.0;
  for (std::size_t k = 1; k < z.size(); ++k) {
    const auto e = stage_errors(ref, z[k], clearance);
    j += cfg.q_contour * e.contour * e.contour + cfg.q_lag * e.lag * e.lag + cfg.slack_weight * e.violation;
  }
  j -= cfg.gamma * (z.back().s - z.front().s);
  MpccInput prev{state.steer, state.speed, state.speed};
  for (const auto& in : u) {
    j += cfg.r_steer * std::pow(in.steer - prev.steer, 2) + cfg.r_speed * std::pow(in.speed - prev.speed, 2) +
         cfg.r_progress * std::pow(in.progress_rate - prev.progress_rate, 2);
    prev = in;
  }
  return j;
}

// Clamp a guess onto input bounds, rate limits and a reachable terminal speed.
void make_feasible(std::vector<MpccInput>& u, const VehicleState& state, const MpccConfig& cfg, double vs_max,
                   double terminal) {
  const auto& lim = cfg.limits;
  const double dsteer = lim.max_steer_rate * cfg.dt;
  const double dspeed = lim.a_long_max * cfg.dt;
  double prev_steer = state.steer;
  double prev_speed = state.speed;
  for (auto& in : u) {
    in.steer = std::clamp(std::clamp(in.steer, prev_steer - dsteer, prev_steer + dsteer), -lim.max_steer, lim.max_steer);
    in.speed = std::clamp(std::clamp(in.speed, prev_speed - dspeed, prev_speed + dspeed), 0.0, lim.v_max);
    in.progress_rate = std::clamp(in.progress_rate, 0.0, vs_max);
    prev_steer = in.steer;
    prev_speed = in.speed;
  }
  u.back().speed = std::min(u.back().speed, terminal);
  for (std::size_t k = u.size() - 1; k-- > 0;) u[k].speed = std::min(u[k].speed, u[k + 1].speed + dspeed);
}

}  // namespace

MpccSolution mpcc_solve(const ReferencePath& ref, const VehicleState& state, const std::vector<MpccInput>* warm,
                        const MpccConfig& cfg) {
  const int N = cfg.horizon;
  const double dt = cfg.dt;
  const auto& lim = cfg.limits;
  const double clearance = lim.half_width + cfg.track_margin;
  const double vs_max = cfg.max_progress_rate_factor * lim.v_max;
  const double dsteer = lim.max_steer_rate * dt;
  const double dspeed = lim.a_long_max * dt;
  const double terminal =
      cfg.terminal_speed ? std::max(*cfg.terminal_speed, state.speed - dspeed * N) : lim.v_max;

  const MpccStage z0{state.pose.x, state.pose.y, state.pose.heading, ref.project(state.pose.position())};
  std::vector<MpccInput> u;
  if (warm && static_cast<int>(warm->size()) == N) {
    u = *warm;
  } else {
    double s = z0.s;
    double v = state.speed;
    for (int k = 0; k < N; ++k) {
      v = std::min(lim.v_max, v + dspeed);
      const double steer = std::atan(lim.wheelbase * ref.at(s + 0.5 * dt * v).curvature);
      u.push_back({steer, v, v});
      s += dt * v;
    }
  }
  make_feasible(u, state, cfg, vs_max, terminal);
  std::vector<MpccStage> z = mpcc_rollout(z0, u, dt, lim.wheelbase);
  double j_prev = evaluate(ref, state, z, u, cfg, clearance);

  const int nu = 3 * N;
  const int n = nu + N;
  const int m = 2 * nu + 2 * 2 * N + 2 * nu + 2 * N + N + 1;
  MpccSolution sol;
  sol.status = MpccStatus::max_iter;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    // Sensitivities of states 1..N to input changes.
    std::vector<Eigen::MatrixXd> S(static_cast<std::size_t>(N + 1), Eigen::MatrixXd::Zero(4, nu));
    for (int k = 0; k < N; ++k) {
      const auto& zk = z[static_cast<std::size_t>(k)];
      const auto& uk = u[static_cast<std::size_t>(k)];
      Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
      A(0, 2) = -dt * uk.speed * std::sin(zk.theta);
      A(1, 2) = dt * uk.speed * std::cos(zk.theta);
      Eigen::Matrix<double, 4, 3> B = Eigen::Matrix<double, 4, 3>::Zero();
      const double c = std::cos(uk.steer);
      B(2, 0) = dt * uk.speed / (c * c * lim.wheelbase);
      B(0, 1) = dt * std::cos(zk.theta);
      B(1, 1) = dt * std::sin(zk.theta);
      B(2, 1) = dt * std::tan(uk.steer) / lim.wheelbase;
      B(3, 2) = dt;
      S[static_cast<std::size_t>(k + 1)] = A * S[static_cast<std::size_t>(k)];
      S[static_cast<std::size_t>(k + 1)].block(0, 3 * k, 4, 3) += B;
    }

    QpProblem qp;
    qp.P = Eigen::MatrixXd::Zero(n, n);
    qp.q = Eigen::VectorXd::Zero(n);
    qp.E.resize(0, n);
    qp.e.resize(0);
    qp.G = Eigen::MatrixXd::Zero(m, n);
    qp.h = Eigen::VectorXd::Zero(m);
    auto add_square = [&](double w, double a, const Eigen::VectorXd& b) {
      qp.P.topLeftCorner(nu, nu) += 2.0 * w * b * b.transpose();
      qp.q.head(nu) += 2.0 * w * a * b;
    };

    int row = 0;
    for (int k = 1; k <= N; ++k) {
      const auto& zk = z[static_cast<std::size_t>(k)];
      const auto r = ref.at(zk.s);
      const double sn = std::sin(r.heading), cs = std::cos(r.heading);
      const double dx = zk.x - r.point.x(), dy = zk.y - r.point.y();
      const double ec = -sn * dx + cs * dy;
      const double el = cs * dx + sn * dy;
      const Eigen::Vector4d gc(-sn, cs, 0.0, -r.curvature * el);
      const Eigen::Vector4d gl(cs, sn, 0.0, r.curvature * ec - 1.0);
      const Eigen::MatrixXd& Sk = S[static_cast<std::size_t>(k)];
      add_square(cfg.q_contour, ec, Sk.transpose() * gc);
      add_square(cfg.q_lag, el, Sk.transpose() * gl);

      // Track half-planes from the normal at the current s.
      const Eigen::VectorXd lat = Sk.transpose() * Eigen::Vector4d(-sn, cs, 0.0, 0.0);
      const int slack = nu + k - 1;
      qp.G.row(row).head(nu) = lat;
      qp.G(row, slack) = -1.0;
      qp.h[row++] = r.width_left - clearance - ec;
      qp.G.row(row).head(nu) = -lat;
      qp.G(row, slack) = -1.0;
      qp.h[row++] = r.width_right - clearance + ec;
      qp.G(row, slack) = -1.0;
      qp.h[row++] = 0.0;
      qp.q[slack] = cfg.slack_weight;
    }
    qp.q.head(nu) -= cfg.gamma * S[static_cast<std::size_t>(N)].row(3).transpose();

    const double weights[3] = {cfg.r_steer, cfg.r_speed, cfg.r_progress};
    const double lower[3] = {-lim.max_steer, 0.0, 0.0};
    const double upper[3] = {lim.max_steer, lim.v_max, vs_max};
    const double trust[3] = {cfg.trust_steer, cfg.trust_speed, cfg.trust_progress};
    const double rate[3] = {dsteer, dspeed, 0.0};
    for (int k = 0; k < N; ++k) {
      const auto& uk = u[static_cast<std::size_t>(k)];
      const double cur[3] = {uk.steer, uk.speed, uk.progress_rate};
      double prev[3] = {state.steer, state.speed, state.speed};
      if (k > 0) {
        const auto& up = u[static_cast<std::size_t>(k - 1)];
        prev[0] = up.steer;
        prev[1] = up.speed;
        prev[2] = up.progress_rate;
      }
      for (int c = 0; c < 3; ++c) {
        const int col = 3 * k + c;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(nu);
        b[col] = 1.0;
        if (k > 0) b[col - 3] = -1.0;
        add_square(weights[c], cur[c] - prev[c], b);

        qp.G(row, col) = 1.0;
        qp.h[row++] = std::min(upper[c] - cur[c], trust[c]);
        qp.G(row, col) = -1.0;
        qp.h[row++] = std::min(cur[c] - lower[c], trust[c]);
        if (rate[c] > 0.0) {
          qp.G.row(row).head(nu) = b.transpose();
          qp.h[row++] = rate[c] - (cur[c] - prev[c]);
          qp.G.row(row).head(nu) = -b.transpose();
          qp.h[row++] = rate[c] + (cur[c] - prev[c]);
        }
      }
    }
    qp.G(row, 3 * (N - 1) + 1) = 1.0;
    qp.h[row++] = terminal - u.back().speed;
    qp.G.conservativeResize(row, n);
    qp.h.conservativeResize(row);
    qp.P += 1e-9 * Eigen::MatrixXd::Identity(n, n);

    const auto res = solve_qp(qp, QpSettings{80, 1e-8});
    sol.qp_iterations += res.iterations;
    if (!res.converged) throw Error(Errc::solver_failure, "MPCC QP did not converge: " + res.diagnostics());

    for (int k = 0; k < N; ++k) {
      auto& uk = u[static_cast<std::size_t>(k)];
      uk.steer += res.x[3 * k];
      uk.speed += res.x[3 * k + 1];
      uk.progress_rate += res.x[3 * k + 2];
    }
    make_feasible(u, state, cfg, vs_max, terminal);
    z = mpcc_rollout(z0, u, dt, lim.wheelbase);
    const double j = evaluate(ref, state, z, u, cfg, clearance);
    sol.iterations = it;
    const bool done = std::abs(j - j_prev) <= cfg.tolerance * (1.0 + std::abs(j_prev));
    j_prev = j;
    if (done) {
      sol.status = MpccStatus::converged;
      break;
    }
  }

  sol.states = z;
  sol.inputs = u;
  sol.objective = j_prev;
  for (const auto& zk : z) {
    const auto e = stage_errors(ref, zk, clearance);
    sol.contour_error.push_back(e.contour);
    sol.lag_error.push_back(e.lag);
    sol.track_violation.push_back(e.violation);
  }
  return sol;
}

MpccController::MpccController(MpccConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void MpccController::reset() {
  last_.reset();
  last_time_ = 0.0;
  step_count_ = 0;
}

void MpccController::enable_dump(const std::filesystem::path& path) {
  dump_ = std::make_unique<std::ofstream>(path);
  if (!*dump_) throw Error(Errc::io_error, "cannot write " + path.string());
  *dump_ << "step,t,k,x,y,theta,s,steer,speed,progress_rate,e_c,e_l\n" << std::setprecision(10);
}

std::vector<MpccInput> MpccController::shifted_warm_start(double t) const {
  if (!last_) return {};
  const auto& in = last_->inputs;
  const int n = static_cast<int>(in.size());
  const double elapsed = std::max(0.0, t - last_time_);
  std::vector<MpccInput> out;
  out.reserve(in.size());
  for (int k = 0; k < n; ++k) {
    const double tau = (static_cast<double>(k) * cfg_.dt + elapsed) / cfg_.dt;
    const int j = std::min(n - 1, static_cast<int>(std::floor(tau)));
    const int j1 = std::min(n - 1, j + 1);
    const double f = std::clamp(tau - j, 0.0, 1.0);
    const auto& a = in[static_cast<std::size_t>(j)];
    const auto& b = in[static_cast<std::size_t>(j1)];
    out.push_back({a.steer + f * (b.steer - a.steer), a.speed + f * (b.speed - a.speed),
                   a.progress_rate + f * (b.progress_rate - a.progress_rate)});
  }
  return out;
}

Action MpccController::step(const ReferencePath& ref, const VehicleState& state, double t) {
  std::vector<MpccInput> warm;
  if (warm_enabled_) warm = shifted_warm_start(t);
  auto sol = mpcc_solve(ref, state, warm.empty() ? nullptr : &warm, cfg_);
  if (dump_) {
    for (std::size_t k = 0; k < sol.states.size(); ++k) {
      const auto& z = sol.states[k];
      const MpccInput u = k < sol.inputs.size() ? sol.inputs[k] : MpccInput{0.0, 0.0, 0.0};
      *dump_ << step_count_ << ',' << t << ',' << k << ',' << z.x << ',' << z.y << ',' << z.theta << ',' << z.s << ','
             << u.steer << ',' << u.speed << ',' << u.progress_rate << ',' << sol.contour_error[k] << ','
             << sol.lag_error[k] << '\n';
    }
    dump_->flush();
  }
  ++step_count_;
  last_ = std::move(sol);
  last_time_ = t;
  return {last_->inputs.front().steer, last_->inputs.front().speed};
}

}  // namespace lmr
