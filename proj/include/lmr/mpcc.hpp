#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <vector>

#include "lmr/localmap.hpp"
#include "lmr/qp.hpp"
#include "lmr/track.hpp"
#include "lmr/vehicle.hpp"

namespace lmr {

/// Arc-length parametrised reference line with widths. Open references are
/// extended straight along their end tangents in both directions; closed
/// references wrap.
class ReferencePath {
 public:
  ReferencePath() = default;
  ReferencePath(const CentrelineDescription& line);

  struct Sample {
    Vec2 point;
    double heading;
    double curvature;
    double width_left;
    double width_right;
  };
  Sample at(double s) const;
  /// Arc length of the closest point (no wrap-around bookkeeping).
  double project(const Vec2& p) const;

  double length() const { return length_; }
  bool closed() const { return closed_; }
  bool empty() const { return points_.empty(); }

 private:
  Polyline points_;
  std::vector<double> s_;  // per vertex, plus the closing vertex when closed
  std::vector<double> heading_;  // unwrapped, per vertex (plus closing)
  std::vector<double> curvature_;
  std::vector<double> wl_, wr_;
  double length_ = 0.0;
  bool closed_ = false;
};

struct MpccConfig {
  int horizon = 10;
  double dt = 0.1;
  double q_contour = 1.0;
  double q_lag = 10.0;
  double gamma = 1.5;     // progress reward
  double r_steer = 0.5;   // input-rate penalties
  double r_speed = 0.05;
  double r_progress = 1e-3;
  double slack_weight = 1e4;
  double track_margin = 0.0;  // extra clearance beyond the vehicle half-width
  double max_progress_rate_factor = 1.5;  // v_s <= factor * v_max
  VehicleLimits limits;
  int max_iterations = 5;  // linearise-solve rounds
  double tolerance = 1e-3;  // relative objective change
  double trust_steer = 0.3;
  double trust_speed = 3.0;
  double trust_progress = 4.0;
  std::optional<double> terminal_speed;  // bound on the last speed input

  void validate() const;
};

struct MpccStage {
  double x, y, theta, s;
};

struct MpccInput {
  double steer, speed, progress_rate;
};

enum class MpccStatus : std::uint8_t { converged, max_iter };

struct MpccSolution {
  std::vector<MpccStage> states;  // N + 1, states[0] is the measured state
  std::vector<MpccInput> inputs;  // N
  std::vector<double> contour_error;  // per state
  std::vector<double> lag_error;
  std::vector<double> track_violation;  // per state, beyond the allowed half-width
  double objective = 0.0;
  MpccStatus status = MpccStatus::max_iter;
  int iterations = 0;
  int qp_iterations = 0;
};

/// Nonlinear rollout of the kinematic model with progress state.
std::vector<MpccStage> mpcc_rollout(const MpccStage& initial, const std::vector<MpccInput>& inputs, double dt,
                                    double wheelbase);

/// Largest per-stage mismatch between consecutive states and the model.
double dynamics_residual(const MpccSolution& sol, const MpccConfig& cfg);

/// One receding-horizon solve. `warm` are input guesses (size N), otherwise a
/// guess following the reference curvature is used. Throws
/// Errc::solver_failure when a QP fails to converge.
MpccSolution mpcc_solve(const ReferencePath& ref, const VehicleState& state, const std::vector<MpccInput>* warm,
                        const MpccConfig& cfg);

/// Receding-horizon controller with warm starts and an optional per-step
/// solution dump.
class MpccController {
 public:
  explicit MpccController(MpccConfig cfg);

  /// Solves at time `t` and returns the first input.
  Action step(const ReferencePath& ref, const VehicleState& state, double t);
  void reset();
  void set_warm_start_enabled(bool on) { warm_enabled_ = on; }
  void enable_dump(const std::filesystem::path& path);

  const MpccConfig& config() const { return cfg_; }
  MpccConfig& config() { return cfg_; }
  const std::optional<MpccSolution>& last_solution() const { return last_; }
  /// Inputs of the previous solution shifted by the elapsed time.
  std::vector<MpccInput> shifted_warm_start(double t) const;

 private:
  MpccConfig cfg_;
  std::optional<MpccSolution> last_;
  double last_time_ = 0.0;
  bool warm_enabled_ = true;
  std::unique_ptr<std::ofstream> dump_;
  long step_count_ = 0;
};

}  // namespace lmr
