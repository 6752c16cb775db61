#pragma once

#include "lmr/geometry.hpp"

namespace lmr {

struct VehicleLimits {
  double v_max = 8.0;             // m/s
  double a_long_max = 4.0;        // m/s^2, drive and brake
  double a_lat_max = 0.8 * 9.81;  // m/s^2
  double wheelbase = 0.33;        // m
  double max_steer = 0.4;         // rad
  double half_width = 0.15;       // m, footprint radius
  double max_steer_rate = 3.2;    // rad/s

  /// Throws Errc::invalid_argument unless every limit is positive and the
  /// steering limit is below pi/2.
  void validate() const;
};

struct VehicleState {
  Pose pose;
  double speed = 0.0;
  double steer = 0.0;
  double time = 0.0;
};

struct Action {
  double steer = 0.0;
  double speed = 0.0;

  bool operator==(const Action&) const = default;
};

}  // namespace lmr
