#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lmr/controllers.hpp"
#include "lmr/localmap.hpp"
#include "lmr/mpcc.hpp"
#include "lmr/sim.hpp"
#include "lmr/trajopt.hpp"
#include "lmr/vehicle.hpp"

namespace lmr {

/// Every tunable of the workbench. Vehicle limits are copied into the
/// controller and MPCC configs by `resolved()`.
struct BenchConfig {
  VehicleLimits vehicle;
  ExtractionConfig extraction;
  PurePursuitConfig pure_pursuit;
  FtgConfig ftg;
  MpccConfig mpcc;
  SimConfig sim;
  LocalPlanConfig local_plan;
  double global_margin = 0.5;       // m, global two-stage path clearance
  double localisation_us = 1000.0;  // reported perception time of map-based planners
  double lengths_speed = 2.0;       // m/s, centreline drive for length statistics

  /// Copy with the vehicle limits pushed into the dependent sections.
  BenchConfig resolved() const;
  /// Throws Errc::invalid_argument on the first out-of-range value.
  void validate() const;
};

/// Reads an INI file (`[section]` then `key = value`). Unknown sections or
/// keys and unparsable values are errors; missing keys keep their defaults.
BenchConfig load_config(const std::filesystem::path& path);

/// Applies `section.key=value`.
void apply_override(BenchConfig& cfg, const std::string& assignment);

/// Writes every key with its current value, loadable by load_config.
void write_config(const BenchConfig& cfg, std::ostream& out);

}  // namespace lmr
