#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmr/config.hpp"
#include "lmr/planners.hpp"
#include "lmr/sim.hpp"
#include "lmr/track.hpp"

namespace lmr {

/// ftg, global_two_stage, local_two_stage, global_mpcc, local_mpcc.
const std::vector<std::string>& planner_names();

/// A builtin track name, or the path of a map image with its sidecar and
/// centreline files.
Track resolve_track(const std::string& name_or_path);

/// Throws Errc::invalid_argument for an unknown name.
std::unique_ptr<Planner> make_planner(const std::string& name, const Track& track, const BenchConfig& cfg);

struct ExperimentSpec {
  std::vector<std::string> planners;
  std::vector<std::string> tracks;
  int laps = 5;
  std::uint64_t seed = 0;  // lap i of every pair uses seed + i
  std::filesystem::path out;  // empty: nothing written
  BenchConfig config;
  std::string reference = "local_two_stage";
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

/// One row of summary.csv.
struct EpisodeRecord {
  std::string planner;
  std::string track;
  std::uint64_t seed = 0;
  Pose start;
  Outcome outcome = Outcome::timeout;
  double lap_time = 0.0;
  double coverage = 0.0;
  std::size_t fallbacks = 0;
  std::size_t steps = 0;
  std::uint64_t hash = 0;
  std::string trace;  // relative to the output directory
};

struct TimingStats {
  double mean = 0.0;
  double p95 = 0.0;
};

/// Wall-time statistics over planning steps, in microseconds.
struct EpisodeTiming {
  std::string planner;
  std::string track;
  std::uint64_t seed = 0;
  std::vector<double> perception_us;
  std::vector<double> planning_us;
};

struct ResultRow {
  std::string planner;
  std::string track;
  int laps = 0;
  int completed = 0;
  double completion = 0.0;  // completed / laps
  double mean_lap = std::numeric_limits<double>::quiet_NaN();
  double std_lap = std::numeric_limits<double>::quiet_NaN();  // sample std, 0 for one lap
  double pct_diff = std::numeric_limits<double>::quiet_NaN();  // vs the reference planner on the same track
  double mean_perception_us = std::numeric_limits<double>::quiet_NaN();
  double mean_planning_us = std::numeric_limits<double>::quiet_NaN();
};

struct RaceResult {
  std::vector<EpisodeRecord> episodes;  // sorted by (planner, track, seed)
  std::vector<EpisodeTiming> timings;   // same order
  std::vector<EpisodeTrace> traces;     // same order
  std::vector<ResultRow> table;         // sorted by (track, planner)
};

/// Every (planner, track, lap) episode on a worker pool. With an output
/// directory: traces/<track>/<planner>_<seed>.csv, summary.csv, results.csv,
/// timing.csv, normalised_lap_times.{csv,svg} and speed_<track>.{csv,svg}.
RaceResult run_race(const ExperimentSpec& spec);

/// Per (planner, track) aggregation; lap statistics use completed laps only.
/// The reference row must exist for every track.
std::vector<ResultRow> tabulate(const std::vector<EpisodeRecord>& episodes,
                                const std::vector<EpisodeTiming>& timings, const std::string& reference);

void write_summary_csv(const std::vector<EpisodeRecord>& episodes, const std::filesystem::path& path);
std::vector<EpisodeRecord> read_summary_csv(const std::filesystem::path& path);
/// Lap statistics only, so that identical runs give identical files.
void write_results_csv(const std::vector<ResultRow>& table, const std::string& reference,
                       const std::filesystem::path& path);
void print_results(const std::vector<ResultRow>& table, const std::string& reference, std::ostream& out);

/// Rebuilds the result table from summary.csv and the trace files (lap times
/// recomputed from the finish-line crossing in each trace) and compares it
/// with results.csv. `tracks` must include every track named in the summary.
/// Returns an empty string on success, else the first mismatch.
std::string verify_race(const std::filesystem::path& out, const std::string& reference,
                        const std::vector<Track>& tracks, const BenchConfig& cfg);

/// Mean speed per arc-length bin of the track centreline over every
/// completed lap of one planner. The first `skip_time` seconds of each
/// episode (the launch from rest) are left out. Empty bins are NaN.
struct SpeedProfile {
  std::vector<double> s;      // bin centres
  std::vector<double> speed;
};
SpeedProfile speed_by_arc_length(const Track& track, const std::vector<const EpisodeTrace*>& laps,
                                 double bin = 0.25, double skip_time = 1.5);

struct PlannerTiming {
  std::string planner;
  TimingStats perception;
  TimingStats planning;
  TimingStats total;
  std::size_t samples = 0;
  bool over_deadline = false;  // p95 total above the deadline
};

/// Wall times per planner over every planning step of the given episodes.
std::vector<PlannerTiming> timing_report(const std::vector<EpisodeTiming>& timings, double deadline_us = 40000.0);
void print_timing_report(const std::vector<PlannerTiming>& report, double deadline_us, std::ostream& out);

/// Runs every episode of `spec` (nothing but timing is written) and reports
/// per-planner timings: timing_report.csv and timing_report.svg.
std::vector<PlannerTiming> run_profile(const ExperimentSpec& spec, double deadline_us = 40000.0);

/// Scan and local map at `pose` (default: the track start).
/// Throws Errc::start_in_wall for a pose inside a wall or off the map.
LocalMap extract_at(const Track& track, const std::optional<Pose>& pose, const BenchConfig& cfg);
/// local_map.csv and local_map.svg; returns the map.
LocalMap run_extract(const Track& track, const std::optional<Pose>& pose, const BenchConfig& cfg,
                     const std::filesystem::path& out);

/// One local map per row of a scan log (comma-separated beam distances, an
/// optional header line is skipped) using the configured field of view and
/// range: local_map_<row>.csv. Rows that fail extraction are reported and
/// skipped. Returns the number of maps written.
std::size_t run_extract_log(const std::filesystem::path& scans, const BenchConfig& cfg,
                            const std::filesystem::path& out, std::ostream& log);

/// Without a pose: closed raceline over the full centreline (world frame).
/// With a pose: local plan from that pose at `speed` (vehicle frame).
/// trajectory.csv and trajectory.svg.
Trajectory run_plan(const Track& track, const std::optional<Pose>& pose, double speed, const BenchConfig& cfg,
                    const std::filesystem::path& out);

struct LengthSample {
  double t = 0.0;
  double s = 0.0;          // centreline arc length from the start pose
  double length = 0.0;     // local map centreline length
  double matched = 0.0;
  double projected = 0.0;
  double curvature = 0.0;  // |path curvature| of the vehicle from its steering angle
  double centreline_curvature = 0.0;  // |centreline curvature| at s
};

struct LengthStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

/// Stretch where the vehicle's path curvature exceeds half its lap maximum.
struct CurvatureSpike {
  double start = 0.0;
  double peak = 0.0;  // arc length of the largest curvature in the stretch
  double exit = 0.0;  // where the curvature falls back below the level
};

/// Window where the map length grows by more than `min_jump` within one
/// metre of travel; `top` is where the length peaks at the end of it.
struct LengthRise {
  double start = 0.0;
  double top = 0.0;
  double jump = 0.0;
  double offset = 0.0;  // distance from `top` to the nearest spike's [peak, exit] stretch
};

struct SawtoothCheck {
  std::vector<CurvatureSpike> spikes;
  std::vector<LengthRise> rises;
  std::size_t aligned = 0;          // rises within the tolerance of a spike exit
  std::size_t falling_steps = 0;    // planning steps where the length shrank
  std::size_t steps = 0;
  bool ok = false;  // at least one rise, every rise aligned, length mostly falling
};

struct LengthRun {
  std::string track;
  std::vector<LengthSample> samples;
  LengthStats stats;
  SawtoothCheck sawtooth;
  Outcome outcome = Outcome::timeout;
};

/// Drives one lap of the centreline with pure pursuit at `cfg.lengths_speed`
/// from the start pose, extracting a local map at every planning step.
LengthRun measure_lengths(const Track& track, const BenchConfig& cfg);
LengthStats length_stats(const std::vector<LengthSample>& samples);
/// Sawtooth signature: the length falls on most steps, and every sharp rise
/// peaks within `tolerance` of a curvature spike between its peak and exit.
SawtoothCheck check_sawtooth(const std::vector<LengthSample>& samples, double loop_length, double tolerance = 1.0,
                             double min_jump = 2.0);

/// lengths_<track>.csv/.svg per track and length_stats.csv (statistic column
/// plus one column per track).
std::vector<LengthRun> run_lengths(const std::vector<Track>& tracks, const BenchConfig& cfg,
                                   const std::filesystem::path& out);
void print_length_table(const std::vector<LengthRun>& runs, std::ostream& out);

}  // namespace lmr
