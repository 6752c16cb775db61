#include "lmr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "lmr/error.hpp"

namespace lmr {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw Error(Errc::invalid_argument, "config " + key + ": not a number: '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw Error(Errc::invalid_argument, "config " + key + ": not an integer: '" + text + "'");
  }
  return v;
}

// "0.1:5, 0.25:3" -> bands
std::vector<FtgSpeedBand> parse_bands(const std::string& key, const std::string& text) {
  std::vector<FtgSpeedBand> bands;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(Errc::invalid_argument, "config " + key + ": expected steer:speed");
    bands.push_back({parse_double(key, item.substr(0, colon)), parse_double(key, item.substr(colon + 1))});
  }
  return bands;
}

std::string format_bands(const std::vector<FtgSpeedBand>& bands) {
  std::string out;
  for (const auto& b : bands) {
    if (!out.empty()) out += ", ";
    out += format_double(b.max_abs_steer) + ":" + format_double(b.speed);
  }
  return out;
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<Binding> bindings(BenchConfig& c) {
  std::vector<Binding> out;
  auto num = [&out](const char* section, const char* key, double& field) {
    const std::string name = std::string(section) + "." + key;
    out.push_back({section, key, [&field, name](const std::string& v) { field = parse_double(name, v); },
                   [&field] { return format_double(field); }});
  };
  auto integer = [&out](const char* section, const char* key, int& field) {
    const std::string name = std::string(section) + "." + key;
    out.push_back({section, key, [&field, name](const std::string& v) { field = parse_int(name, v); },
                   [&field] { return std::to_string(field); }});
  };

  num("vehicle", "v_max", c.vehicle.v_max);
  num("vehicle", "a_long_max", c.vehicle.a_long_max);
  num("vehicle", "a_lat_max", c.vehicle.a_lat_max);
  num("vehicle", "wheelbase", c.vehicle.wheelbase);
  num("vehicle", "max_steer", c.vehicle.max_steer);
  num("vehicle", "half_width", c.vehicle.half_width);
  num("vehicle", "max_steer_rate", c.vehicle.max_steer_rate);

  num("extraction", "gap_threshold", c.extraction.gap_threshold);
  num("extraction", "spacing", c.extraction.spacing);
  num("extraction", "w_max", c.extraction.w_max);
  num("extraction", "w_track", c.extraction.w_track);
  num("extraction", "rear_cutoff", c.extraction.rear_cutoff);

  num("pure_pursuit", "lookahead_base", c.pure_pursuit.lookahead_base);
  num("pure_pursuit", "lookahead_gain", c.pure_pursuit.lookahead_gain);

  num("ftg", "bubble_radius", c.ftg.bubble_radius);
  num("ftg", "safe_distance", c.ftg.safe_distance);
  num("ftg", "fov_clip", c.ftg.fov_clip);
  num("ftg", "disparity_threshold", c.ftg.disparity_threshold);
  num("ftg", "disparity_pad", c.ftg.disparity_pad);
  out.push_back({"ftg", "speed_bands", [&c](const std::string& v) { c.ftg.speed_bands = parse_bands("ftg.speed_bands", v); },
                 [&c] { return format_bands(c.ftg.speed_bands); }});
  num("ftg", "slow_speed", c.ftg.slow_speed);

  integer("mpcc", "horizon", c.mpcc.horizon);
  num("mpcc", "dt", c.mpcc.dt);
  num("mpcc", "q_contour", c.mpcc.q_contour);
  num("mpcc", "q_lag", c.mpcc.q_lag);
  num("mpcc", "gamma", c.mpcc.gamma);
  num("mpcc", "r_steer", c.mpcc.r_steer);
  num("mpcc", "r_speed", c.mpcc.r_speed);
  num("mpcc", "r_progress", c.mpcc.r_progress);
  num("mpcc", "slack_weight", c.mpcc.slack_weight);
  num("mpcc", "track_margin", c.mpcc.track_margin);
  num("mpcc", "max_progress_rate_factor", c.mpcc.max_progress_rate_factor);
  integer("mpcc", "max_iterations", c.mpcc.max_iterations);
  num("mpcc", "tolerance", c.mpcc.tolerance);
  num("mpcc", "trust_steer", c.mpcc.trust_steer);
  num("mpcc", "trust_speed", c.mpcc.trust_speed);
  num("mpcc", "trust_progress", c.mpcc.trust_progress);

  num("sim", "physics_dt", c.sim.physics_dt);
  integer("sim", "steps_per_plan", c.sim.steps_per_plan);
  num("sim", "timeout", c.sim.timeout);
  num("sim", "lap_coverage", c.sim.lap_coverage);
  integer("sim", "n_beams", c.sim.lidar.n_beams);
  num("sim", "fov", c.sim.lidar.fov);
  num("sim", "max_range", c.sim.lidar.max_range);

  num("planner", "global_margin", c.global_margin);
  num("planner", "local_margin", c.local_plan.margin);
  num("planner", "margin_ramp", c.local_plan.margin_ramp);
  num("planner", "smoothing", c.local_plan.smoothing);
  num("planner", "start_lead", c.local_plan.start_lead);
  num("planner", "continuity_heading", c.local_plan.continuity_heading);
  num("planner", "v_safe", c.local_plan.terminal.v_safe);
  num("planner", "braking_distance", c.local_plan.terminal.braking_distance);
  num("planner", "localisation_us", c.localisation_us);
  num("planner", "lengths_speed", c.lengths_speed);
  return out;
}

Binding& find_binding(std::vector<Binding>& table, const std::string& section, const std::string& key) {
  for (auto& b : table) {
    if (b.section == section && b.key == key) return b;
  }
  throw Error(Errc::invalid_argument, "unknown config key " + section + "." + key);
}

}  // namespace

BenchConfig BenchConfig::resolved() const {
  BenchConfig r = *this;
  r.pure_pursuit.wheelbase = vehicle.wheelbase;
  r.pure_pursuit.max_steer = vehicle.max_steer;
  r.ftg.max_steer = vehicle.max_steer;
  r.mpcc.limits = vehicle;
  return r;
}

void BenchConfig::validate() const {
  const BenchConfig r = resolved();
  r.vehicle.validate();
  r.pure_pursuit.validate();
  r.ftg.validate();
  r.mpcc.validate();
  const auto& e = r.extraction;
  if (!(e.gap_threshold > 0.0 && e.spacing > 0.0 && e.w_max > 0.0 && e.w_track > 0.0)) {
    throw Error(Errc::invalid_argument, "extraction settings must be positive");
  }
  const auto& s = r.sim;
  if (!(s.physics_dt > 0.0 && s.steps_per_plan >= 1 && s.timeout > 0.0 && s.lap_coverage > 0.0 &&
        s.lap_coverage <= 1.0 && s.lidar.n_beams >= 2 && s.lidar.fov > 0.0 && s.lidar.max_range > 0.0)) {
    throw Error(Errc::invalid_argument, "sim settings out of range");
  }
  const auto& p = r.local_plan;
  if (!(global_margin >= 0.0 && p.margin >= 0.0 && p.margin_ramp >= 0.0 && p.smoothing >= 0.0 &&
        p.start_lead >= 0.0 && p.continuity_heading >= 0.0 && p.terminal.v_safe >= 0.0 &&
        p.terminal.braking_distance >= 0.0 && localisation_us >= 0.0 && lengths_speed > 0.0)) {
    throw Error(Errc::invalid_argument, "planner settings out of range");
  }
}

BenchConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::missing_file, "config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::malformed_metadata, "config " + path.string() + ": " + e.message());
  }
  BenchConfig cfg;
  auto table = bindings(cfg);
  for (const auto& [section, keys] : tree) {
    if (keys.empty()) throw Error(Errc::malformed_metadata, "config: key outside a section: " + section);
    for (const auto& [key, value] : keys) find_binding(table, section, key).set(value.data());
  }
  cfg.validate();
  return cfg;
}

void apply_override(BenchConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw Error(Errc::invalid_argument, "override must look like section.key=value: " + assignment);
  }
  auto table = bindings(cfg);
  find_binding(table, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)))
      .set(assignment.substr(eq + 1));
}

void write_config(const BenchConfig& cfg, std::ostream& out) {
  BenchConfig copy = cfg;
  std::string section;
  for (const auto& b : bindings(copy)) {
    if (b.section != section) {
      out << (section.empty() ? "" : "\n") << '[' << b.section << "]\n";
      section = b.section;
    }
    out << b.key << " = " << b.get() << '\n';
  }
}

}  // namespace lmr
