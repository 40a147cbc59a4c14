#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sagin/rng.hpp"

namespace sagin {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool operator==(const Range&) const = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

/// Every physical, channel, task, energy and learning parameter of a run.
/// Units are SI throughout (m, s, Hz, W, J, bits, cycles).
struct ScenarioConfig {
  // scenario
  double area_x_max = 1000.0;
  double area_y_max = 1000.0;
  int num_uds = 15;
  int num_uavs = 3;
  int num_sats = 1;
  int horizon = 100;
  double slot_len = 1.0;
  double uav_alt = 100.0;
  double sat_alt = 1.0e6;
  std::uint64_t seed = 1;

  // mobility
  double v_uav_max = 25.0;
  double safety_dist = 10.0;
  double gm_alpha = 0.85;
  double gm_mean_speed = 1.0;
  double gm_noise_std = 0.3;

  // task
  Range task_size_bits{1.0e6, 5.0e6};
  Range comp_density{1000.0 / 8.0, 1500.0 / 8.0};  // cycles per bit
  Range deadline_s{1.0, 5.0};

  // compute
  double f_loc = 0.3e9;
  Range f_uav_max{2.0e9, 4.0e9};
  double capacitance = 1.0e-27;
  double uav_cycle_energy = 1.0e-9;

  // channel
  Range tx_power_w{dbm_to_watts(20.0), dbm_to_watts(25.0)};
  double bandwidth_uav_total = 10.0e6;
  double bandwidth_sat = 1.0e6;
  double noise_w = 1.58e-13;
  double noise_sat_w = 1.58e-13;
  double carrier_hz = 5.8e9;
  double carrier_ka_hz = 30.0e9;
  double los_eps1 = 4.88;
  double los_eps2 = 0.43;
  double excess_loss_los_db = 0.1;
  double excess_loss_nlos_db = 21.0;
  double rain_shape = 2.0;
  double rain_scale_db = 3.0;
  bool los_bernoulli = false;
  double sat_link_gain_db = 0.0;

  // cloud
  double rate_isl = 100.0e6;
  double rate_sg = 100.0e6;
  Vec2 gs_pos{5.0e5, 5.0e5};
  double sat_spacing = 1.0e6;
  double sat_gs_range = 2.0e6;
  Vec2 sat_velocity{0.0, 0.0};

  // energy
  double uav_energy_max = 36.0e3;
  double ud_energy_max = 3600.0 * 0.3;
  std::array<double, 4> prop_delta{4.0, 2.0, 3.0, 1.0};
  double rotor_tip_speed = 120.0;

  // cost
  double w_delay = 0.5;
  double w_energy = 0.5;

  // reward
  double w_system = 1.0;
  double w_individual = 0.5;
  double penalty_deadline = 10.0;
  double penalty_boundary = 5.0;
  double penalty_collision = 10.0;
  double penalty_energy = 200.0;
  double reward_cost_ref = 10.0;
  bool uav_reward_literal_sign = false;
  bool uav_obs_served_positions = false;

  // game
  double coverage_radius = 300.0;
  int max_sweeps_per_ud = 50;

  // learning
  double gamma = 0.95;
  double lr_actor = 5.0e-4;
  double lr_critic = 5.0e-4;
  double tau_target = 5.0e-3;
  int policy_delay = 5;
  int buffer_size = 100000;
  int batch_size = 256;
  int warmup = 256;
  double noise_std = 0.1;
  double noise_decay = 0.999;
  std::vector<int> hidden{64, 64};

  bool operator==(const ScenarioConfig&) const = default;
};

/// Visits every config field as (section, key, member). The single list
/// drives serialization, parsing and unknown-key detection.
template <class Cfg, class V>
void visit_fields(Cfg& c, V&& v) {
  v("scenario", "area_x_max", c.area_x_max);
  v("scenario", "area_y_max", c.area_y_max);
  v("scenario", "num_uds", c.num_uds);
  v("scenario", "num_uavs", c.num_uavs);
  v("scenario", "num_sats", c.num_sats);
  v("scenario", "horizon", c.horizon);
  v("scenario", "slot_len", c.slot_len);
  v("scenario", "uav_alt", c.uav_alt);
  v("scenario", "sat_alt", c.sat_alt);
  v("scenario", "seed", c.seed);

  v("mobility", "v_uav_max", c.v_uav_max);
  v("mobility", "safety_dist", c.safety_dist);
  v("mobility", "gm_alpha", c.gm_alpha);
  v("mobility", "gm_mean_speed", c.gm_mean_speed);
  v("mobility", "gm_noise_std", c.gm_noise_std);

  v("task", "task_size_bits", c.task_size_bits);
  v("task", "comp_density_cycles_per_bit", c.comp_density);
  v("task", "deadline_s", c.deadline_s);

  v("compute", "f_loc", c.f_loc);
  v("compute", "f_uav_max", c.f_uav_max);
  v("compute", "capacitance", c.capacitance);
  v("compute", "uav_cycle_energy", c.uav_cycle_energy);

  v("channel", "tx_power_w", c.tx_power_w);
  v("channel", "bandwidth_uav_total", c.bandwidth_uav_total);
  v("channel", "bandwidth_sat", c.bandwidth_sat);
  v("channel", "noise_w", c.noise_w);
  v("channel", "noise_sat_w", c.noise_sat_w);
  v("channel", "carrier_hz", c.carrier_hz);
  v("channel", "carrier_ka_hz", c.carrier_ka_hz);
  v("channel", "los_eps1", c.los_eps1);
  v("channel", "los_eps2", c.los_eps2);
  v("channel", "excess_loss_los_db", c.excess_loss_los_db);
  v("channel", "excess_loss_nlos_db", c.excess_loss_nlos_db);
  v("channel", "rain_shape", c.rain_shape);
  v("channel", "rain_scale_db", c.rain_scale_db);
  v("channel", "los_bernoulli", c.los_bernoulli);
  v("channel", "sat_link_gain_db", c.sat_link_gain_db);

  v("cloud", "rate_isl", c.rate_isl);
  v("cloud", "rate_sg", c.rate_sg);
  v("cloud", "gs_pos", c.gs_pos);
  v("cloud", "sat_spacing", c.sat_spacing);
  v("cloud", "sat_gs_range", c.sat_gs_range);
  v("cloud", "sat_velocity", c.sat_velocity);

  v("energy", "uav_energy_max", c.uav_energy_max);
  v("energy", "ud_energy_max", c.ud_energy_max);
  v("energy", "prop_delta", c.prop_delta);
  v("energy", "rotor_tip_speed", c.rotor_tip_speed);

  v("cost", "w_delay", c.w_delay);
  v("cost", "w_energy", c.w_energy);

  v("reward", "w_system", c.w_system);
  v("reward", "w_individual", c.w_individual);
  v("reward", "penalty_deadline", c.penalty_deadline);
  v("reward", "penalty_boundary", c.penalty_boundary);
  v("reward", "penalty_collision", c.penalty_collision);
  v("reward", "penalty_energy", c.penalty_energy);
  v("reward", "cost_ref", c.reward_cost_ref);
  v("reward", "uav_reward_literal_sign", c.uav_reward_literal_sign);
  v("reward", "uav_obs_served_positions", c.uav_obs_served_positions);

  v("game", "coverage_radius", c.coverage_radius);
  v("game", "max_sweeps_per_ud", c.max_sweeps_per_ud);

  v("learning", "gamma", c.gamma);
  v("learning", "lr_actor", c.lr_actor);
  v("learning", "lr_critic", c.lr_critic);
  v("learning", "tau_target", c.tau_target);
  v("learning", "policy_delay", c.policy_delay);
  v("learning", "buffer_size", c.buffer_size);
  v("learning", "batch_size", c.batch_size);
  v("learning", "warmup", c.warmup);
  v("learning", "noise_std", c.noise_std);
  v("learning", "noise_decay", c.noise_decay);
  v("learning", "hidden", c.hidden);
}

inline void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.lo, r.hi}); }
inline void from_json(const nlohmann::json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [low, high]");
  r.lo = j.at(0).get<double>();
  r.hi = j.at(1).get<double>();
}
inline void to_json(nlohmann::json& j, const Vec2& p) { j = nlohmann::json::array({p.x, p.y}); }
inline void from_json(const nlohmann::json& j, Vec2& p) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y]");
  p.x = j.at(0).get<double>();
  p.y = j.at(1).get<double>();
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(cfg, [&](const char* sec, const char* key, const auto& field) {
    j[sec][key] = field;
  });
  return j;
}

inline std::string serialize_config(const ScenarioConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

/// Parses a config document. Missing keys keep their defaults; unknown
/// sections or keys raise ConfigError. `tx_power_dbm` and
/// `comp_density_cycles_per_byte` are accepted as input-only spellings.
inline ScenarioConfig config_from_json(nlohmann::json j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  if (j.contains("channel") && j["channel"].contains("tx_power_dbm")) {
    if (j["channel"].contains("tx_power_w"))
      throw ConfigError("channel: give tx_power_w or tx_power_dbm, not both");
    Range dbm = j["channel"]["tx_power_dbm"].get<Range>();
    j["channel"]["tx_power_w"] = Range{dbm_to_watts(dbm.lo), dbm_to_watts(dbm.hi)};
    j["channel"].erase("tx_power_dbm");
  }
  if (j.contains("task") && j["task"].contains("comp_density_cycles_per_byte")) {
    if (j["task"].contains("comp_density_cycles_per_bit"))
      throw ConfigError("task: give comp density per bit or per byte, not both");
    Range cpb = j["task"]["comp_density_cycles_per_byte"].get<Range>();
    j["task"]["comp_density_cycles_per_bit"] = Range{cpb.lo / 8.0, cpb.hi / 8.0};
    j["task"].erase("comp_density_cycles_per_byte");
  }

  ScenarioConfig cfg;
  nlohmann::json seen = nlohmann::json::object();
  visit_fields(cfg, [&](const char* sec, const char* key, auto& field) {
    seen[sec][key] = true;
    if (!j.contains(sec) || !j[sec].contains(key)) return;
    try {
      j[sec][key].get_to(field);
    } catch (const std::exception& e) {
      throw ConfigError(std::string(sec) + "." + key + ": " + e.what());
    }
  });
  for (auto& [sec, body] : j.items()) {
    if (!seen.contains(sec)) throw ConfigError("unknown config section '" + sec + "'");
    if (!body.is_object()) throw ConfigError("section '" + sec + "' must be an object");
    for (auto& [key, _] : body.items())
      if (!seen[sec].contains(key)) throw ConfigError("unknown config key '" + sec + "." + key + "'");
  }
  return cfg;
}

inline ScenarioConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(std::move(j));
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Content hash of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(cfg).dump())));
  return buf;
}

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(const std::string& field) const {
    for (const auto& v : violations)
      if (v.field == field) return true;
    return false;
  }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) s += v.field + ": " + v.message + "\n";
    return s;
  }
};

inline ValidationReport validate_config(const ScenarioConfig& c) {
  ValidationReport r;
  auto fail = [&](const char* f, const char* m) { r.violations.push_back({f, m}); };
  auto positive = [&](const char* f, double v) {
    if (!(v > 0.0)) fail(f, "must be > 0");
  };
  auto nonneg = [&](const char* f, double v) {
    if (!(v >= 0.0)) fail(f, "must be >= 0");
  };
  auto range = [&](const char* f, const Range& v, bool strictly_positive) {
    if (!(v.lo <= v.hi)) fail(f, "range must satisfy low <= high");
    else if (strictly_positive && !(v.lo > 0.0)) fail(f, "range must be > 0");
  };

  positive("area_x_max", c.area_x_max);
  positive("area_y_max", c.area_y_max);
  if (c.num_uds < 1) fail("num_uds", "must be >= 1");
  if (c.num_uavs < 1) fail("num_uavs", "must be >= 1");
  if (c.num_sats < 1) fail("num_sats", "must be >= 1");
  if (c.horizon < 1) fail("horizon", "must be >= 1");
  positive("slot_len", c.slot_len);
  positive("uav_alt", c.uav_alt);
  positive("sat_alt", c.sat_alt);

  positive("v_uav_max", c.v_uav_max);
  positive("safety_dist", c.safety_dist);
  if (!(c.gm_alpha >= 0.0 && c.gm_alpha <= 1.0)) fail("gm_alpha", "must be in [0,1]");
  nonneg("gm_mean_speed", c.gm_mean_speed);
  nonneg("gm_noise_std", c.gm_noise_std);

  range("task_size_bits", c.task_size_bits, true);
  range("comp_density", c.comp_density, true);
  range("deadline_s", c.deadline_s, true);

  positive("f_loc", c.f_loc);
  range("f_uav_max", c.f_uav_max, true);
  positive("capacitance", c.capacitance);
  positive("uav_cycle_energy", c.uav_cycle_energy);

  range("tx_power_w", c.tx_power_w, true);
  positive("bandwidth_uav_total", c.bandwidth_uav_total);
  positive("bandwidth_sat", c.bandwidth_sat);
  positive("noise_w", c.noise_w);
  positive("noise_sat_w", c.noise_sat_w);
  positive("carrier_hz", c.carrier_hz);
  positive("carrier_ka_hz", c.carrier_ka_hz);
  positive("los_eps1", c.los_eps1);
  positive("los_eps2", c.los_eps2);
  nonneg("excess_loss_los_db", c.excess_loss_los_db);
  nonneg("excess_loss_nlos_db", c.excess_loss_nlos_db);
  positive("rain_shape", c.rain_shape);
  positive("rain_scale_db", c.rain_scale_db);

  positive("rate_isl", c.rate_isl);
  positive("rate_sg", c.rate_sg);
  positive("sat_spacing", c.sat_spacing);
  positive("sat_gs_range", c.sat_gs_range);

  positive("uav_energy_max", c.uav_energy_max);
  positive("ud_energy_max", c.ud_energy_max);
  for (double d : c.prop_delta) nonneg("prop_delta", d);
  positive("rotor_tip_speed", c.rotor_tip_speed);

  nonneg("w_delay", c.w_delay);
  nonneg("w_energy", c.w_energy);
  nonneg("w_system", c.w_system);
  nonneg("w_individual", c.w_individual);
  nonneg("penalty_deadline", c.penalty_deadline);
  nonneg("penalty_boundary", c.penalty_boundary);
  nonneg("penalty_collision", c.penalty_collision);
  nonneg("penalty_energy", c.penalty_energy);
  positive("cost_ref", c.reward_cost_ref);

  positive("coverage_radius", c.coverage_radius);
  if (c.max_sweeps_per_ud < 1) fail("max_sweeps_per_ud", "must be >= 1");

  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) fail("gamma", "must be in [0,1)");
  positive("lr_actor", c.lr_actor);
  positive("lr_critic", c.lr_critic);
  if (!(c.tau_target > 0.0 && c.tau_target <= 1.0)) fail("zeta_t", "must be in (0,1]");
  if (c.policy_delay < 1) fail("policy_delay", "must be >= 1");
  if (c.buffer_size < 1) fail("buffer_size", "must be >= 1");
  if (c.batch_size < 1) fail("batch_size", "must be >= 1");
  if (c.warmup < 1) fail("warmup", "must be >= 1");
  nonneg("noise_std", c.noise_std);
  if (!(c.noise_decay > 0.0 && c.noise_decay <= 1.0)) fail("noise_decay", "must be in (0,1]");
  if (c.hidden.empty()) fail("hidden", "need at least one hidden layer");
  for (int h : c.hidden)
    if (h < 1) fail("hidden", "layer widths must be >= 1");
  return r;
}

inline void require_valid(const ScenarioConfig& c) {
  auto r = validate_config(c);
  if (!r.ok()) {
    const auto& v = r.violations.front();
    throw ConfigError(v.field + " " + v.message);
  }
}

}  // namespace sagin
