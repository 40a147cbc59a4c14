#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "sagin/config.hpp"
#include "sagin/rng.hpp"

namespace sagin {

/// One computation task: size in bits, density in cycles/bit, deadline in s.
struct Task {
  double size_bits = 0.0;
  double density = 0.0;
  double deadline = 0.0;

  double cycles() const { return size_bits * density; }
  bool operator==(const Task&) const = default;
};

/// Snapshot of every entity at the start of a slot.
struct WorldState {
  int slot = 0;
  std::vector<Vec2> ud_pos;
  std::vector<Vec2> ud_vel;
  std::vector<Vec2> ud_mean_vel;
  std::vector<double> ud_tx_power;  // W, fixed per episode
  std::vector<double> ud_energy;    // J remaining
  std::vector<Task> tasks;

  std::vector<Vec2> uav_pos;
  std::vector<double> uav_fmax;    // cycles/s, fixed per episode
  std::vector<double> uav_energy;  // J remaining

  std::vector<Vec2> sat_pos;  // horizontal; altitude is cfg.sat_alt

  int num_uds() const { return static_cast<int>(ud_pos.size()); }
  int num_uavs() const { return static_cast<int>(uav_pos.size()); }
  int num_sats() const { return static_cast<int>(sat_pos.size()); }
  bool operator==(const WorldState&) const = default;
};

inline Task sample_task(const ScenarioConfig& cfg, Engine& rng) {
  Task t;
  t.size_bits = uniform(rng, cfg.task_size_bits.lo, cfg.task_size_bits.hi);
  t.density = uniform(rng, cfg.comp_density.lo, cfg.comp_density.hi);
  t.deadline = uniform(rng, cfg.deadline_s.lo, cfg.deadline_s.hi);
  return t;
}

/// UAV spawn boxes for the first three UAVs; further UAVs spawn anywhere.
inline constexpr std::array<std::array<double, 4>, 3> kUavSpawnBoxes{{
    {150.0, 250.0, 150.0, 250.0},
    {750.0, 850.0, 150.0, 250.0},
    {450.0, 550.0, 750.0, 850.0},
}};

/// Satellites are laid out along the x axis from the area centre, spaced by
/// cfg.sat_spacing, satellite 0 at the centre.
inline std::vector<Vec2> initial_sat_positions(const ScenarioConfig& cfg) {
  std::vector<Vec2> out;
  const Vec2 centre{cfg.area_x_max / 2.0, cfg.area_y_max / 2.0};
  for (int n = 0; n < cfg.num_sats; ++n) out.push_back({centre.x - n * cfg.sat_spacing, centre.y});
  return out;
}

inline WorldState init_world(const ScenarioConfig& cfg, RngStreams& streams) {
  require_valid(cfg);
  Engine& rng = streams.init;
  WorldState w;
  w.slot = 0;
  for (int i = 0; i < cfg.num_uds; ++i) {
    w.ud_pos.push_back({uniform(rng, 0.0, cfg.area_x_max), uniform(rng, 0.0, cfg.area_y_max)});
    const double heading = uniform(rng, -kPi, kPi);
    const Vec2 mean{cfg.gm_mean_speed * std::cos(heading), cfg.gm_mean_speed * std::sin(heading)};
    w.ud_mean_vel.push_back(mean);
    w.ud_vel.push_back(mean);
    w.ud_tx_power.push_back(
        dbm_to_watts(uniform(rng, watts_to_dbm(cfg.tx_power_w.lo), watts_to_dbm(cfg.tx_power_w.hi))));
    w.ud_energy.push_back(cfg.ud_energy_max);
  }
  for (int u = 0; u < cfg.num_uavs; ++u) {
    Vec2 p;
    if (u < static_cast<int>(kUavSpawnBoxes.size())) {
      const auto& b = kUavSpawnBoxes[u];
      p = {uniform(rng, b[0], b[1]), uniform(rng, b[2], b[3])};
      p.x = std::clamp(p.x, 0.0, cfg.area_x_max);
      p.y = std::clamp(p.y, 0.0, cfg.area_y_max);
    } else {
      p = {uniform(rng, 0.0, cfg.area_x_max), uniform(rng, 0.0, cfg.area_y_max)};
    }
    w.uav_pos.push_back(p);
    w.uav_fmax.push_back(uniform(rng, cfg.f_uav_max.lo, cfg.f_uav_max.hi));
    w.uav_energy.push_back(cfg.uav_energy_max);
  }
  w.sat_pos = initial_sat_positions(cfg);
  for (int i = 0; i < cfg.num_uds; ++i) w.tasks.push_back(sample_task(cfg, streams.tasks));
  return w;
}

inline WorldState init_world(const ScenarioConfig& cfg, std::uint64_t seed) {
  RngStreams streams(seed);
  return init_world(cfg, streams);
}

}  // namespace sagin
