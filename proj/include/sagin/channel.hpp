#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sagin/config.hpp"
#include "sagin/rng.hpp"

namespace sagin {

struct LinkBudget {
  double distance = 0.0;   // m
  double elevation = 0.0;  // rad
  double los_prob = 1.0;
  double path_loss = 0.0;  // dB
  double gain = 1.0;       // linear
  double bandwidth = 0.0;  // Hz
  double rate = 0.0;       // bits/s
};

inline double distance_3d(Vec2 ground, Vec2 air, double altitude) {
  return std::hypot((ground - air).norm(), altitude);
}

inline double free_space_loss_db(double distance, double carrier_hz) {
  return 20.0 * std::log10(4.0 * kPi * carrier_hz * distance / kSpeedOfLight);
}

inline double db_to_gain(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

/// Shannon rate B log2(1 + p h / noise).
inline double shannon_rate(double bandwidth, double power, double gain, double noise) {
  return bandwidth * std::log1p(power * gain / noise) / std::log(2.0);
}

/// Elevation angle in radians from a ground point to an aerial node.
inline double elevation_angle(Vec2 ground, Vec2 air, double altitude) {
  return std::asin(std::clamp(altitude / distance_3d(ground, air, altitude), -1.0, 1.0));
}

/// Sigmoid line-of-sight probability in the elevation angle (degrees).
inline double los_probability_at(double elevation_rad, double eps1, double eps2) {
  const double deg = 180.0 * elevation_rad / kPi;
  return 1.0 / (1.0 + eps1 * std::exp(-eps2 * (deg - eps1)));
}

inline double los_probability(Vec2 ud, Vec2 uav, double altitude, double eps1, double eps2) {
  return los_probability_at(elevation_angle(ud, uav, altitude), eps1, eps2);
}

/// UD->UAV path loss in dB: free-space loss plus the LoS/NLoS excess loss.
/// By default the excess is the LoS-probability-weighted mean; with
/// cfg.los_bernoulli a LoS state is drawn from `los_rng`.
inline LinkBudget ud_uav_path_loss(Vec2 ud, Vec2 uav, const ScenarioConfig& cfg,
                                   Engine* los_rng = nullptr) {
  LinkBudget lb;
  lb.distance = distance_3d(ud, uav, cfg.uav_alt);
  lb.elevation = elevation_angle(ud, uav, cfg.uav_alt);
  lb.los_prob = los_probability_at(lb.elevation, cfg.los_eps1, cfg.los_eps2);
  double excess = lb.los_prob * cfg.excess_loss_los_db + (1.0 - lb.los_prob) * cfg.excess_loss_nlos_db;
  if (cfg.los_bernoulli) {
    if (los_rng == nullptr) throw std::invalid_argument("Bernoulli LoS needs an rng stream");
    excess = std::bernoulli_distribution(lb.los_prob)(*los_rng) ? cfg.excess_loss_los_db
                                                                : cfg.excess_loss_nlos_db;
  }
  lb.path_loss = free_space_loss_db(lb.distance, cfg.carrier_hz) + excess;
  lb.gain = db_to_gain(lb.path_loss);
  return lb;
}

/// UD->UAV link with the UAV bandwidth split equally across the
/// `num_served` UDs it serves this slot (the UD itself included).
inline LinkBudget ud_uav_rate(Vec2 ud, Vec2 uav, int num_served, double tx_power,
                              const ScenarioConfig& cfg, Engine* los_rng = nullptr) {
  if (num_served < 1) throw std::invalid_argument("ud_uav_rate: num_served must be >= 1");
  LinkBudget lb = ud_uav_path_loss(ud, uav, cfg, los_rng);
  lb.bandwidth = cfg.bandwidth_uav_total / num_served;
  lb.rate = shannon_rate(lb.bandwidth, tx_power, lb.gain, cfg.noise_w);
  return lb;
}

/// Weibull-distributed rain attenuation in dB.
inline double sample_rain_attenuation(double shape, double scale_db, Engine& rng) {
  if (!(shape > 0.0) || !(scale_db > 0.0))
    throw std::invalid_argument("Weibull shape and scale must be > 0");
  return std::weibull_distribution<double>(shape, scale_db)(rng);
}

/// UD->satellite Ka-band link: free-space loss plus rain attenuation, less
/// the configured combined antenna gain (0 dB by default).
inline LinkBudget ud_sat_rate(Vec2 ud, Vec2 sat, double tx_power, double rain_db,
                              const ScenarioConfig& cfg) {
  LinkBudget lb;
  lb.distance = distance_3d(ud, sat, cfg.sat_alt);
  lb.elevation = elevation_angle(ud, sat, cfg.sat_alt);
  lb.path_loss = free_space_loss_db(lb.distance, cfg.carrier_ka_hz) + rain_db - cfg.sat_link_gain_db;
  lb.gain = db_to_gain(lb.path_loss);
  lb.bandwidth = cfg.bandwidth_sat;
  lb.rate = shannon_rate(lb.bandwidth, tx_power, lb.gain, cfg.noise_sat_w);
  return lb;
}

}  // namespace sagin
