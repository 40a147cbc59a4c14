#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "sagin/config.hpp"
#include "sagin/rng.hpp"

namespace sagin {

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

struct UavControl {
  double heading = 0.0;  // rad
  double speed = 0.0;    // m/s

  UavControl bounded(double v_max) const {
    return {wrap_angle(heading), std::clamp(speed, 0.0, v_max)};
  }
};

struct GaussMarkovParams {
  double alpha = 0.85;
  Vec2 mean_vel;
  double noise_std = 0.3;
};

struct UdMotion {
  Vec2 pos;
  Vec2 vel;
  bool reflected_x = false;
  bool reflected_y = false;
};

namespace detail {

// Mirror a coordinate into [0, hi]; returns true if any reflection happened.
inline bool reflect(double& x, double& v, double hi) {
  bool hit = false;
  for (int guard = 0; guard < 8 && (x < 0.0 || x > hi); ++guard) {
    x = x < 0.0 ? -x : 2.0 * hi - x;
    v = -v;
    hit = true;
  }
  if (x < 0.0 || x > hi) x = std::clamp(x, 0.0, hi);
  return hit;
}

}  // namespace detail

/// Gauss-Markov velocity update followed by a position step; the position
/// is mirrored at the area edges, flipping the affected velocity component.
inline UdMotion step_ud(Vec2 pos, Vec2 vel, const GaussMarkovParams& gm, Vec2 area_max,
                        double tau, Engine& rng) {
  const double a = gm.alpha;
  const double s = std::sqrt(std::max(0.0, 1.0 - a * a)) * gm.noise_std;
  const double nx = gaussian(rng);
  const double ny = gaussian(rng);
  UdMotion m;
  m.vel = {a * vel.x + (1.0 - a) * gm.mean_vel.x + s * nx,
           a * vel.y + (1.0 - a) * gm.mean_vel.y + s * ny};
  m.pos = pos + m.vel * tau;
  m.reflected_x = detail::reflect(m.pos.x, m.vel.x, area_max.x);
  m.reflected_y = detail::reflect(m.pos.y, m.vel.y, area_max.y);
  return m;
}

struct UavMotion {
  Vec2 pos;
  bool boundary_violated = false;
};

inline UavMotion step_uav(Vec2 pos, const UavControl& ctrl, const ScenarioConfig& cfg) {
  const UavControl c = ctrl.bounded(cfg.v_uav_max);
  Vec2 next{pos.x + cfg.slot_len * c.speed * std::cos(c.heading),
            pos.y + cfg.slot_len * c.speed * std::sin(c.heading)};
  UavMotion m;
  m.boundary_violated = next.x < 0.0 || next.x > cfg.area_x_max || next.y < 0.0 ||
                        next.y > cfg.area_y_max;
  m.pos = {std::clamp(next.x, 0.0, cfg.area_x_max), std::clamp(next.y, 0.0, cfg.area_y_max)};
  return m;
}

/// All unordered UAV pairs (a < b) closer than d_safe. UAVs share one
/// altitude so horizontal distance is the full distance.
inline std::vector<std::pair<int, int>> check_safety(const std::vector<Vec2>& uav_pos,
                                                     double d_safe) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(uav_pos.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if ((uav_pos[a] - uav_pos[b]).norm() < d_safe) out.emplace_back(a, b);
  return out;
}

}  // namespace sagin
