#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "sagin/config.hpp"
#include "sagin/world.hpp"

namespace sagin {

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class CloudUnreachable : public std::runtime_error {
 public:
  CloudUnreachable() : std::runtime_error("cloud unreachable") {}
};

struct LocalOutcome {
  double delay = 0.0;
  double energy = 0.0;
};

/// Local execution of the (1 - ratio) share of a task.
inline LocalOutcome local_outcome(const Task& task, double ratio, double f_loc,
                                  double capacitance) {
  const double cycles = task.density * (1.0 - ratio) * task.size_bits;
  return {cycles / f_loc, capacitance * f_loc * f_loc * cycles};
}

struct EdgeOutcome {
  double tx_delay = 0.0;
  double comp_delay = 0.0;
  double delay = 0.0;
  double ud_energy = 0.0;
  double uav_energy = 0.0;
};

/// Offloading the `ratio` share to a UAV: upload at `rate`, execute with
/// `f_alloc` cycles/s. Result feedback is not modelled.
inline EdgeOutcome edge_outcome(const Task& task, double ratio, double rate, double f_alloc,
                                double tx_power, double uav_cycle_energy) {
  EdgeOutcome o;
  if (ratio <= 0.0) return o;
  if (!(f_alloc > 0.0)) throw ContractViolation("offloaded work with zero resources");
  if (!(rate > 0.0)) throw ContractViolation("offloaded work over a zero-rate link");
  const double bits = ratio * task.size_bits;
  const double cycles = task.density * bits;
  o.tx_delay = bits / rate;
  o.comp_delay = cycles / f_alloc;
  o.delay = o.tx_delay + o.comp_delay;
  o.ud_energy = tx_power * o.tx_delay;
  o.uav_energy = cycles * uav_cycle_energy;
  return o;
}

struct PropulsionResult {
  double energy = 0.0;  // J over the slot
  bool clamped = false;
};

/// Rotary-wing propulsion: blade profile + parasite + induced terms, times
/// the slot length. delta = (blade, induced, induced-offset, parasite).
/// Negative instantaneous power is clamped to zero.
inline PropulsionResult propulsion_energy(double v, const std::array<double, 4>& delta,
                                          double v_tip, double tau) {
  const double v2 = v * v;
  const double blade = delta[0] * (1.0 + 3.0 * v2 / (v_tip * v_tip));
  const double parasite = delta[3] * v2 * v;
  const double induced = delta[1] * std::sqrt(std::sqrt(delta[2] + v2 * v2 / 4.0)) - v2 / 2.0;
  const double power = blade + parasite + induced;
  if (power < 0.0) return {0.0, true};
  return {power * tau, false};
}

/// Satellites, their inter-satellite links and which of them see the GS.
struct Constellation {
  std::vector<Vec2> pos;  // horizontal
  double altitude = 0.0;
  std::vector<std::vector<int>> links;
  std::vector<bool> gs_visible;
  Vec2 gs_pos;

  int size() const { return static_cast<int>(pos.size()); }
};

/// Ring topology (n <-> n+1 mod N); a satellite sees the GS when its
/// horizontal distance to the GS is within cfg.sat_gs_range.
inline Constellation make_constellation(const ScenarioConfig& cfg, const std::vector<Vec2>& sat_pos) {
  Constellation c;
  c.pos = sat_pos;
  c.altitude = cfg.sat_alt;
  c.gs_pos = cfg.gs_pos;
  const int n = c.size();
  c.links.assign(n, {});
  for (int k = 0; k < n && n > 1; ++k) {
    const int next = (k + 1) % n;
    if (next == k) continue;
    auto add = [&](int a, int b) {
      if (std::find(c.links[a].begin(), c.links[a].end(), b) == c.links[a].end())
        c.links[a].push_back(b);
    };
    add(k, next);
    add(next, k);
  }
  for (const auto& p : sat_pos) c.gs_visible.push_back((p - cfg.gs_pos).norm() <= cfg.sat_gs_range);
  return c;
}

struct CloudRoute {
  int exit_sat = -1;
  int hops = 0;
  double chain_distance = 0.0;  // m, along the ISL chain
  double gs_distance = 0.0;     // m, exit satellite to GS
};

/// Fewest-hop ISL route from `source` to a GS-visible satellite; ties on hop
/// count go to the shorter chain.
inline CloudRoute route_to_ground(const Constellation& c, int source) {
  const int n = c.size();
  if (source < 0 || source >= n) throw std::out_of_range("route_to_ground: bad satellite");
  using Key = std::pair<int, double>;
  std::vector<Key> best(n, {std::numeric_limits<int>::max(), 0.0});
  using Item = std::tuple<int, double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  best[source] = {0, 0.0};
  open.emplace(0, 0.0, source);
  while (!open.empty()) {
    auto [h, d, k] = open.top();
    open.pop();
    if (Key{h, d} != best[k]) continue;
    if (c.gs_visible[k]) {
      CloudRoute r;
      r.exit_sat = k;
      r.hops = h;
      r.chain_distance = d;
      r.gs_distance = std::hypot((c.pos[k] - c.gs_pos).norm(), c.altitude);
      return r;
    }
    for (int nb : c.links[k]) {
      const Key cand{h + 1, d + (c.pos[k] - c.pos[nb]).norm()};
      if (cand < best[nb]) {
        best[nb] = cand;
        open.emplace(cand.first, cand.second, nb);
      }
    }
  }
  throw CloudUnreachable();
}

struct CloudOutcome {
  double upload_delay = 0.0;
  double forward_delay = 0.0;
  double download_delay = 0.0;
  double propagation_delay = 0.0;
  double delay = 0.0;
  double ud_energy = 0.0;
  int hops = 0;
};

/// Cloud execution via satellite relay: upload, ISL forwarding, downlink to
/// the GS, and round-trip propagation. Cloud compute time is neglected.
inline CloudOutcome cloud_outcome(const Task& task, double ratio, double rate_up,
                                  double ud_sat_distance, const CloudRoute& route,
                                  double tx_power, const ScenarioConfig& cfg) {
  CloudOutcome o;
  o.hops = route.hops;
  if (ratio <= 0.0) return o;
  if (!(rate_up > 0.0)) throw ContractViolation("offloaded work over a zero-rate link");
  const double bits = ratio * task.size_bits;
  o.upload_delay = bits / rate_up;
  o.forward_delay = route.hops * bits / cfg.rate_isl;
  o.download_delay = bits / cfg.rate_sg;
  o.propagation_delay =
      2.0 * (ud_sat_distance + route.chain_distance + route.gs_distance) / kSpeedOfLight;
  o.delay = o.upload_delay + o.forward_delay + o.download_delay + o.propagation_delay;
  o.ud_energy = tx_power * o.upload_delay;
  return o;
}

/// Per-UD result of one slot.
struct UdOutcome {
  int server = -1;  // index into the server list: UAVs first, then satellites
  double ratio = 0.0;
  double rate = 0.0;
  double f_alloc = 0.0;
  double t_loc = 0.0;
  double t_off = 0.0;
  double t_total = 0.0;
  double e_loc = 0.0;
  double e_tx = 0.0;
  double e_total = 0.0;
  bool deadline_violated = false;
};

struct UavOutcome {
  double e_compute = 0.0;
  double e_propulsion = 0.0;
  double e_total = 0.0;
  bool boundary_violated = false;
  bool collision = false;
  bool propulsion_clamped = false;
  bool energy_exhausted = false;
};

struct StepOutcome {
  std::vector<UdOutcome> uds;
  std::vector<UavOutcome> uavs;
  double cost = 0.0;
};

struct Aggregate {
  std::vector<double> delay;
  std::vector<double> energy;
  double cost = 0.0;
};

/// Completion delay is the slower of the local and offloaded branches;
/// UD energy adds both; cost is the weighted sum over UDs.
inline Aggregate aggregate(const std::vector<UdOutcome>& uds, double w_delay, double w_energy) {
  Aggregate a;
  double sum_t = 0.0;
  double sum_e = 0.0;
  for (const auto& o : uds) {
    a.delay.push_back(std::max(o.t_loc, o.t_off));
    a.energy.push_back(o.e_loc + o.e_tx);
    sum_t += a.delay.back();
    sum_e += a.energy.back();
  }
  a.cost = w_delay * sum_t + w_energy * sum_e;
  return a;
}

}  // namespace sagin
