#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sagin/compute.hpp"

using namespace sagin;

namespace {

Task task(double bits, double density, double deadline = 3.0) { return {bits, density, deadline}; }

Constellation ring(int n, const std::vector<bool>& visible) {
  Constellation c;
  for (int k = 0; k < n; ++k) c.pos.push_back({k * 1e6, 0.0});
  c.altitude = 1e6;
  c.links.assign(n, {});
  for (int k = 0; k < n; ++k) {
    c.links[k].push_back((k + 1) % n);
    c.links[k].push_back((k + n - 1) % n);
  }
  c.gs_visible = visible;
  return c;
}

}  // namespace

TEST(Local, FullOffloadCostsNothingLocally) {
  const auto o = local_outcome(task(3e6, 150), 1.0, 0.3e9, 1e-27);
  EXPECT_EQ(o.delay, 0.0);
  EXPECT_EQ(o.energy, 0.0);
}

TEST(Local, DefaultsByDirectSubstitution) {
  const auto o = local_outcome(task(1e6, 125), 0.0, 0.3e9, 1e-27);
  EXPECT_DOUBLE_EQ(o.delay, 125e6 / 3e8);
  EXPECT_NEAR(o.energy, 1e-27 * 0.3e9 * 0.3e9 * 125e6, 1e-18);
}

TEST(Edge, NoOffloadIsFree) {
  const auto o = edge_outcome(task(3e6, 150), 0.0, 0.0, 0.0, 0.2, 1e-9);
  EXPECT_EQ(o.delay, 0.0);
  EXPECT_EQ(o.ud_energy, 0.0);
  EXPECT_EQ(o.uav_energy, 0.0);
}

TEST(Edge, UnitTransferPlusUnitCompute) {
  const auto o = edge_outcome(task(8e6, 125), 1.0, 8e6, 1e9, 0.2, 1e-9);
  EXPECT_DOUBLE_EQ(o.tx_delay, 1.0);
  EXPECT_DOUBLE_EQ(o.comp_delay, 1.0);
  EXPECT_DOUBLE_EQ(o.delay, 2.0);
  EXPECT_DOUBLE_EQ(o.uav_energy, 1e9 * 1e-9);
}

TEST(Edge, TransmitEnergyIsPowerTimesAirtime) {
  Engine rng = make_stream(1, "edge");
  for (int k = 0; k < 200; ++k) {
    const double p = uniform(rng, 0.1, 0.3);
    const auto o = edge_outcome(task(uniform(rng, 1e6, 5e6), 150), uniform(rng, 0.01, 1.0),
                                uniform(rng, 1e5, 1e8), uniform(rng, 1e8, 4e9), p, 1e-9);
    EXPECT_DOUBLE_EQ(o.ud_energy, p * o.tx_delay);
  }
}

TEST(Edge, OffloadWithoutResourcesIsAContractViolation) {
  try {
    edge_outcome(task(1e6, 125), 0.5, 1e6, 0.0, 0.2, 1e-9);
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_EQ(std::string(e.what()), "offloaded work with zero resources");
  }
}

TEST(Propulsion, HoverPower) {
  const auto r = propulsion_energy(0.0, {4, 2, 3, 1}, 120.0, 1.0);
  EXPECT_NEAR(r.energy, 4.0 + 2.0 * std::pow(3.0, 0.25), 1e-12);
  EXPECT_NEAR(r.energy, oracle::hover_power(4, 2, 3), 1e-12);
  EXPECT_FALSE(r.clamped);
}

TEST(Propulsion, InteriorMinimumBelowHover) {
  double best = 1e300, best_v = -1;
  for (int k = 0; k <= 25000; ++k) {
    const double v = k * 1e-3;
    const double p = propulsion_energy(v, {4, 2, 3, 1}, 120.0, 1.0).energy;
    EXPECT_NEAR(p, oracle::flight_power(v, 4, 2, 3, 1, 120.0), 1e-9 * std::max(1.0, p));
    if (p < best) {
      best = p;
      best_v = v;
    }
  }
  EXPECT_GT(best_v, 0.0);
  EXPECT_LT(best_v, 25.0);
  EXPECT_LT(best, oracle::hover_power(4, 2, 3));
}

TEST(Propulsion, LinearInSlotLength) {
  for (double v : {0.0, 3.0, 11.0, 25.0}) {
    const double a = propulsion_energy(v, {4, 2, 3, 1}, 120.0, 1.0).energy;
    EXPECT_DOUBLE_EQ(propulsion_energy(v, {4, 2, 3, 1}, 120.0, 2.0).energy, 2.0 * a);
  }
}

TEST(Propulsion, NegativePowerIsClamped) {
  // No blade or parasite term: the -v^2/2 part dominates quickly.
  const auto r = propulsion_energy(10.0, {0, 2, 3, 0}, 120.0, 1.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_EQ(r.energy, 0.0);
}

TEST(Cloud, NoOffloadOverheadSatellite) {
  ScenarioConfig cfg;
  const auto c = make_constellation(cfg, {cfg.gs_pos});
  const auto route = route_to_ground(c, 0);
  const auto o = cloud_outcome(task(2e6, 150), 0.0, 1e6, 1e6, route, 0.2, cfg);
  EXPECT_EQ(o.delay, 0.0);
  EXPECT_EQ(o.ud_energy, 0.0);
}

TEST(Cloud, SingleSatelliteHasNoForwarding) {
  ScenarioConfig cfg;
  const auto c = make_constellation(cfg, {{500, 500}});
  const auto route = route_to_ground(c, 0);
  EXPECT_EQ(route.hops, 0);
  EXPECT_EQ(route.chain_distance, 0.0);
  const auto o = cloud_outcome(task(2e6, 150), 1.0, 1e6, 1e6, route, 0.2, cfg);
  EXPECT_EQ(o.forward_delay, 0.0);
  const double gs = std::hypot((Vec2{500, 500} - cfg.gs_pos).norm(), 1e6);
  const double expected = 2e6 / 1e6 + 2e6 / cfg.rate_sg + 2.0 * (1e6 + gs) / oracle::kC;
  EXPECT_NEAR(o.delay, expected, 1e-12);
  EXPECT_DOUBLE_EQ(o.ud_energy, 0.2 * 2.0);
}

TEST(Cloud, FourSatelliteRingTwoHops) {
  const auto c = ring(4, {true, false, false, false});
  const auto r = route_to_ground(c, 2);
  EXPECT_EQ(r.hops, 2);
  EXPECT_EQ(r.exit_sat, 0);
  EXPECT_EQ(oracle::min_hops_exhaustive(c.links, 2, c.gs_visible), 2);
}

TEST(Cloud, RingHopsMatchExhaustiveSearch) {
  for (int n = 1; n <= 7; ++n)
    for (int mask = 1; mask < (1 << n); ++mask) {
      std::vector<bool> vis(n);
      for (int k = 0; k < n; ++k) vis[k] = mask >> k & 1;
      const auto c = ring(n, vis);
      if (n == 1) {
        EXPECT_EQ(route_to_ground(make_constellation(ScenarioConfig{}, {{5e5, 5e5}}), 0).hops, 0);
        continue;
      }
      for (int s = 0; s < n; ++s) EXPECT_EQ(route_to_ground(c, s).hops, oracle::min_hops_exhaustive(c.links, s, vis));
    }
}

TEST(Cloud, UnreachableGroundStation) {
  const auto c = ring(4, {false, false, false, false});
  EXPECT_THROW(route_to_ground(c, 1), CloudUnreachable);
  try {
    route_to_ground(c, 1);
  } catch (const CloudUnreachable& e) {
    EXPECT_EQ(std::string(e.what()), "cloud unreachable");
  }
}

TEST(Aggregate, AllLocal) {
  std::vector<UdOutcome> uds(3);
  double t = 0, e = 0;
  for (int i = 0; i < 3; ++i) {
    uds[i].t_loc = 0.5 + i;
    uds[i].e_loc = 0.01 * (i + 1);
    t += uds[i].t_loc;
    e += uds[i].e_loc;
  }
  EXPECT_DOUBLE_EQ(aggregate(uds, 0.5, 0.5).cost, 0.5 * t + 0.5 * e);
}

TEST(Aggregate, DelayIsTheSlowerBranch) {
  UdOutcome o;
  o.t_loc = 1.0;
  o.t_off = 2.0;
  EXPECT_EQ(aggregate({o}, 1.0, 0.0).delay[0], 2.0);
}

TEST(Aggregate, MixedUdsMatchComponentRecomputation) {
  const ScenarioConfig cfg;
  const Task tasks[3] = {task(2e6, 150), task(4e6, 130), task(1e6, 180)};
  const double ratio[3] = {0.0, 0.6, 1.0}, rate[3] = {0, 5e6, 2e7}, f[3] = {0, 1e9, 2e9};
  std::vector<UdOutcome> uds;
  double cost = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto l = local_outcome(tasks[i], ratio[i], cfg.f_loc, cfg.capacitance);
    const auto e = edge_outcome(tasks[i], ratio[i], rate[i], f[i], 0.2, 1e-9);
    UdOutcome o;
    o.t_loc = l.delay;
    o.e_loc = l.energy;
    o.t_off = e.delay;
    o.e_tx = e.ud_energy;
    uds.push_back(o);
    // scalar recomputation
    const double bits = tasks[i].size_bits, eta = tasks[i].density;
    const double tl = eta * (1 - ratio[i]) * bits / 3e8;
    const double el = 1e-27 * 9e16 * eta * (1 - ratio[i]) * bits;
    const double to = ratio[i] > 0 ? ratio[i] * bits / rate[i] + eta * ratio[i] * bits / f[i] : 0.0;
    const double et = ratio[i] > 0 ? 0.2 * ratio[i] * bits / rate[i] : 0.0;
    cost += 0.5 * std::max(tl, to) + 0.5 * (el + et);
  }
  EXPECT_NEAR(aggregate(uds, 0.5, 0.5).cost, cost, 1e-12 * cost);
}

TEST(ComputeProperties, LocalAndOffloadMonotoneInRatio) {
  Engine rng = make_stream(2, "compute-prop");
  for (int k = 0; k < 500; ++k) {
    const Task t = task(uniform(rng, 1e6, 5e6), uniform(rng, 125, 187.5));
    const double a = uniform(rng, 0, 1), b = uniform(rng, 0, 1);
    const double lo = std::min(a, b), hi = std::max(a, b);
    EXPECT_GE(local_outcome(t, lo, 3e8, 1e-27).delay, local_outcome(t, hi, 3e8, 1e-27).delay);
    EXPECT_LE(edge_outcome(t, lo, 1e7, 1e9, 0.2, 1e-9).delay, edge_outcome(t, hi, 1e7, 1e9, 0.2, 1e-9).delay);
  }
}

TEST(ComputeProperties, LinearInTaskSize) {
  const Task t1 = task(1e6, 150), t3 = task(3e6, 150);
  EXPECT_NEAR(local_outcome(t3, 0.3, 3e8, 1e-27).delay, 3 * local_outcome(t1, 0.3, 3e8, 1e-27).delay, 1e-12);
  EXPECT_NEAR(edge_outcome(t3, 0.3, 1e7, 1e9, 0.2, 1e-9).delay, 3 * edge_outcome(t1, 0.3, 1e7, 1e9, 0.2, 1e-9).delay,
              1e-12);
  EXPECT_NEAR(edge_outcome(t3, 0.3, 1e7, 1e9, 0.2, 1e-9).uav_energy,
              3 * edge_outcome(t1, 0.3, 1e7, 1e9, 0.2, 1e-9).uav_energy, 1e-12);
}
