#pragma once

#include <cmath>
#include <json.hpp>
#include <string>
#include <vector>

#include "sagin/channel.hpp"
#include "sagin/cocg.hpp"
#include "sagin/compute.hpp"
#include "sagin/config.hpp"
#include "sagin/madrl.hpp"
#include "sagin/slot.hpp"

// Self-checks behind the `verify` CLI verb. Each check is seeded and
// reports a pass flag plus the worst observed figure.

namespace sagin::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  nlohmann::json detail;
};

inline nlohmann::json to_json(const CheckResult& c) {
  return {{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}};
}

inline CheckResult allocation_optimality(std::uint64_t seed, int instances = 100) {
  Engine rng = make_stream(seed, "verify-allocation");
  double worst_rel = 0.0, worst_sum = 0.0;
  for (int n = 0; n < instances; ++n) {
    const int k = 2 + static_cast<int>(rng() % 4);
    const double fmax = uniform(rng, 2e9, 4e9);
    std::vector<double> work(k);
    for (auto& w : work) w = uniform(rng, 1e8, 1e10);
    const auto closed = allocate_computing(work, fmax);
    const auto grid = oracle_allocate(work, fmax);
    const double a = allocation_objective(work, closed), b = allocation_objective(work, grid);
    worst_rel = std::max(worst_rel, std::abs(a - b) / b);
    double sum = 0.0;
    for (double f : closed) sum += f;
    worst_sum = std::max(worst_sum, std::abs(sum - fmax) / fmax);
  }
  return {"allocation_optimality", worst_rel <= 1e-3 && worst_sum <= 1e-9,
          {{"instances", instances}, {"max_rel_gap", worst_rel}, {"max_sum_error_rel", worst_sum}}};
}

/// Random small scenarios at the given configuration: the game must end at
/// a Nash-stable partition with a monotone utility trace.
inline CheckResult game_stability(std::uint64_t seed, const ScenarioConfig& base, int instances = 50) {
  Engine pick = make_stream(seed, "verify-game");
  int non_ne = 0, non_monotone = 0;
  for (int n = 0; n < instances; ++n) {
    ScenarioConfig cfg = base;
    cfg.num_uds = 1 + static_cast<int>(pick() % 6);
    cfg.num_uavs = 1 + static_cast<int>(pick() % 2);
    cfg.num_sats = 1;
    RngStreams st(seed, static_cast<std::uint64_t>(n));
    const WorldState w = init_world(cfg, st);
    std::vector<double> ratios, rain;
    for (int i = 0; i < cfg.num_uds; ++i) {
      ratios.push_back(uniform(st.policy, 0.0, 1.0));
      rain.push_back(sample_rain_attenuation(cfg.rain_shape, cfg.rain_scale_db, st.rain));
    }
    const SlotContext ctx(cfg, w, ratios, rain);
    std::vector<GameTraceRecord> trace;
    const auto res = run_coalition_game(ctx, st.game, &trace);
    if (!verify_nash(ctx, res.partition).is_ne) ++non_ne;
    for (const auto& r : trace)
      if (r.accepted && r.total_after < r.total_before - utility_tolerance(r.total_before)) {
        ++non_monotone;
        break;
      }
  }
  return {"game_stability", non_ne == 0 && non_monotone == 0,
          {{"instances", instances}, {"non_nash", non_ne}, {"non_monotone", non_monotone},
           {"coverage_radius", base.coverage_radius}}};
}

inline CheckResult propulsion_shape(const ScenarioConfig& cfg) {
  const double hover = propulsion_energy(0.0, cfg.prop_delta, cfg.rotor_tip_speed, 1.0).energy;
  const double expected = 4.0 + 2.0 * std::pow(3.0, 0.25);
  double best = hover, best_v = 0.0;
  for (int k = 1; k < 250000; ++k) {
    const double v = 25.0 * k / 250000.0;
    const double p = propulsion_energy(v, cfg.prop_delta, cfg.rotor_tip_speed, 1.0).energy;
    if (p < best) {
      best = p;
      best_v = v;
    }
  }
  return {"propulsion_shape", std::abs(hover - expected) <= 1e-9 && best < hover && best_v > 0.0 && best_v < 25.0,
          {{"hover_power", hover}, {"min_power", best}, {"argmin_speed", best_v}}};
}

inline CheckResult channel_sanity(std::uint64_t seed, const ScenarioConfig& cfg) {
  Engine rng = make_stream(seed, "verify-channel");
  int los_bad = 0, rate_bad = 0;
  for (int n = 0; n < 1000; ++n) {
    const Vec2 uav{uniform(rng, 0, cfg.area_x_max), uniform(rng, 0, cfg.area_y_max)};
    const double r1 = uniform(rng, 0.0, 1500.0), r2 = uniform(rng, 0.0, 1500.0);
    const double near = std::min(r1, r2), far = std::max(r1, r2);
    const double phi = uniform(rng, -kPi, kPi);
    const Vec2 a{uav.x + near * std::cos(phi), uav.y + near * std::sin(phi)};
    const Vec2 b{uav.x + far * std::cos(phi), uav.y + far * std::sin(phi)};
    // closer means higher elevation
    if (los_probability(a, uav, cfg.uav_alt, cfg.los_eps1, cfg.los_eps2) <
        los_probability(b, uav, cfg.uav_alt, cfg.los_eps1, cfg.los_eps2))
      ++los_bad;
    if (ud_uav_rate(a, uav, 1, 0.1, cfg).rate < ud_uav_rate(b, uav, 1, 0.1, cfg).rate) ++rate_bad;
  }
  double max_split_error = 0.0;
  for (int n = 1; n <= 20; ++n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += ud_uav_rate({0, 0}, {0, 0}, n, 0.1, cfg).bandwidth;
    max_split_error = std::max(max_split_error, std::abs(total - cfg.bandwidth_uav_total) / cfg.bandwidth_uav_total);
  }
  return {"channel_sanity", los_bad == 0 && rate_bad == 0 && max_split_error <= 1e-12,
          {{"los_violations", los_bad}, {"rate_violations", rate_bad}, {"bandwidth_split_error", max_split_error}}};
}

/// Central finite differences of critic loss and actor objective against
/// the back-propagated gradients.
inline CheckResult gradient_check(std::uint64_t seed, int probes = 100) {
  ScenarioConfig cfg;
  cfg.num_uds = 2;
  cfg.num_uavs = 1;
  cfg.hidden = {16, 16};
  Maddpg model(cfg, seed);
  Engine rng = make_stream(seed, "verify-gradient");
  const auto& L = model.layout();
  const int B = 8;
  Batch b;
  b.obs = Matrix::NullaryExpr(L.joint_obs_dim(), B, [&] { return uniform(rng, 0.0, 1.0); });
  b.act = Matrix::NullaryExpr(L.joint_act_dim(), B, [&] { return uniform(rng, -1.0, 1.0); });
  b.rew = Matrix::NullaryExpr(L.num_agents(), B, [&] { return uniform(rng, -1.0, 0.0); });
  b.next_obs = Matrix::NullaryExpr(L.joint_obs_dim(), B, [&] { return uniform(rng, 0.0, 1.0); });
  b.done = Vector::Zero(B);
  const Matrix next_act = model.target_actions(b.next_obs);
  double worst = 0.0;
  const double h = 1e-6;
  for (int p = 0; p < probes; ++p) {
    const int m = static_cast<int>(rng() % L.num_agents());
    const bool critic = p % 2 == 0;
    nn::Mlp& net = critic ? model.agents()[m].critic : model.agents()[m].actor;
    nn::Gradients g;
    if (critic)
      model.critic_loss(m, b, next_act, &g);
    else
      model.actor_objective(m, b, &g);
    const Vector analytic = nn::flatten(g);
    const Vector theta = net.flat();
    const auto k = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(theta.size()));
    auto loss = [&](double delta) {
      Vector t = theta;
      t[k] += delta;
      net.set_flat(t);
      const double v = critic ? model.critic_loss(m, b, next_act) : -model.actor_objective(m, b);
      net.set_flat(theta);
      return v;
    };
    const double numeric = (loss(h) - loss(-h)) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic[k]) / denom);
  }
  return {"gradient_check", worst <= 1e-3, {{"probes", probes}, {"max_rel_error", worst}}};
}

/// Recomputes C(t) from per-UD outcomes for random slots.
inline CheckResult cost_audit(std::uint64_t seed, const ScenarioConfig& base, int slots = 20) {
  ScenarioConfig cfg = base;
  cfg.horizon = slots;
  Environment env(cfg, seed);
  auto obs = env.reset(0);
  Engine rng = make_stream(seed, "verify-audit");
  double worst = 0.0;
  int audited = 0;
  while (!env.done()) {
    std::vector<Vector> actions;
    for (int m = 0; m < env.layout().num_agents(); ++m) {
      Vector a(env.layout().act_dim(m));
      for (Eigen::Index q = 0; q < a.size(); ++q) a[q] = uniform(rng, -1.0, 1.0);
      if (!env.layout().is_ud(m)) a[1] = -1.0;  // hover, so the audit spans all slots
      actions.push_back(a);
    }
    auto r = env.step(actions);
    double t = 0.0, e = 0.0;
    for (const auto& o : r.record.outcome.uds) {
      t += std::max(o.t_loc, o.t_off);
      e += o.e_loc + o.e_tx;
    }
    const double c = cfg.w_delay * t + cfg.w_energy * e;
    worst = std::max(worst, std::abs(c - r.record.outcome.cost) / std::max(1.0, std::abs(c)));
    ++audited;
  }
  return {"cost_audit", worst <= 1e-9 && audited == slots, {{"slots", audited}, {"max_rel_error", worst}}};
}

inline std::vector<CheckResult> run_all(std::uint64_t seed, const ScenarioConfig& cfg) {
  return {allocation_optimality(seed), game_stability(seed, cfg), propulsion_shape(cfg),
          channel_sanity(seed, cfg),  gradient_check(seed),        cost_audit(seed, cfg)};
}

}  // namespace sagin::verify
