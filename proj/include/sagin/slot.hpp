#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "sagin/channel.hpp"
#include "sagin/compute.hpp"
#include "sagin/config.hpp"
#include "sagin/world.hpp"

namespace sagin {

/// Closed-form computing allocation: shares proportional to the square root
/// of each claimant's offloaded cycles. Zero-work claimants receive nothing;
/// an all-zero input yields an all-zero allocation.
inline std::vector<double> allocate_computing(std::span<const double> work, double f_max) {
  std::vector<double> f(work.size(), 0.0);
  double denom = 0.0;
  for (double w : work) denom += std::sqrt(std::max(w, 0.0));
  if (denom <= 0.0) return f;
  for (std::size_t i = 0; i < work.size(); ++i)
    f[i] = work[i] > 0.0 ? std::sqrt(work[i]) * f_max / denom : 0.0;
  return f;
}

/// Equal split of f_max among claimants with nonzero work.
inline std::vector<double> allocate_equal(std::span<const double> work, double f_max) {
  std::vector<double> f(work.size(), 0.0);
  const auto claimants = std::count_if(work.begin(), work.end(), [](double w) { return w > 0.0; });
  if (claimants == 0) return f;
  for (std::size_t i = 0; i < work.size(); ++i)
    if (work[i] > 0.0) f[i] = f_max / static_cast<double>(claimants);
  return f;
}

/// Sum of work_i / f_i, the computation-delay objective the closed form
/// minimizes. Zero-work entries contribute nothing.
inline double allocation_objective(std::span<const double> work, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 0; i < work.size(); ++i)
    if (work[i] > 0.0) s += work[i] / f[i];
  return s;
}

enum class AllocationRule { ClosedForm, Equal };

/// Everything about one slot that does not depend on the association:
/// per-link spectral efficiencies, satellite rates, local outcomes, cloud
/// routes and each UD's nominee servers. Servers are indexed UAVs first
/// (0..U-1), then satellites (U..U+N-1).
class SlotContext {
 public:
  SlotContext(const ScenarioConfig& cfg, const WorldState& world, std::vector<double> ratios,
              std::vector<double> rain_db, Engine* los_rng = nullptr)
      : cfg_(&cfg), world_(&world), ratios_(std::move(ratios)), rain_db_(std::move(rain_db)) {
    const int I = world.num_uds(), U = world.num_uavs(), N = world.num_sats();
    if (static_cast<int>(ratios_.size()) != I || static_cast<int>(rain_db_.size()) != I)
      throw std::invalid_argument("SlotContext: per-UD vectors must have num_uds entries");
    uav_link_.assign(I, std::vector<LinkBudget>(U));
    uav_se_.assign(I, std::vector<double>(U));
    sat_link_.assign(I, std::vector<LinkBudget>(N));
    for (int i = 0; i < I; ++i) {
      for (int u = 0; u < U; ++u) {
        uav_link_[i][u] = ud_uav_path_loss(world.ud_pos[i], world.uav_pos[u], cfg, los_rng);
        uav_se_[i][u] = shannon_rate(1.0, world.ud_tx_power[i], uav_link_[i][u].gain, cfg.noise_w);
      }
      for (int n = 0; n < N; ++n)
        sat_link_[i][n] = ud_sat_rate(world.ud_pos[i], world.sat_pos[n], world.ud_tx_power[i],
                                      rain_db_[i], cfg);
      local_.push_back(local_outcome(world.tasks[i], ratios_[i], cfg.f_loc, cfg.capacitance));
    }
    constellation_ = make_constellation(cfg, world.sat_pos);
    routes_.resize(N);
    for (int n = 0; n < N; ++n) {
      try {
        routes_[n] = route_to_ground(constellation_, n);
      } catch (const CloudUnreachable&) {
        routes_[n].reset();
      }
    }
    nominees_.resize(I);
    for (int i = 0; i < I; ++i) {
      for (int u = 0; u < U; ++u)
        if ((world.ud_pos[i] - world.uav_pos[u]).norm() <= cfg.coverage_radius)
          nominees_[i].push_back(u);
      for (int n = 0; n < N; ++n) nominees_[i].push_back(U + n);
    }
  }

  const ScenarioConfig& cfg() const { return *cfg_; }
  const WorldState& world() const { return *world_; }
  int num_uds() const { return world_->num_uds(); }
  int num_uavs() const { return world_->num_uavs(); }
  int num_sats() const { return world_->num_sats(); }
  int num_servers() const { return num_uavs() + num_sats(); }
  bool is_uav(int k) const { return k < num_uavs(); }

  double ratio(int i) const { return ratios_[i]; }
  const std::vector<double>& ratios() const { return ratios_; }
  const std::vector<double>& rain_db() const { return rain_db_; }
  double work(int i) const { return world_->tasks[i].cycles() * ratios_[i]; }
  const LocalOutcome& local(int i) const { return local_[i]; }
  const LinkBudget& uav_link(int i, int u) const { return uav_link_[i][u]; }
  const LinkBudget& sat_link(int i, int n) const { return sat_link_[i][n]; }
  const std::vector<int>& nominees(int i) const { return nominees_[i]; }
  bool is_nominee(int i, int k) const {
    return std::find(nominees_[i].begin(), nominees_[i].end(), k) != nominees_[i].end();
  }
  const std::optional<CloudRoute>& route(int n) const { return routes_[n]; }

  double uav_rate(int i, int u, int num_served) const {
    return cfg_->bandwidth_uav_total / num_served * uav_se_[i][u];
  }

  /// Outcome of UD i offloading to UAV u shared by `num_served` UDs, with
  /// `f_alloc` cycles/s allocated to it.
  UdOutcome uav_outcome(int i, int u, int num_served, double f_alloc) const {
    UdOutcome o = base(i, u);
    o.rate = uav_rate(i, u, num_served);
    o.f_alloc = f_alloc;
    const EdgeOutcome e = edge_outcome(world_->tasks[i], ratios_[i], o.rate, f_alloc,
                                       world_->ud_tx_power[i], cfg_->uav_cycle_energy);
    o.t_off = e.delay;
    o.e_tx = e.ud_energy;
    return finish(i, o);
  }

  /// Outcome of UD i offloading to satellite n (server index U + n).
  UdOutcome sat_outcome(int i, int n) const {
    UdOutcome o = base(i, num_uavs() + n);
    o.rate = sat_link_[i][n].rate;
    if (ratios_[i] > 0.0) {
      if (!routes_[n]) throw CloudUnreachable();
      const CloudOutcome c = cloud_outcome(world_->tasks[i], ratios_[i], o.rate,
                                           sat_link_[i][n].distance, *routes_[n],
                                           world_->ud_tx_power[i], *cfg_);
      o.t_off = c.delay;
      o.e_tx = c.ud_energy;
    }
    return finish(i, o);
  }

  /// Offloading cost used by the association game: weighted completion
  /// delay plus transmit energy, plus the deadline penalty when late.
  double offload_cost(const UdOutcome& o) const {
    return cfg_->w_delay * o.t_total + cfg_->w_energy * o.e_tx +
           (o.deadline_violated ? cfg_->penalty_deadline : 0.0);
  }

  /// Outcomes of every member of coalition k under the given allocation rule.
  std::vector<UdOutcome> coalition_outcomes(int k, std::span<const int> members,
                                            AllocationRule rule = AllocationRule::ClosedForm) const {
    std::vector<UdOutcome> out;
    out.reserve(members.size());
    if (is_uav(k)) {
      std::vector<double> w;
      w.reserve(members.size());
      for (int i : members) w.push_back(work(i));
      const double fmax = world_->uav_fmax[k];
      const auto f = rule == AllocationRule::ClosedForm ? allocate_computing(w, fmax)
                                                        : allocate_equal(w, fmax);
      const int n = static_cast<int>(members.size());
      for (std::size_t j = 0; j < members.size(); ++j)
        out.push_back(uav_outcome(members[j], k, n, f[j]));
    } else {
      for (int i : members) out.push_back(sat_outcome(i, k - num_uavs()));
    }
    return out;
  }

 private:
  UdOutcome base(int i, int k) const {
    UdOutcome o;
    o.server = k;
    o.ratio = ratios_[i];
    o.t_loc = local_[i].delay;
    o.e_loc = local_[i].energy;
    return o;
  }

  UdOutcome finish(int i, UdOutcome o) const {
    o.t_total = std::max(o.t_loc, o.t_off);
    o.e_total = o.e_loc + o.e_tx;
    o.deadline_violated = o.t_total > world_->tasks[i].deadline;
    return o;
  }

  const ScenarioConfig* cfg_;
  const WorldState* world_;
  std::vector<double> ratios_;
  std::vector<double> rain_db_;
  std::vector<std::vector<LinkBudget>> uav_link_;
  std::vector<std::vector<double>> uav_se_;
  std::vector<std::vector<LinkBudget>> sat_link_;
  std::vector<LocalOutcome> local_;
  Constellation constellation_;
  std::vector<std::optional<CloudRoute>> routes_;
  std::vector<std::vector<int>> nominees_;
};

}  // namespace sagin
