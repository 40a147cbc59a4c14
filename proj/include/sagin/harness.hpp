#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <json.hpp>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sagin/config.hpp"
#include "sagin/madrl.hpp"

namespace sagin {

enum class PolicyKind { MaddpgCocg, Ecra, No, Random };

inline PolicyKind parse_policy(const std::string& s) {
  if (s == "maddpg-cocg") return PolicyKind::MaddpgCocg;
  if (s == "ecra") return PolicyKind::Ecra;
  if (s == "no") return PolicyKind::No;
  if (s == "random") return PolicyKind::Random;
  throw std::invalid_argument("unknown policy '" + s + "' (expected maddpg-cocg, ecra, no or random)");
}

inline std::string policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::MaddpgCocg: return "maddpg-cocg";
    case PolicyKind::Ecra: return "ecra";
    case PolicyKind::No: return "no";
    case PolicyKind::Random: return "random";
  }
  return "unknown";
}

/// ECRA swaps the allocation rule and NO the association; both keep the
/// learned offloading and trajectory actors. The random policy samples
/// actions uniformly and keeps the game and closed-form allocation.
inline EnvOptions env_options_for(PolicyKind p) {
  EnvOptions o;
  if (p == PolicyKind::Ecra) o.allocation = AllocationRule::Equal;
  if (p == PolicyKind::No) o.association = Association::Nearest;
  return o;
}

inline bool needs_actors(PolicyKind p) { return p != PolicyKind::Random; }

struct MetricsReport {
  std::string policy;
  std::uint64_t seed = 0;
  std::string config_hash;
  int slots = 0;
  int num_uds = 0;
  int num_uavs = 0;
  double aggregated_ud_cost = 0.0;
  double avg_task_delay = 0.0;
  double avg_ud_energy = 0.0;
  double avg_uav_energy = 0.0;
  double deadline_violation_rate = 0.0;
  int deadline_violations = 0;
  int boundary_violations = 0;
  int collisions = 0;
  bool terminated_early = false;
};

inline nlohmann::json to_json(const MetricsReport& r) {
  return {{"policy", r.policy},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"slots", r.slots},
          {"num_uds", r.num_uds},
          {"num_uavs", r.num_uavs},
          {"aggregated_ud_cost", r.aggregated_ud_cost},
          {"avg_task_delay", r.avg_task_delay},
          {"avg_ud_energy", r.avg_ud_energy},
          {"avg_uav_energy", r.avg_uav_energy},
          {"deadline_violation_rate", r.deadline_violation_rate},
          {"deadline_violations", r.deadline_violations},
          {"boundary_violations", r.boundary_violations},
          {"collisions", r.collisions},
          {"terminated_early", r.terminated_early}};
}

/// Folds per-slot records into a report.
inline MetricsReport summarize(const ScenarioConfig& cfg, const std::vector<SlotRecord>& slots,
                               PolicyKind policy, std::uint64_t seed) {
  MetricsReport r;
  r.policy = policy_name(policy);
  r.seed = seed;
  r.config_hash = config_hash(cfg);
  r.num_uds = cfg.num_uds;
  r.num_uavs = cfg.num_uavs;
  r.slots = static_cast<int>(slots.size());
  double delay = 0.0, ud_energy = 0.0, uav_energy = 0.0;
  for (const auto& s : slots) {
    r.aggregated_ud_cost += s.outcome.cost;
    for (const auto& o : s.outcome.uds) {
      delay += std::max(o.t_loc, o.t_off);
      ud_energy += o.e_loc + o.e_tx;
      r.deadline_violations += o.deadline_violated ? 1 : 0;
    }
    for (const auto& a : s.outcome.uavs) {
      uav_energy += a.e_total;
      r.boundary_violations += a.boundary_violated ? 1 : 0;
      r.collisions += a.collision ? 1 : 0;
    }
  }
  const double ud_slots = static_cast<double>(r.slots) * r.num_uds;
  const double uav_slots = static_cast<double>(r.slots) * r.num_uavs;
  if (ud_slots > 0) {
    r.avg_task_delay = delay / ud_slots;
    r.avg_ud_energy = ud_energy / ud_slots;
    r.deadline_violation_rate = r.deadline_violations / ud_slots;
  }
  if (uav_slots > 0) r.avg_uav_energy = uav_energy / uav_slots;
  r.terminated_early = r.slots < cfg.horizon;
  return r;
}

/// One line of the per-slot trace.
inline nlohmann::json slot_to_json(const SlotRecord& s) {
  nlohmann::json uds = nlohmann::json::array();
  for (std::size_t i = 0; i < s.outcome.uds.size(); ++i) {
    const auto& o = s.outcome.uds[i];
    uds.push_back({{"x", s.ud_pos[i].x},
                   {"y", s.ud_pos[i].y},
                   {"task_bits", s.tasks[i].size_bits},
                   {"density", s.tasks[i].density},
                   {"deadline", s.tasks[i].deadline},
                   {"ratio", o.ratio},
                   {"server", o.server},
                   {"rain_db", s.rain_db[i]},
                   {"rate", o.rate},
                   {"f_alloc", o.f_alloc},
                   {"t_loc", o.t_loc},
                   {"t_off", o.t_off},
                   {"t_total", o.t_total},
                   {"e_loc", o.e_loc},
                   {"e_tx", o.e_tx},
                   {"e_total", o.e_total},
                   {"late", o.deadline_violated}});
  }
  nlohmann::json uavs = nlohmann::json::array();
  for (std::size_t u = 0; u < s.outcome.uavs.size(); ++u) {
    const auto& a = s.outcome.uavs[u];
    uavs.push_back({{"x", s.uav_pos[u].x},
                    {"y", s.uav_pos[u].y},
                    {"heading", s.decision.controls[u].heading},
                    {"speed", s.decision.controls[u].speed},
                    {"e_compute", a.e_compute},
                    {"e_propulsion", a.e_propulsion},
                    {"e_total", a.e_total},
                    {"boundary", a.boundary_violated},
                    {"collision", a.collision},
                    {"exhausted", a.energy_exhausted}});
  }
  return {{"type", "slot"},
          {"slot", s.slot},
          {"cost", s.outcome.cost},
          {"system_reward", s.rewards.system},
          {"rewards", s.rewards.per_agent},
          {"game_sweeps", s.game_sweeps},
          {"terminal", s.terminal},
          {"uds", uds},
          {"uavs", uavs}};
}

struct EpisodeRun {
  MetricsReport report;
  std::vector<SlotRecord> slots;

  /// Line-delimited trace: a header record, then one record per slot.
  std::string trace_jsonl() const {
    std::string out = nlohmann::json{{"type", "header"},
                                     {"config_hash", report.config_hash},
                                     {"policy", report.policy},
                                     {"seed", report.seed}}
                          .dump() +
                      "\n";
    for (const auto& s : slots) out += slot_to_json(s).dump() + "\n";
    return out;
  }

  /// Per-slot positions of every UD and UAV, for external plotting.
  std::string trajectory_csv() const {
    std::ostringstream os;
    os << "config_hash,slot,kind,index,x,y\n";
    auto num = [](double x) { return nlohmann::json(x).dump(); };
    for (const auto& s : slots) {
      for (std::size_t i = 0; i < s.ud_pos.size(); ++i)
        os << report.config_hash << ',' << s.slot << ",ud," << i << ',' << num(s.ud_pos[i].x) << ','
           << num(s.ud_pos[i].y) << '\n';
      for (std::size_t u = 0; u < s.uav_pos.size(); ++u)
        os << report.config_hash << ',' << s.slot << ",uav," << u << ',' << num(s.uav_pos[u].x) << ','
           << num(s.uav_pos[u].y) << '\n';
    }
    return os.str();
  }
};

/// Runs one evaluation episode (no exploration noise). Learned policies
/// need `actors`; the random policy draws from the episode's policy stream.
inline EpisodeRun run_episode(const ScenarioConfig& cfg, PolicyKind policy, const Maddpg* actors,
                              std::uint64_t seed) {
  if (needs_actors(policy) && actors == nullptr)
    throw std::invalid_argument("policy " + policy_name(policy) + " needs trained actors");
  if (actors && !(actors->layout() == AgentLayout(cfg)))
    throw std::invalid_argument("checkpoint/config mismatch: checkpoint has " + actors->layout().describe() +
                                ", config needs " + AgentLayout(cfg).describe());
  Environment env(cfg, seed, env_options_for(policy));
  auto obs = env.reset(0);
  EpisodeRun run;
  while (!env.done()) {
    std::vector<Vector> actions;
    if (policy == PolicyKind::Random) {
      for (int m = 0; m < env.layout().num_agents(); ++m) {
        Vector a(env.layout().act_dim(m));
        for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = uniform(env.streams().policy, -1.0, 1.0);
        actions.push_back(std::move(a));
      }
    } else {
      actions = actors->act(obs);
    }
    auto res = env.step(actions);
    obs = std::move(res.next_obs);
    run.slots.push_back(std::move(res.record));
  }
  run.report = summarize(cfg, run.slots, policy, seed);
  return run;
}

// ---------------------------------------------------------------------------
// Sweeps

inline const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes{"num_uds", "task_size_mean", "f_uav_max"};
  return axes;
}

/// Copy of `cfg` with the sweep axis set to `value`. task_size_mean scales
/// the size range so its midpoint is `value`; f_uav_max pins every UAV's
/// capacity to `value`.
inline ScenarioConfig apply_axis(ScenarioConfig cfg, const std::string& axis, double value) {
  if (axis == "num_uds") {
    if (value < 1 || value != std::floor(value)) throw std::invalid_argument("num_uds values must be positive integers");
    cfg.num_uds = static_cast<int>(value);
  } else if (axis == "task_size_mean") {
    const double mid = cfg.task_size_bits.mid();
    cfg.task_size_bits = {cfg.task_size_bits.lo * value / mid, cfg.task_size_bits.hi * value / mid};
  } else if (axis == "f_uav_max") {
    cfg.f_uav_max = {value, value};
  } else {
    throw std::invalid_argument("unknown sweep axis '" + axis + "' (expected num_uds, task_size_mean or f_uav_max)");
  }
  require_valid(cfg);
  return cfg;
}

/// Linear-interpolation quantile of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SweepRow {
  double value = 0.0;
  MetricsReport report;
};

struct SweepSummary {
  double value = 0.0;
  std::string metric;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int samples = 0;
};

/// Builds actors for a given (config, seed) cell.
using ActorSource = std::function<Maddpg(const ScenarioConfig&, std::uint64_t)>;

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
  std::string base_config_hash;
};

inline const std::vector<std::string>& summary_metrics() {
  static const std::vector<std::string> m{"aggregated_ud_cost", "avg_task_delay", "avg_ud_energy",
                                          "avg_uav_energy", "deadline_violation_rate"};
  return m;
}

inline double metric_of(const MetricsReport& r, const std::string& name) {
  if (name == "aggregated_ud_cost") return r.aggregated_ud_cost;
  if (name == "avg_task_delay") return r.avg_task_delay;
  if (name == "avg_ud_energy") return r.avg_ud_energy;
  if (name == "avg_uav_energy") return r.avg_uav_energy;
  if (name == "deadline_violation_rate") return r.deadline_violation_rate;
  throw std::invalid_argument("unknown metric " + name);
}

/// Cross product of values x seeds. Cells are independent and run in order;
/// each row is reproducible from (config hash, seed, policy).
inline SweepResult sweep(const ScenarioConfig& cfg, const std::string& axis, const std::vector<double>& values,
                         const std::vector<std::uint64_t>& seeds, PolicyKind policy,
                         const ActorSource& actors = {}) {
  if (values.empty() || seeds.empty()) throw std::invalid_argument("sweep needs at least one value and one seed");
  if (needs_actors(policy) && !actors)
    throw std::invalid_argument("policy " + policy_name(policy) + " needs trained actors");
  SweepResult res;
  res.base_config_hash = config_hash(cfg);
  for (double v : values) {
    const ScenarioConfig cell = apply_axis(cfg, axis, v);
    std::vector<MetricsReport> reports;
    for (auto seed : seeds) {
      std::optional<Maddpg> a;
      if (needs_actors(policy)) a = actors(cell, seed);
      auto run = run_episode(cell, policy, a ? &*a : nullptr, seed);
      res.rows.push_back({v, run.report});
      reports.push_back(run.report);
    }
    for (const auto& m : summary_metrics()) {
      std::vector<double> xs;
      for (const auto& r : reports) xs.push_back(metric_of(r, m));
      res.summary.push_back({v, m, quantile(xs, 0.5), quantile(xs, 0.25), quantile(xs, 0.75),
                             static_cast<int>(xs.size())});
    }
  }
  return res;
}

inline std::string sweep_rows_csv(const SweepResult& r, const std::string& axis) {
  std::ostringstream os;
  auto num = [](double x) { return nlohmann::json(x).dump(); };
  os << "axis,value,policy,seed,config_hash,slots,aggregated_ud_cost,avg_task_delay,avg_ud_energy,"
        "avg_uav_energy,deadline_violation_rate,boundary_violations,collisions\n";
  for (const auto& row : r.rows) {
    const auto& m = row.report;
    os << axis << ',' << num(row.value) << ',' << m.policy << ',' << m.seed << ',' << m.config_hash << ','
       << m.slots << ',' << num(m.aggregated_ud_cost) << ',' << num(m.avg_task_delay) << ','
       << num(m.avg_ud_energy) << ',' << num(m.avg_uav_energy) << ',' << num(m.deadline_violation_rate) << ','
       << m.boundary_violations << ',' << m.collisions << '\n';
  }
  return os.str();
}

inline std::string sweep_summary_csv(const SweepResult& r, const std::string& axis, const std::string& policy) {
  std::ostringstream os;
  auto num = [](double x) { return nlohmann::json(x).dump(); };
  os << "axis,value,policy,metric,median,q1,q3,iqr,samples,base_config_hash\n";
  for (const auto& s : r.summary)
    os << axis << ',' << num(s.value) << ',' << policy << ',' << s.metric << ',' << num(s.median) << ','
       << num(s.q1) << ',' << num(s.q3) << ',' << num(s.q3 - s.q1) << ',' << s.samples << ','
       << r.base_config_hash << '\n';
  return os.str();
}

}  // namespace sagin
