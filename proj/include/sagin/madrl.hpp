#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sagin/baselines.hpp"
#include "sagin/channel.hpp"
#include "sagin/cocg.hpp"
#include "sagin/compute.hpp"
#include "sagin/config.hpp"
#include "sagin/mobility.hpp"
#include "sagin/nn.hpp"
#include "sagin/rng.hpp"
#include "sagin/slot.hpp"
#include "sagin/world.hpp"

namespace sagin {

using nn::Matrix;
using nn::Vector;

// ---------------------------------------------------------------------------
// Agent roster

/// Agents are ordered UDs first (0..I-1), then UAVs (I..I+U-1). UD agents
/// act with one value (offload ratio), UAV agents with two (heading, speed);
/// all actions live in [-1, 1] before decoding.
struct AgentLayout {
  int num_uds = 0;
  int num_uavs = 0;
  int ud_obs_dim = 5;
  int uav_obs_dim = 3;
  static constexpr int kUdActDim = 1;
  static constexpr int kUavActDim = 2;

  AgentLayout() = default;
  explicit AgentLayout(const ScenarioConfig& cfg)
      : num_uds(cfg.num_uds), num_uavs(cfg.num_uavs),
        uav_obs_dim(3 + (cfg.uav_obs_served_positions ? 2 * cfg.num_uds : 0)) {}

  int num_agents() const { return num_uds + num_uavs; }
  bool is_ud(int m) const { return m < num_uds; }
  int obs_dim(int m) const { return is_ud(m) ? ud_obs_dim : uav_obs_dim; }
  int act_dim(int m) const { return is_ud(m) ? kUdActDim : kUavActDim; }
  int obs_offset(int m) const {
    return is_ud(m) ? m * ud_obs_dim : num_uds * ud_obs_dim + (m - num_uds) * uav_obs_dim;
  }
  int act_offset(int m) const {
    return is_ud(m) ? m * kUdActDim : num_uds * kUdActDim + (m - num_uds) * kUavActDim;
  }
  int joint_obs_dim() const { return num_uds * ud_obs_dim + num_uavs * uav_obs_dim; }
  int joint_act_dim() const { return num_uds * kUdActDim + num_uavs * kUavActDim; }
  int critic_input_dim() const { return joint_obs_dim() + joint_act_dim(); }

  bool operator==(const AgentLayout&) const = default;

  std::string describe() const {
    return std::to_string(num_uds) + " UD agents (obs " + std::to_string(ud_obs_dim) + ", act 1), " +
           std::to_string(num_uavs) + " UAV agents (obs " + std::to_string(uav_obs_dim) + ", act 2)";
  }
};

inline Vector concat(const std::vector<Vector>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vector out(n);
  Eigen::Index o = 0;
  for (const auto& p : parts) {
    out.segment(o, p.size()) = p;
    o += p.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observations and actions

namespace detail {
inline double unit(double x, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}
}  // namespace detail

/// Per-agent observations, min-max normalized to [0, 1]. `served_by` gives
/// each UD's UAV from the previous slot (-1 if none); it only matters when
/// UAV observations include served-UD positions.
inline std::vector<Vector> observe(const ScenarioConfig& cfg, const WorldState& w,
                                   const std::vector<int>& served_by = {}) {
  const AgentLayout layout(cfg);
  std::vector<Vector> obs;
  for (int i = 0; i < w.num_uds(); ++i) {
    Vector o(layout.ud_obs_dim);
    o << detail::unit(w.ud_pos[i].x, 0.0, cfg.area_x_max), detail::unit(w.ud_pos[i].y, 0.0, cfg.area_y_max),
        detail::unit(w.tasks[i].size_bits, cfg.task_size_bits.lo, cfg.task_size_bits.hi),
        detail::unit(w.tasks[i].density, cfg.comp_density.lo, cfg.comp_density.hi),
        detail::unit(w.ud_energy[i], 0.0, cfg.ud_energy_max);
    obs.push_back(std::move(o));
  }
  for (int u = 0; u < w.num_uavs(); ++u) {
    Vector o = Vector::Zero(layout.uav_obs_dim);
    o[0] = detail::unit(w.uav_pos[u].x, 0.0, cfg.area_x_max);
    o[1] = detail::unit(w.uav_pos[u].y, 0.0, cfg.area_y_max);
    o[2] = detail::unit(w.uav_energy[u], 0.0, cfg.uav_energy_max);
    if (cfg.uav_obs_served_positions) {
      for (int i = 0; i < w.num_uds(); ++i) {
        if (i < static_cast<int>(served_by.size()) && served_by[i] == u) {
          o[3 + 2 * i] = detail::unit(w.ud_pos[i].x, 0.0, cfg.area_x_max);
          o[4 + 2 * i] = detail::unit(w.ud_pos[i].y, 0.0, cfg.area_y_max);
        }
      }
    }
    obs.push_back(std::move(o));
  }
  return obs;
}

inline double decode_ratio(double a) { return std::clamp((std::clamp(a, -1.0, 1.0) + 1.0) / 2.0, 0.0, 1.0); }

inline UavControl decode_control(double heading_a, double speed_a, double v_max) {
  return UavControl{kPi * std::clamp(heading_a, -1.0, 1.0),
                    v_max * (std::clamp(speed_a, -1.0, 1.0) + 1.0) / 2.0}
      .bounded(v_max);
}

struct JointDecision {
  std::vector<double> ratios;
  std::vector<UavControl> controls;
};

inline JointDecision decode_actions(const AgentLayout& layout, const std::vector<Vector>& actions,
                                    double v_max) {
  if (static_cast<int>(actions.size()) != layout.num_agents())
    throw std::invalid_argument("decode_actions: expected " + std::to_string(layout.num_agents()) +
                                " actions, got " + std::to_string(actions.size()));
  JointDecision d;
  for (int m = 0; m < layout.num_agents(); ++m) {
    if (actions[m].size() != layout.act_dim(m))
      throw std::invalid_argument("decode_actions: agent " + std::to_string(m) + " action size");
    if (layout.is_ud(m))
      d.ratios.push_back(decode_ratio(actions[m][0]));
    else
      d.controls.push_back(decode_control(actions[m][0], actions[m][1], v_max));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Rewards

struct Rewards {
  double system = 0.0;             // shared term, already scaled
  std::vector<double> per_agent;   // UD agents then UAV agents
  int deadline_violations = 0;
};

/// Per-agent rewards for one slot. Every term is divided by
/// cfg.reward_cost_ref. UD i: w_S(-C + r_p) - w_I c_i with c_i = w_T T_i +
/// w_E E_i and r_p = -r_d * (#late). UAV u: w_S(-C + r_p) + w_I g_u with
/// g_u = s * (sum of c_i over served UDs) - boundary/collision/exhaustion
/// penalties, where s = -1 by default and +1 under the literal sign.
inline Rewards compute_rewards(const ScenarioConfig& cfg, const StepOutcome& out) {
  Rewards r;
  const double scale = 1.0 / cfg.reward_cost_ref;
  for (const auto& o : out.uds) r.deadline_violations += o.deadline_violated ? 1 : 0;
  const double penalty = -cfg.penalty_deadline * r.deadline_violations;
  r.system = cfg.w_system * (-out.cost + penalty) * scale;
  std::vector<double> served(out.uavs.size(), 0.0);
  for (const auto& o : out.uds) {
    const double c = cfg.w_delay * o.t_total + cfg.w_energy * o.e_total;
    r.per_agent.push_back(r.system - cfg.w_individual * c * scale);
    if (o.server >= 0 && o.server < static_cast<int>(served.size())) served[o.server] += c;
  }
  const double sign = cfg.uav_reward_literal_sign ? 1.0 : -1.0;
  for (std::size_t u = 0; u < out.uavs.size(); ++u) {
    const auto& a = out.uavs[u];
    const double individual = sign * served[u] - (a.boundary_violated ? cfg.penalty_boundary : 0.0) -
                              (a.collision ? cfg.penalty_collision : 0.0) -
                              (a.energy_exhausted ? cfg.penalty_energy : 0.0);
    r.per_agent.push_back(r.system + cfg.w_individual * individual * scale);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Environment

enum class Association { Coalition, Nearest };

struct EnvOptions {
  Association association = Association::Coalition;
  AllocationRule allocation = AllocationRule::ClosedForm;
  bool record_game_trace = false;
};

/// Everything that happened in one slot, enough to audit cost and rewards.
struct SlotRecord {
  int slot = 0;
  std::vector<Vec2> ud_pos;
  std::vector<Vec2> uav_pos;
  std::vector<Vec2> sat_pos;
  std::vector<Task> tasks;
  JointDecision decision;
  std::vector<double> rain_db;
  std::vector<int> server;
  StepOutcome outcome;
  Rewards rewards;
  int game_sweeps = 0;
  std::vector<GameTraceRecord> game_trace;
  // Per UAV: computation-delay objective under the rule in use and under
  // the closed form, for the same association.
  std::vector<double> alloc_objective;
  std::vector<double> alloc_objective_closed;
  bool terminal = false;
};

struct StepResult {
  SlotRecord record;
  std::vector<Vector> next_obs;
  bool terminal = false;
};

class Environment {
 public:
  Environment(const ScenarioConfig& cfg, std::uint64_t seed, EnvOptions opts = {})
      : cfg_(cfg), seed_(seed), opts_(opts), layout_(cfg) {
    require_valid(cfg_);
  }

  const ScenarioConfig& cfg() const { return cfg_; }
  const AgentLayout& layout() const { return layout_; }
  const WorldState& world() const { return world_; }
  RngStreams& streams() { return streams_; }
  bool done() const { return done_; }
  const EnvOptions& options() const { return opts_; }

  /// Starts episode `episode`; all randomness comes from streams derived
  /// from (seed, episode).
  std::vector<Vector> reset(std::uint64_t episode = 0) {
    streams_ = RngStreams(seed_, episode);
    world_ = init_world(cfg_, streams_);
    served_by_.assign(cfg_.num_uds, -1);
    done_ = false;
    return observe(cfg_, world_, served_by_);
  }

  StepResult step(const std::vector<Vector>& actions) {
    if (done_) throw std::logic_error("Environment::step after terminal slot");
    StepResult res;
    SlotRecord& rec = res.record;
    rec.slot = world_.slot;
    rec.ud_pos = world_.ud_pos;
    rec.uav_pos = world_.uav_pos;
    rec.sat_pos = world_.sat_pos;
    rec.tasks = world_.tasks;
    rec.decision = decode_actions(layout_, actions, cfg_.v_uav_max);

    const int I = cfg_.num_uds, U = cfg_.num_uavs;
    for (int i = 0; i < I; ++i)
      rec.rain_db.push_back(sample_rain_attenuation(cfg_.rain_shape, cfg_.rain_scale_db, streams_.rain));
    const SlotContext ctx(cfg_, world_, rec.decision.ratios, rec.rain_db, &streams_.los);

    CoalitionPartition partition;
    if (opts_.association == Association::Coalition) {
      auto game = run_coalition_game(ctx, streams_.game,
                                     opts_.record_game_trace ? &rec.game_trace : nullptr);
      rec.game_sweeps = game.sweeps;
      partition = std::move(game.partition);
    } else {
      partition = policy_no(ctx);
    }
    rec.server = partition.assignment();

    StepOutcome& out = rec.outcome;
    out.uds.resize(I);
    for (int k = 0; k < ctx.num_servers(); ++k) {
      const auto& members = partition.members(k);
      if (members.empty()) continue;
      const auto outcomes = ctx.coalition_outcomes(k, members, opts_.allocation);
      for (std::size_t j = 0; j < members.size(); ++j) out.uds[members[j]] = outcomes[j];
    }
    for (int u = 0; u < U; ++u) {
      std::vector<double> work;
      for (int i : partition.members(u)) work.push_back(ctx.work(i));
      const double fmax = world_.uav_fmax[u];
      const auto f_used = opts_.allocation == AllocationRule::ClosedForm ? allocate_computing(work, fmax)
                                                                         : allocate_equal(work, fmax);
      rec.alloc_objective.push_back(allocation_objective(work, f_used));
      rec.alloc_objective_closed.push_back(allocation_objective(work, allocate_computing(work, fmax)));
    }

    // UAV energy and motion.
    out.uavs.resize(U);
    std::vector<Vec2> next_uav(U);
    for (int u = 0; u < U; ++u) {
      UavOutcome& a = out.uavs[u];
      for (int i : partition.members(u)) a.e_compute += ctx.work(i) * cfg_.uav_cycle_energy;
      const auto prop = propulsion_energy(rec.decision.controls[u].speed, cfg_.prop_delta,
                                          cfg_.rotor_tip_speed, cfg_.slot_len);
      a.e_propulsion = prop.energy;
      a.propulsion_clamped = prop.clamped;
      a.e_total = a.e_compute + a.e_propulsion;
      const auto motion = step_uav(world_.uav_pos[u], rec.decision.controls[u], cfg_);
      a.boundary_violated = motion.boundary_violated;
      next_uav[u] = motion.pos;
    }
    for (const auto& [a, b] : check_safety(next_uav, cfg_.safety_dist)) {
      out.uavs[a].collision = true;
      out.uavs[b].collision = true;
    }
    for (int u = 0; u < U; ++u) {
      world_.uav_energy[u] = std::max(0.0, world_.uav_energy[u] - out.uavs[u].e_total);
      out.uavs[u].energy_exhausted = world_.uav_energy[u] <= 0.0;
    }
    world_.uav_pos = next_uav;

    // UD energy and motion.
    const Vec2 area{cfg_.area_x_max, cfg_.area_y_max};
    for (int i = 0; i < I; ++i) {
      world_.ud_energy[i] = std::max(0.0, world_.ud_energy[i] - out.uds[i].e_total);
      const GaussMarkovParams gm{cfg_.gm_alpha, world_.ud_mean_vel[i], cfg_.gm_noise_std};
      const auto m = step_ud(world_.ud_pos[i], world_.ud_vel[i], gm, area, cfg_.slot_len,
                             streams_.mobility);
      world_.ud_pos[i] = m.pos;
      world_.ud_vel[i] = m.vel;
    }
    for (auto& s : world_.sat_pos) s = s + cfg_.sat_velocity * cfg_.slot_len;

    out.cost = aggregate(out.uds, cfg_.w_delay, cfg_.w_energy).cost;
    rec.rewards = compute_rewards(cfg_, out);

    // Next slot.
    world_.slot += 1;
    for (int i = 0; i < I; ++i) world_.tasks[i] = sample_task(cfg_, streams_.tasks);
    const bool exhausted = std::any_of(out.uavs.begin(), out.uavs.end(),
                                       [](const UavOutcome& a) { return a.energy_exhausted; });
    done_ = world_.slot >= cfg_.horizon || exhausted;
    rec.terminal = done_;
    res.terminal = done_;

    served_by_.assign(I, -1);
    for (int i = 0; i < I; ++i)
      if (rec.server[i] < U) served_by_[i] = rec.server[i];
    res.next_obs = observe(cfg_, world_, served_by_);
    return res;
  }

 private:
  ScenarioConfig cfg_;
  std::uint64_t seed_;
  EnvOptions opts_;
  AgentLayout layout_;
  RngStreams streams_;
  WorldState world_;
  std::vector<int> served_by_;
  bool done_ = true;
};

// ---------------------------------------------------------------------------
// Replay buffer

struct Transition {
  Vector obs;       // joint observation
  Vector act;       // joint action in [-1, 1]
  Vector rew;       // one reward per agent
  Vector next_obs;  // joint observation after the step
  bool done = false;
};

struct Batch {
  Matrix obs;
  Matrix act;
  Matrix rew;
  Matrix next_obs;
  Vector done;  // 1 for terminal transitions
  int size() const { return static_cast<int>(obs.cols()); }
};

/// Fixed-capacity FIFO store with uniform sampling with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be > 0");
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const {
    if (i >= data_.size()) throw std::out_of_range("replay index");
    return data_.size() < capacity_ ? data_[i] : data_[(next_ + i) % capacity_];
  }

  std::vector<std::size_t> sample_indices(int n, Engine& rng) const {
    if (data_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t> idx(n);
    for (auto& k : idx) k = pick(rng);
    return idx;
  }

  Batch sample(int n, Engine& rng) const { return gather(sample_indices(n, rng)); }

  /// Storage-order indices (as returned by sample_indices) to a batch.
  Batch gather(const std::vector<std::size_t>& idx) const {
    const int n = static_cast<int>(idx.size());
    const Transition& first = data_.at(idx.at(0));
    Batch b;
    b.obs.resize(first.obs.size(), n);
    b.act.resize(first.act.size(), n);
    b.rew.resize(first.rew.size(), n);
    b.next_obs.resize(first.next_obs.size(), n);
    b.done.resize(n);
    for (int c = 0; c < n; ++c) {
      const Transition& t = data_[idx[c]];
      b.obs.col(c) = t.obs;
      b.act.col(c) = t.act;
      b.rew.col(c) = t.rew;
      b.next_obs.col(c) = t.next_obs;
      b.done[c] = t.done ? 1.0 : 0.0;
    }
    return b;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// MADDPG

struct AgentNets {
  nn::Mlp actor, critic, target_actor, target_critic;
  nn::Adam actor_opt, critic_opt;
};

class Maddpg {
 public:
  Maddpg() = default;

  Maddpg(const ScenarioConfig& cfg, std::uint64_t seed)
      : layout_(cfg), gamma_(cfg.gamma), tau_(cfg.tau_target), config_hash_(config_hash(cfg)) {
    Engine rng = make_stream(seed, "weights");
    for (int m = 0; m < layout_.num_agents(); ++m) {
      AgentNets a;
      a.actor = nn::Mlp(layout_.obs_dim(m), cfg.hidden, layout_.act_dim(m), nn::OutputActivation::Tanh, rng);
      a.critic = nn::Mlp(layout_.critic_input_dim(), cfg.hidden, 1, nn::OutputActivation::Linear, rng);
      a.target_actor = a.actor;
      a.target_critic = a.critic;
      a.actor_opt = nn::Adam(a.actor.num_params(), cfg.lr_actor);
      a.critic_opt = nn::Adam(a.critic.num_params(), cfg.lr_critic);
      agents_.push_back(std::move(a));
    }
  }

  const AgentLayout& layout() const { return layout_; }
  std::vector<AgentNets>& agents() { return agents_; }
  const std::vector<AgentNets>& agents() const { return agents_; }
  double gamma() const { return gamma_; }
  void set_gamma(double g) { gamma_ = g; }
  double tau() const { return tau_; }
  const std::string& config_hash_hex() const { return config_hash_; }

  Vector actor_forward(int m, const Vector& obs) const { return agents_.at(m).actor.forward(obs); }

  double critic_forward(int m, const Vector& joint_obs, const Vector& joint_act) const {
    Vector x(layout_.critic_input_dim());
    x << joint_obs, joint_act;
    return agents_.at(m).critic.forward(x)(0, 0);
  }

  /// Actor output plus Gaussian noise of std `noise_scale`, clamped to
  /// [-1, 1]. Zero noise draws nothing from `rng`.
  Vector select_action(int m, const Vector& obs, double noise_scale, Engine& rng) const {
    Vector a = actor_forward(m, obs);
    if (noise_scale > 0.0)
      for (Eigen::Index k = 0; k < a.size(); ++k) a[k] += noise_scale * gaussian(rng);
    return a.cwiseMax(-1.0).cwiseMin(1.0);
  }

  std::vector<Vector> act(const std::vector<Vector>& obs) const {
    std::vector<Vector> out;
    for (int m = 0; m < layout_.num_agents(); ++m) out.push_back(actor_forward(m, obs[m]));
    return out;
  }

  /// Joint next-state action from every target actor.
  Matrix target_actions(const Matrix& next_obs) const {
    Matrix a(layout_.joint_act_dim(), next_obs.cols());
    for (int m = 0; m < layout_.num_agents(); ++m)
      a.middleRows(layout_.act_offset(m), layout_.act_dim(m)) = agents_[m].target_actor.forward(
          next_obs.middleRows(layout_.obs_offset(m), layout_.obs_dim(m)));
    return a;
  }

  /// TD targets r + gamma (1 - done) Q'(s', a') for agent m.
  Vector td_targets(int m, const Batch& b, const Matrix& next_act) const {
    Matrix x(layout_.critic_input_dim(), b.size());
    x << b.next_obs, next_act;
    const Vector q_next = agents_[m].target_critic.forward(x).row(0).transpose();
    const Vector not_done = (1.0 - b.done.array()).matrix();
    return b.rew.row(m).transpose() + gamma_ * not_done.cwiseProduct(q_next);
  }

  /// Mean squared TD error of agent m's critic and its parameter gradient.
  double critic_loss(int m, const Batch& b, const Matrix& next_act, nn::Gradients* grads = nullptr) const {
    const Vector y = td_targets(m, b, next_act);
    Matrix x(layout_.critic_input_dim(), b.size());
    x << b.obs, b.act;
    nn::Mlp::Tape tape;
    const Vector q = agents_[m].critic.forward(x, tape).row(0).transpose();
    const Vector err = q - y;
    if (grads) {
      const Matrix d_out = (2.0 / b.size()) * err.transpose();
      agents_[m].critic.backward(tape, d_out, grads);
    }
    return err.squaredNorm() / b.size();
  }

  /// Mean Q of agent m when its own batch action is replaced by its actor's
  /// output (other agents' actions held fixed), and the gradient of the
  /// negated objective with respect to the actor parameters.
  double actor_objective(int m, const Batch& b, nn::Gradients* grads = nullptr) const {
    const auto& ag = agents_[m];
    nn::Mlp::Tape actor_tape;
    const Matrix own = ag.actor.forward(b.obs.middleRows(layout_.obs_offset(m), layout_.obs_dim(m)), actor_tape);
    Matrix act = b.act;
    act.middleRows(layout_.act_offset(m), layout_.act_dim(m)) = own;
    Matrix x(layout_.critic_input_dim(), b.size());
    x << b.obs, act;
    nn::Mlp::Tape critic_tape;
    const Matrix q = ag.critic.forward(x, critic_tape);
    if (grads) {
      const Matrix d_q = Matrix::Constant(1, b.size(), -1.0 / b.size());
      const Matrix d_x = ag.critic.backward(critic_tape, d_q);
      const Matrix d_own = d_x.middleRows(layout_.joint_obs_dim() + layout_.act_offset(m), layout_.act_dim(m));
      ag.actor.backward(actor_tape, d_own, grads);
    }
    return q.mean();
  }

  double update_critic(int m, const Batch& b, const Matrix& next_act) {
    nn::Gradients g;
    const double loss = critic_loss(m, b, next_act, &g);
    agents_[m].critic_opt.step(agents_[m].critic, g);
    return loss;
  }

  double update_critic(int m, const Batch& b) { return update_critic(m, b, target_actions(b.next_obs)); }

  double update_actor(int m, const Batch& b) {
    nn::Gradients g;
    const double obj = actor_objective(m, b, &g);
    agents_[m].actor_opt.step(agents_[m].actor, g);
    return obj;
  }

  void soft_update_targets(int m) {
    nn::soft_update(agents_[m].target_actor, agents_[m].actor, tau_);
    nn::soft_update(agents_[m].target_critic, agents_[m].critic, tau_);
  }

  /// One training iteration on a batch: every critic, and on every d-th
  /// step every actor followed by the target networks.
  void update(const Batch& b, long step, int policy_delay) {
    const Matrix next_act = target_actions(b.next_obs);
    for (int m = 0; m < layout_.num_agents(); ++m) update_critic(m, b, next_act);
    if (step % policy_delay == 0) {
      for (int m = 0; m < layout_.num_agents(); ++m) update_actor(m, b);
      for (int m = 0; m < layout_.num_agents(); ++m) soft_update_targets(m);
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : agents_)
      agents.push_back({{"actor", a.actor},
                        {"critic", a.critic},
                        {"target_actor", a.target_actor},
                        {"target_critic", a.target_critic},
                        {"actor_opt", a.actor_opt},
                        {"critic_opt", a.critic_opt}});
    return {{"num_uds", layout_.num_uds},   {"num_uavs", layout_.num_uavs},
            {"ud_obs_dim", layout_.ud_obs_dim}, {"uav_obs_dim", layout_.uav_obs_dim},
            {"gamma", gamma_},              {"tau", tau_},
            {"config_hash", config_hash_},  {"agents", agents}};
  }

  /// Restores networks and optimizer state; throws with a dimension
  /// diagnostic when the checkpoint does not fit `cfg`.
  static Maddpg from_json(const nlohmann::json& j, const ScenarioConfig& cfg) {
    Maddpg p;
    p.layout_ = AgentLayout(cfg);
    AgentLayout stored;
    stored.num_uds = j.at("num_uds").get<int>();
    stored.num_uavs = j.at("num_uavs").get<int>();
    stored.ud_obs_dim = j.at("ud_obs_dim").get<int>();
    stored.uav_obs_dim = j.at("uav_obs_dim").get<int>();
    if (!(stored == p.layout_))
      throw std::invalid_argument("checkpoint/config mismatch: checkpoint has " + stored.describe() +
                                  ", config needs " + p.layout_.describe());
    p.gamma_ = j.at("gamma").get<double>();
    p.tau_ = j.at("tau").get<double>();
    p.config_hash_ = j.at("config_hash").get<std::string>();
    for (const auto& a : j.at("agents")) {
      AgentNets n;
      n.actor = a.at("actor").get<nn::Mlp>();
      n.critic = a.at("critic").get<nn::Mlp>();
      n.target_actor = a.at("target_actor").get<nn::Mlp>();
      n.target_critic = a.at("target_critic").get<nn::Mlp>();
      n.actor_opt = a.at("actor_opt").get<nn::Adam>();
      n.critic_opt = a.at("critic_opt").get<nn::Adam>();
      p.agents_.push_back(std::move(n));
    }
    if (static_cast<int>(p.agents_.size()) != p.layout_.num_agents())
      throw std::invalid_argument("checkpoint agent count does not match its layout");
    for (int m = 0; m < p.layout_.num_agents(); ++m) {
      const auto& n = p.agents_[m];
      if (n.actor.input_dim() != p.layout_.obs_dim(m) || n.actor.output_dim() != p.layout_.act_dim(m) ||
          n.critic.input_dim() != p.layout_.critic_input_dim())
        throw std::invalid_argument("checkpoint/config mismatch: agent " + std::to_string(m) +
                                    " network dimensions differ from " + p.layout_.describe());
    }
    return p;
  }

 private:
  AgentLayout layout_;
  std::vector<AgentNets> agents_;
  double gamma_ = 0.95;
  double tau_ = 5e-3;
  std::string config_hash_;
};

// ---------------------------------------------------------------------------
// Training loop

struct EpisodeStats {
  int episode = 0;
  int steps = 0;
  double system_reward = 0.0;      // per-slot mean of the shared reward term
  double system_reward_sum = 0.0;
  double cost_sum = 0.0;
  std::vector<double> agent_reward_sums;
  int deadline_violations = 0;
  int boundary_violations = 0;
  int collisions = 0;
  bool uav_exhausted = false;
  double noise = 0.0;
};

inline std::string curve_csv_header(const AgentLayout& layout) {
  std::string h = "episode,steps,system_reward,system_reward_sum,cost_sum";
  for (int m = 0; m < layout.num_agents(); ++m)
    h += layout.is_ud(m) ? ",reward_ud" + std::to_string(m)
                         : ",reward_uav" + std::to_string(m - layout.num_uds);
  h += ",deadline_violations,boundary_violations,collisions,uav_exhausted,noise,reward_scale,config_hash";
  return h;
}

inline std::string curve_csv_row(const EpisodeStats& s, double reward_scale, const std::string& cfg_hash) {
  auto num = [](double x) { return nlohmann::json(x).dump(); };
  std::string r = std::to_string(s.episode) + "," + std::to_string(s.steps) + "," + num(s.system_reward) +
                  "," + num(s.system_reward_sum) + "," + num(s.cost_sum);
  for (double x : s.agent_reward_sums) r += "," + num(x);
  r += "," + std::to_string(s.deadline_violations) + "," + std::to_string(s.boundary_violations) + "," +
       std::to_string(s.collisions) + "," + (s.uav_exhausted ? "1" : "0") + "," + num(s.noise) + "," +
       num(reward_scale) + "," + cfg_hash;
  return r;
}

/// Mutable state of a training run, kept together so it can be saved.
struct Trainer {
  ScenarioConfig cfg;
  std::uint64_t seed = 0;
  EnvOptions env_options;
  Maddpg model;
  ReplayBuffer replay{1};
  Engine explore;
  Engine sampler;
  double noise = 0.0;
  long steps = 0;
  int episodes_done = 0;

  Trainer(const ScenarioConfig& c, std::uint64_t s, EnvOptions opts = {})
      : cfg(c), seed(s), env_options(opts), model(c, s),
        replay(static_cast<std::size_t>(c.buffer_size)),
        explore(make_stream(s, "explore")), sampler(make_stream(s, "replay")), noise(c.noise_std) {}

  EpisodeStats run_episode() {
    Environment env(cfg, seed, env_options);
    auto obs = env.reset(static_cast<std::uint64_t>(episodes_done));
    const auto& layout = model.layout();
    EpisodeStats st;
    st.episode = episodes_done;
    st.noise = noise;
    st.agent_reward_sums.assign(layout.num_agents(), 0.0);
    const int warmup = std::max(cfg.warmup, 1);
    while (!env.done()) {
      std::vector<Vector> actions;
      for (int m = 0; m < layout.num_agents(); ++m)
        actions.push_back(model.select_action(m, obs[m], noise, explore));
      auto res = env.step(actions);
      const auto& rec = res.record;
      Vector rew(layout.num_agents());
      for (int m = 0; m < layout.num_agents(); ++m) rew[m] = rec.rewards.per_agent[m];
      replay.push({concat(obs), concat(actions), rew, concat(res.next_obs), res.terminal});
      obs = std::move(res.next_obs);
      ++steps;
      if (replay.size() >= static_cast<std::size_t>(warmup))
        model.update(replay.sample(cfg.batch_size, sampler), steps, cfg.policy_delay);

      ++st.steps;
      st.system_reward_sum += rec.rewards.system;
      st.cost_sum += rec.outcome.cost;
      for (int m = 0; m < layout.num_agents(); ++m) st.agent_reward_sums[m] += rec.rewards.per_agent[m];
      st.deadline_violations += rec.rewards.deadline_violations;
      for (const auto& a : rec.outcome.uavs) {
        st.boundary_violations += a.boundary_violated ? 1 : 0;
        st.collisions += a.collision ? 1 : 0;
        st.uav_exhausted = st.uav_exhausted || a.energy_exhausted;
      }
    }
    st.system_reward = st.steps > 0 ? st.system_reward_sum / st.steps : 0.0;
    noise *= cfg.noise_decay;
    ++episodes_done;
    return st;
  }

  nlohmann::json checkpoint() const {
    return {{"format", "sagin-maddpg-checkpoint"},
            {"version", 1},
            {"config_hash", config_hash(cfg)},
            {"seed", seed},
            {"episodes_done", episodes_done},
            {"steps", steps},
            {"noise", noise},
            {"rng", {{"explore", engine_state(explore)}, {"replay", engine_state(sampler)}}},
            {"model", model.to_json()}};
  }
};

struct TrainResult {
  Maddpg model;
  std::vector<EpisodeStats> curve;
  nlohmann::json checkpoint;
};

inline TrainResult train(const ScenarioConfig& cfg, int episodes, std::uint64_t seed, EnvOptions opts = {},
                         const std::function<void(const EpisodeStats&)>& on_episode = {}) {
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  Trainer t(cfg, seed, opts);
  TrainResult r;
  for (int e = 0; e < episodes; ++e) {
    r.curve.push_back(t.run_episode());
    if (on_episode) on_episode(r.curve.back());
  }
  r.model = t.model;
  r.checkpoint = t.checkpoint();
  return r;
}

/// Loads the policy networks from a checkpoint document for `cfg`.
inline Maddpg load_policy(const nlohmann::json& checkpoint, const ScenarioConfig& cfg) {
  if (checkpoint.value("format", "") != "sagin-maddpg-checkpoint")
    throw std::invalid_argument("not a checkpoint document");
  return Maddpg::from_json(checkpoint.at("model"), cfg);
}

}  // namespace sagin
