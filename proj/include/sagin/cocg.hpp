#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sagin/rng.hpp"
#include "sagin/slot.hpp"

namespace sagin {

/// Disjoint coalitions of UDs, one per server, covering every UD.
class CoalitionPartition {
 public:
  CoalitionPartition() = default;
  CoalitionPartition(int num_uds, int num_servers)
      : server_of_(num_uds, -1), members_(num_servers) {}

  /// Builds a partition from a per-UD server assignment.
  static CoalitionPartition from_assignment(const std::vector<int>& server_of, int num_servers) {
    CoalitionPartition p(static_cast<int>(server_of.size()), num_servers);
    for (int i = 0; i < static_cast<int>(server_of.size()); ++i) p.assign(i, server_of[i]);
    return p;
  }

  int num_uds() const { return static_cast<int>(server_of_.size()); }
  int num_servers() const { return static_cast<int>(members_.size()); }
  int server_of(int i) const { return server_of_[i]; }
  const std::vector<int>& assignment() const { return server_of_; }
  const std::vector<int>& members(int k) const { return members_[k]; }
  std::size_t size(int k) const { return members_[k].size(); }

  void assign(int i, int k) {
    if (k < 0 || k >= num_servers()) throw std::out_of_range("partition: bad server index");
    const int old = server_of_[i];
    if (old == k) return;
    if (old >= 0) std::erase(members_[old], i);
    auto& m = members_[k];
    m.insert(std::lower_bound(m.begin(), m.end(), i), i);
    server_of_[i] = k;
  }

  /// Pairwise disjoint, covering, and consistent with the assignment.
  bool valid() const {
    std::vector<int> seen(num_uds(), 0);
    for (int k = 0; k < num_servers(); ++k)
      for (int i : members_[k]) {
        if (i < 0 || i >= num_uds() || server_of_[i] != k) return false;
        ++seen[i];
      }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }

  bool operator==(const CoalitionPartition&) const = default;

 private:
  std::vector<int> server_of_;
  std::vector<std::vector<int>> members_;
};

/// Per-member utilities (negated offload costs) of coalition k.
inline std::vector<double> member_utilities(const SlotContext& ctx, int k,
                                            std::span<const int> members) {
  std::vector<double> u;
  u.reserve(members.size());
  for (const auto& o : ctx.coalition_outcomes(k, members)) u.push_back(-ctx.offload_cost(o));
  return u;
}

inline double coalition_utility(const SlotContext& ctx, int k, std::span<const int> members) {
  double s = 0.0;
  for (double u : member_utilities(ctx, k, members)) s += u;
  return s;
}

inline double total_utility(const SlotContext& ctx, const CoalitionPartition& p) {
  double s = 0.0;
  for (int k = 0; k < p.num_servers(); ++k) s += coalition_utility(ctx, k, p.members(k));
  return s;
}

/// Offload cost of UD i if it sits in coalition k, every other UD staying
/// where the partition puts it.
inline double offload_cost(const SlotContext& ctx, const CoalitionPartition& p, int i, int k) {
  std::vector<int> members = p.members(k);
  if (p.server_of(i) != k) members.insert(std::lower_bound(members.begin(), members.end(), i), i);
  const auto outcomes = ctx.coalition_outcomes(k, members);
  const auto pos = std::lower_bound(members.begin(), members.end(), i) - members.begin();
  return ctx.offload_cost(outcomes[pos]);
}

/// Utility comparisons accept `new >= old` up to a relative rounding slack.
inline double utility_tolerance(double reference) {
  return 1e-12 * (1.0 + std::abs(reference));
}

struct MoveResult {
  bool accepted = false;
  double delta = 0.0;  // change of the two affected coalitions' utility sum
};

namespace detail {

inline std::vector<int> with(std::vector<int> v, int i) {
  v.insert(std::lower_bound(v.begin(), v.end(), i), i);
  return v;
}
inline std::vector<int> without(std::vector<int> v, int i) {
  std::erase(v, i);
  return v;
}

inline double switch_delta(const SlotContext& ctx, const CoalitionPartition& p, int i, int i2) {
  const int k = p.server_of(i), k2 = p.server_of(i2);
  const double before = coalition_utility(ctx, k, p.members(k)) + coalition_utility(ctx, k2, p.members(k2));
  const double after = coalition_utility(ctx, k, with(without(p.members(k), i), i2)) +
                       coalition_utility(ctx, k2, with(without(p.members(k2), i2), i));
  return after - before;
}

inline double insert_delta(const SlotContext& ctx, const CoalitionPartition& p, int i, int k2) {
  const int k = p.server_of(i);
  const double before = coalition_utility(ctx, k, p.members(k)) + coalition_utility(ctx, k2, p.members(k2));
  const double after = coalition_utility(ctx, k, without(p.members(k), i)) +
                       coalition_utility(ctx, k2, with(p.members(k2), i));
  return after - before;
}

}  // namespace detail

/// Swap rule: UDs i (in G_k) and i2 (in G_k2) exchange coalitions when the
/// two coalitions' summed utility does not decrease.
inline MoveResult try_switch(const SlotContext& ctx, CoalitionPartition& p, int i, int i2) {
  const int k = p.server_of(i), k2 = p.server_of(i2);
  if (k == k2) throw std::invalid_argument("try_switch: UDs share a coalition");
  MoveResult r;
  r.delta = detail::switch_delta(ctx, p, i, i2);
  r.accepted = r.delta >= -utility_tolerance(total_utility(ctx, p));
  if (r.accepted) {
    p.assign(i, k2);
    p.assign(i2, k);
  }
  return r;
}

/// Insert rule: UD i leaves G_k for G_k2 when the summed utility of the two
/// coalitions does not decrease.
inline MoveResult try_insert(const SlotContext& ctx, CoalitionPartition& p, int i, int k2) {
  if (p.server_of(i) == k2) throw std::invalid_argument("try_insert: already in target coalition");
  MoveResult r;
  r.delta = detail::insert_delta(ctx, p, i, k2);
  r.accepted = r.delta >= -utility_tolerance(total_utility(ctx, p));
  if (r.accepted) p.assign(i, k2);
  return r;
}

/// Initial partition: UDs inside a UAV's coverage radius join the nearest
/// such UAV; the rest join the nearest satellite.
inline CoalitionPartition initial_partition(const SlotContext& ctx) {
  const auto& w = ctx.world();
  const auto& cfg = ctx.cfg();
  CoalitionPartition p(ctx.num_uds(), ctx.num_servers());
  for (int i = 0; i < ctx.num_uds(); ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int u = 0; u < ctx.num_uavs(); ++u) {
      const double d = (w.ud_pos[i] - w.uav_pos[u]).norm();
      if (d <= cfg.coverage_radius && d < best_d) {
        best = u;
        best_d = d;
      }
    }
    if (best < 0) {
      for (int n = 0; n < ctx.num_sats(); ++n) {
        const double d = distance_3d(w.ud_pos[i], w.sat_pos[n], cfg.sat_alt);
        if (d < best_d) {
          best = ctx.num_uavs() + n;
          best_d = d;
        }
      }
    }
    p.assign(i, best);
  }
  return p;
}

struct GameTraceRecord {
  std::string op;  // "switch" or "insert"
  int ud = -1;
  int other_ud = -1;  // switch partner, -1 for insert
  int from = -1;
  int to = -1;
  double delta = 0.0;
  bool accepted = false;
  double total_before = 0.0;
  double total_after = 0.0;
};

inline nlohmann::json to_json(const GameTraceRecord& r) {
  return {{"op", r.op},         {"ud", r.ud},
          {"other_ud", r.other_ud}, {"from", r.from},
          {"to", r.to},         {"delta", r.delta},
          {"accepted", r.accepted}, {"total_before", r.total_before},
          {"total_after", r.total_after}};
}

struct GameResult {
  CoalitionPartition partition;
  int sweeps = 0;
  int accepted_ops = 0;
  double total_utility = 0.0;
};

class GameDidNotConverge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coalition formation: starting from the coverage-based partition, sweep
/// UDs in random order; for each nominee coalition try a switch with each of
/// its members (random order), and otherwise an insert. Strictly improving
/// moves are always taken; zero-gain moves at most once per (UD, server) per
/// sweep. Stops after a sweep with no strict improvement.
inline GameResult run_coalition_game(const SlotContext& ctx, Engine& rng,
                                     std::vector<GameTraceRecord>* trace = nullptr) {
  GameResult res;
  CoalitionPartition p = initial_partition(ctx);
  const int I = ctx.num_uds();
  const int max_sweeps = std::max(1, ctx.cfg().max_sweeps_per_ud * I);
  double total = total_utility(ctx, p);

  std::vector<int> order(I);
  for (int sweep = 1;; ++sweep) {
    if (sweep > max_sweeps)
      throw GameDidNotConverge("coalition game exceeded " + std::to_string(max_sweeps) +
                               " sweeps (I=" + std::to_string(I) + ")");
    res.sweeps = sweep;
    bool improved = false;
    std::set<std::pair<int, int>> zero_moves;
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    auto consider = [&](double delta, std::initializer_list<std::pair<int, int>> keys) {
      const double tol = utility_tolerance(total);
      if (delta > tol) return true;
      if (delta < -tol) return false;
      for (const auto& key : keys)
        if (zero_moves.count(key)) return false;
      for (const auto& key : keys) zero_moves.insert(key);
      return true;
    };

    for (int i : order) {
      std::vector<int> targets = ctx.nominees(i);
      std::shuffle(targets.begin(), targets.end(), rng);
      for (int k2 : targets) {
        const int k = p.server_of(i);
        if (k2 == k) continue;
        bool moved = false;

        std::vector<int> partners = p.members(k2);
        std::shuffle(partners.begin(), partners.end(), rng);
        for (int i2 : partners) {
          if (!ctx.is_nominee(i2, k)) continue;
          const double delta = detail::switch_delta(ctx, p, i, i2);
          const bool ok = consider(delta, {{i, k2}, {i2, k}});
          GameTraceRecord rec{"switch", i, i2, k, k2, delta, ok, total, total};
          if (ok) {
            p.assign(i, k2);
            p.assign(i2, k);
            total = total_utility(ctx, p);
            rec.total_after = total;
            ++res.accepted_ops;
            improved = improved || delta > utility_tolerance(rec.total_before);
            moved = true;
          }
          if (trace) trace->push_back(rec);
          if (moved) break;
        }
        if (moved) continue;

        const double delta = detail::insert_delta(ctx, p, i, k2);
        const bool ok = consider(delta, {{i, k2}});
        GameTraceRecord rec{"insert", i, -1, k, k2, delta, ok, total, total};
        if (ok) {
          p.assign(i, k2);
          total = total_utility(ctx, p);
          rec.total_after = total;
          ++res.accepted_ops;
          improved = improved || delta > utility_tolerance(rec.total_before);
        }
        if (trace) trace->push_back(rec);
      }
    }
    if (!improved) break;
  }
  res.partition = std::move(p);
  res.total_utility = total;
  return res;
}

struct Deviation {
  int ud = -1;
  int from = -1;
  int to = -1;
  double utility_now = 0.0;
  double utility_after = 0.0;
};

struct NashCheck {
  bool is_ne = true;
  std::optional<Deviation> counterexample;
};

/// Checks that no UD can strictly raise its own utility by moving alone to
/// another server, the co-members of the target coalition having their
/// bandwidth and computing shares recomputed. With `nominees_only` the
/// alternatives are the UD's nominee servers (the game's strategy set);
/// otherwise every server.
inline NashCheck verify_nash(const SlotContext& ctx, const CoalitionPartition& p,
                             bool nominees_only = true) {
  NashCheck res;
  for (int i = 0; i < ctx.num_uds(); ++i) {
    const int k = p.server_of(i);
    const double now = -offload_cost(ctx, p, i, k);
    std::vector<int> alts;
    if (nominees_only) {
      alts = ctx.nominees(i);
    } else {
      alts.resize(ctx.num_servers());
      std::iota(alts.begin(), alts.end(), 0);
    }
    for (int k2 : alts) {
      if (k2 == k) continue;
      const double after = -offload_cost(ctx, p, i, k2);
      if (after > now + utility_tolerance(now)) {
        res.is_ne = false;
        res.counterexample = Deviation{i, k, k2, now, after};
        return res;
      }
    }
  }
  return res;
}

/// Coalition-level stability: no single insert or switch among nominees
/// raises the summed utility of the two coalitions it touches. This is the
/// stopping condition of the game and holds for every partition it returns.
inline bool is_switch_stable(const SlotContext& ctx, const CoalitionPartition& p) {
  for (int i = 0; i < ctx.num_uds(); ++i) {
    const int k = p.server_of(i);
    for (int k2 : ctx.nominees(i)) {
      if (k2 == k) continue;
      const double ref = total_utility(ctx, p);
      if (detail::insert_delta(ctx, p, i, k2) > utility_tolerance(ref)) return false;
      for (int i2 : p.members(k2)) {
        if (!ctx.is_nominee(i2, k)) continue;
        if (detail::switch_delta(ctx, p, i, i2) > utility_tolerance(ref)) return false;
      }
    }
  }
  return true;
}

/// Brute-force reference for the allocation problem: minimizes
/// sum(work_i / f_i) over the simplex sum(f_i) = f_max by exhaustive search
/// on a grid of `grid_n` steps, then on successively finer local grids
/// around the incumbent. Supports at most five claimants.
inline std::vector<double> oracle_allocate(std::span<const double> work, double f_max,
                                           int grid_n = 40) {
  if (work.size() > 5) throw std::invalid_argument("oracle_allocate: at most 5 UDs");
  std::vector<int> active;
  for (int i = 0; i < static_cast<int>(work.size()); ++i)
    if (work[i] > 0.0) active.push_back(i);
  std::vector<double> f(work.size(), 0.0);
  const int d = static_cast<int>(active.size());
  if (d == 0) return f;
  if (d == 1) {
    f[active[0]] = f_max;
    return f;
  }

  // Shares s (summing to 1) are parameterized by their first d-1 entries.
  auto objective = [&](const std::vector<double>& s) {
    double obj = 0.0;
    for (int j = 0; j < d; ++j) {
      if (s[j] <= 0.0) return std::numeric_limits<double>::infinity();
      obj += work[active[j]] / (s[j] * f_max);
    }
    return obj;
  };

  std::vector<double> best(d, 1.0 / d);
  double best_obj = objective(best);

  // Recursively enumerate grid points centred on `centre` with spacing h
  // and `radius` steps per free coordinate (radius < 0: whole simplex).
  std::vector<double> s(d);
  auto search = [&](const std::vector<double>& centre, double h, int radius) {
    auto rec = [&](auto&& self, int j, double used) -> void {
      if (j == d - 1) {
        s[j] = 1.0 - used;
        const double obj = objective(s);
        if (obj < best_obj) {
          best_obj = obj;
          best = s;
        }
        return;
      }
      if (radius < 0) {
        for (int a = 1; used + a * h < 1.0 - 1e-12; ++a) {
          s[j] = a * h;
          self(self, j + 1, used + s[j]);
        }
      } else {
        for (int a = -radius; a <= radius; ++a) {
          s[j] = centre[j] + a * h;
          if (s[j] <= 0.0) continue;
          self(self, j + 1, used + s[j]);
        }
      }
    };
    rec(rec, 0, 0.0);
  };

  const double coarse = 1.0 / grid_n;
  search(best, coarse, -1);
  double h = coarse;
  for (int level = 0; level < 40; ++level) {
    h /= 2.0;
    search(std::vector<double>(best), h, 2);
  }
  for (int j = 0; j < d; ++j) f[active[j]] = best[j] * f_max;
  return f;
}

}  // namespace sagin
