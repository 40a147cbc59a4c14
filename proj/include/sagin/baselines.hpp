#pragma once

#include <vector>

#include "sagin/channel.hpp"
#include "sagin/cocg.hpp"
#include "sagin/slot.hpp"

namespace sagin {

/// Equal computing split: every UAV divides its f_max evenly among its
/// associated UDs that offload something. Returns one entry per UD (zero
/// for satellite-associated or purely local UDs).
inline std::vector<double> policy_ecra(const SlotContext& ctx, const CoalitionPartition& p) {
  std::vector<double> f(ctx.num_uds(), 0.0);
  for (int u = 0; u < ctx.num_uavs(); ++u) {
    const auto& members = p.members(u);
    std::vector<double> work;
    for (int i : members) work.push_back(ctx.work(i));
    const auto share = allocate_equal(work, ctx.world().uav_fmax[u]);
    for (std::size_t j = 0; j < members.size(); ++j) f[members[j]] = share[j];
  }
  return f;
}

/// Nearest-server association by 3D distance over all UAVs and satellites,
/// ignoring coverage. Ties go to the lower server index.
inline CoalitionPartition policy_no(const SlotContext& ctx) {
  std::vector<int> choice(ctx.num_uds());
  for (int i = 0; i < ctx.num_uds(); ++i) {
    int best = -1;
    double best_d = 0.0;
    for (int k = 0; k < ctx.num_servers(); ++k) {
      const double d = ctx.is_uav(k) ? ctx.uav_link(i, k).distance
                                     : ctx.sat_link(i, k - ctx.num_uavs()).distance;
      if (best < 0 || d < best_d) {
        best = k;
        best_d = d;
      }
    }
    choice[i] = best;
  }
  return CoalitionPartition::from_assignment(choice, ctx.num_servers());
}

}  // namespace sagin
