#include "cavmix/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cavmix/cacc_model.hpp"

namespace cavmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool platoon_targeted(const World& world, PlatoonId pid) {
  return std::any_of(world.plans.begin(), world.plans.end(),
                     [pid](const auto& kv) { return kv.second.platoon == pid; });
}

bool partner_targeted(const World& world, VehicleId id) {
  return std::any_of(world.plans.begin(), world.plans.end(),
                     [id](const auto& kv) { return kv.second.partner == id; });
}

bool available_partner(const World& world, const VehicleState& v) {
  return v.cls == VehicleClass::CAV && !v.platoon_id && !world.plans.count(v.id) &&
         !partner_targeted(world, v.id);
}

void log_event(World& world, CoordinationEventType type, std::optional<VehicleId> joiner,
               std::optional<PlatoonId> platoon, std::optional<JoinKind> kind) {
  world.events.push_back(CoordinationEvent{world.time, type, joiner, platoon, kind});
}

}  // namespace

std::string_view to_string(GapVerdict v) noexcept {
  switch (v) {
    case GapVerdict::GapsOk: return "GAPS_OK";
    case GapVerdict::NeedGap: return "NEED_GAP";
    case GapVerdict::Unsafe: return "UNSAFE";
  }
  return "UNSAFE";
}

std::optional<Slot> locate_slot(const VehicleState& subject, const JoinPlan& plan, const World& world) {
  const double x = subject.position;
  if (plan.platoon) {
    auto it = world.platoons.find(*plan.platoon);
    if (it == world.platoons.end() || it->second.members.empty()) return std::nullopt;
    const auto& m = it->second.members;
    if (x > world.at(m.front()).position) return Slot{JoinKind::Front, std::nullopt};
    if (x <= world.at(m.back()).position) return Slot{JoinKind::Rear, std::nullopt};
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
      if (world.at(m[i]).position >= x && x > world.at(m[i + 1]).position) {
        return Slot{JoinKind::Mid, m[i + 1]};
      }
    }
    return std::nullopt;
  }
  if (plan.partner) {
    const auto* partner = world.find(*plan.partner);
    if (!partner) return std::nullopt;
    return Slot{x > partner->position ? JoinKind::Front : JoinKind::Rear, std::nullopt};
  }
  return std::nullopt;
}

std::optional<JoinTarget> scan_for_platoon(const VehicleState& subject, const World& world,
                                           const CaccParams& p) {
  if (subject.cls != VehicleClass::CAV || subject.platoon_id) return std::nullopt;

  if (const auto* lead = world.leader_of(subject.id);
      lead && lead->cls == VehicleClass::CAV && World::net_gap(*lead, subject) <= p.d_front) {
    if (lead->platoon_id) {
      const auto& pl = world.platoons.at(*lead->platoon_id);
      if (static_cast<int>(pl.members.size()) < p.phi_max && pl.members.back() == lead->id &&
          !platoon_targeted(world, pl.id)) {
        return JoinTarget{pl.id, std::nullopt, JoinKind::InLaneRear, subject.lane};
      }
    } else if (available_partner(world, *lead)) {
      return JoinTarget{std::nullopt, lead->id, JoinKind::InLaneRear, subject.lane};
    }
  }

  std::optional<JoinTarget> best;
  double best_distance = kInf;
  for (int lane : {subject.lane - 1, subject.lane + 1}) {
    if (lane < 0 || lane >= world.lane_count()) continue;
    for (VehicleId id : world.lane(lane)) {
      const auto& v = world.at(id);
      if (v.cls != VehicleClass::CAV) continue;
      const double d = v.position - subject.position;
      if (d < -p.d_rear || d > p.d_front) continue;
      JoinTarget candidate{std::nullopt, std::nullopt, JoinKind::Rear, lane};
      if (v.platoon_id) {
        const auto& pl = world.platoons.at(*v.platoon_id);
        if (static_cast<int>(pl.members.size()) >= p.phi_max || platoon_targeted(world, pl.id)) continue;
        candidate.platoon = pl.id;
      } else {
        if (!available_partner(world, v)) continue;
        candidate.partner = v.id;
      }
      if (std::abs(d) < best_distance) {
        best_distance = std::abs(d);
        best = candidate;
      }
    }
  }
  if (!best) return std::nullopt;
  JoinPlan probe;
  probe.platoon = best->platoon;
  probe.partner = best->partner;
  auto slot = locate_slot(subject, probe, world);
  if (!slot) return std::nullopt;
  best->kind = slot->kind;
  return best;
}

ProjectedGaps projected_gaps(const VehicleState& subject, int lane, const World& world) {
  ProjectedGaps g;
  g.leader = world.projected_leader(lane, subject.position, subject.id);
  g.follower = world.projected_follower(lane, subject.position, subject.id);
  g.front = g.leader ? g.leader->rear() - subject.position : kInf;
  g.rear = g.follower ? subject.rear() - g.follower->position : kInf;
  return g;
}

GapThresholds default_gap_thresholds(const VehicleState& subject, const JoinPlan& plan, const World& world,
                                     const CaccParams& cacc, const HvParams& hv) {
  const auto g = projected_gaps(subject, plan.target_lane, world);
  GapThresholds t;
  if (g.leader) {
    const double T = g.leader->cls == VehicleClass::CAV ? cacc.t_cacc : cacc.t_acc;
    t.front_min = desired_gap(subject.speed, g.leader->speed, T, cacc);
  }
  if (g.follower) {
    if (g.follower->cls == VehicleClass::CAV) {
      t.rear_min = desired_gap(g.follower->speed, subject.speed, cacc.t_cacc, cacc);
    } else {
      t.rear_min = subject.speed > 0.0 ? hv.cc0 + hv.cc1 * std::min(g.follower->speed, subject.speed) : hv.cc0;
    }
  }
  return t;
}

GapVerdict evaluate_gaps(const VehicleState& subject, const JoinPlan& plan, const World& world,
                         const GapThresholds& thresholds) {
  const auto g = projected_gaps(subject, plan.target_lane, world);
  auto id_of = [](const VehicleState* v) { return v ? std::optional<VehicleId>(v->id) : std::nullopt; };

  bool consistent = false;
  std::optional<VehicleId> member_behind;
  if (plan.platoon) {
    auto it = world.platoons.find(*plan.platoon);
    if (it == world.platoons.end() || it->second.members.empty()) return GapVerdict::Unsafe;
    const auto& m = it->second.members;
    switch (plan.kind) {
      case JoinKind::Front:
        consistent = id_of(g.follower) == m.front();
        break;
      case JoinKind::Rear:
        consistent = id_of(g.leader) == m.back();
        break;
      case JoinKind::Mid:
        for (std::size_t i = 0; i + 1 < m.size(); ++i) {
          if (id_of(g.leader) == m[i] && id_of(g.follower) == m[i + 1]) {
            consistent = true;
            member_behind = m[i + 1];
          }
        }
        break;
      case JoinKind::InLaneRear:
        consistent = true;
        break;
    }
  } else if (plan.partner) {
    consistent = plan.kind == JoinKind::Front ? id_of(g.follower) == plan.partner
                                              : id_of(g.leader) == plan.partner;
  }
  if (!consistent) return GapVerdict::Unsafe;

  const bool front_ok = g.front >= thresholds.front_min;
  const bool rear_ok = g.rear >= thresholds.rear_min;
  if (front_ok && rear_ok) return GapVerdict::GapsOk;
  if (plan.kind == JoinKind::Mid && member_behind && !rear_ok) return GapVerdict::NeedGap;
  return GapVerdict::Unsafe;
}

JoinPlan request_gap(JoinPlan plan, const World& world, double now, const CaccParams& p) {
  const auto* subject = world.find(plan.joiner);
  if (subject) {
    if (auto slot = locate_slot(*subject, plan, world); slot && slot->kind == JoinKind::Mid) {
      plan.gap_maker = slot->member_behind;
    }
  }
  plan.state = JoinState::GapRequested;
  plan.deadline = now + p.gap_request_timeout;
  return plan;
}

bool commit_lane_change(JoinPlan& plan, World& world, const GapThresholds& thresholds) {
  const auto& subject = world.at(plan.joiner);
  if (plan.state != JoinState::Changing ||
      evaluate_gaps(subject, plan, world, thresholds) != GapVerdict::GapsOk) {
    plan.state = JoinState::Scanning;
    return false;
  }
  // Resolve the insertion point before the lane move changes the projection.
  const auto g = projected_gaps(subject, plan.target_lane, world);
  world.move_to_lane(plan.joiner, plan.target_lane);

  if (plan.platoon) {
    auto members = world.platoons.at(*plan.platoon).members;
    switch (plan.kind) {
      case JoinKind::Front:
        members.insert(members.begin(), plan.joiner);
        break;
      case JoinKind::Mid: {
        auto pos = std::find(members.begin(), members.end(), g.follower->id);
        members.insert(pos, plan.joiner);
        break;
      }
      case JoinKind::Rear:
      case JoinKind::InLaneRear:
        members.push_back(plan.joiner);
        break;
    }
    world.set_members(*plan.platoon, std::move(members));
  } else if (plan.partner) {
    if (plan.kind == JoinKind::Front) {
      plan.platoon = world.create_platoon({plan.joiner, *plan.partner});
    } else {
      plan.platoon = world.create_platoon({*plan.partner, plan.joiner});
    }
  }
  plan.state = JoinState::Complete;
  plan.gap_maker.reset();
  log_event(world, CoordinationEventType::Commit, plan.joiner, plan.platoon, plan.kind);
  return true;
}

void abort_plan(World& world, VehicleId joiner, const CaccParams& p) {
  auto it = world.plans.find(joiner);
  if (it == world.plans.end()) return;
  it->second.state = JoinState::Aborted;
  it->second.gap_maker.reset();
  log_event(world, CoordinationEventType::Abort, joiner, it->second.platoon, it->second.kind);
  world.cooldown_until[joiner] = world.time + p.abort_cooldown;
  world.plans.erase(it);
}

void refresh_control_modes(World& world, const CaccParams& p, double look_ahead) {
  std::vector<std::pair<VehicleId, ControlMode>> modes;
  for (const auto& [id, v] : world.vehicles()) {
    if (v.cls == VehicleClass::HV) {
      modes.emplace_back(id, ControlMode::Human);
      continue;
    }
    std::optional<LeaderLink> link;
    if (const auto* lead = world.leader_of(id)) {
      const double gap = World::net_gap(*lead, v);
      if (gap <= look_ahead) link = LeaderLink{lead->cls, gap};
    }
    modes.emplace_back(id, to_control_mode(select_gap_mode(link, p)));
  }
  for (auto [id, mode] : modes) world.at(id).mode = mode;
}

void maintain_platoons(World& world, const CaccParams& p, double look_ahead) {
  std::vector<PlatoonId> ids;
  for (const auto& [pid, pl] : world.platoons) ids.push_back(pid);

  for (PlatoonId pid : ids) {
    std::vector<VehicleId> present;
    for (VehicleId id : world.platoons.at(pid).members) {
      if (world.find(id)) present.push_back(id);
    }
    std::vector<std::vector<VehicleId>> groups;
    for (VehicleId id : present) {
      if (!groups.empty()) {
        const VehicleId prev = groups.back().back();
        const auto& a = world.at(prev);
        const auto& b = world.at(id);
        const auto* lead = world.leader_of(id);
        const bool attached = a.lane == b.lane && lead && lead->id == prev &&
                              World::net_gap(a, b) <= 2.0 * p.comm_range;
        if (attached) {
          groups.back().push_back(id);
          continue;
        }
      }
      groups.push_back({id});
    }

    if (groups.empty()) {
      world.dissolve(pid);
      log_event(world, CoordinationEventType::Dissolve, std::nullopt, pid, std::nullopt);
      continue;
    }
    if (groups.size() > 1) {
      log_event(world, CoordinationEventType::Split, std::nullopt, pid, std::nullopt);
    }
    world.set_members(pid, groups.front());
    if (groups.front().size() < 2) {
      world.dissolve(pid);
      log_event(world, CoordinationEventType::Dissolve, std::nullopt, pid, std::nullopt);
    }
    for (std::size_t g = 1; g < groups.size(); ++g) {
      if (groups[g].size() < 2) {
        world.at(groups[g].front()).platoon_id.reset();
        continue;
      }
      world.create_platoon(groups[g]);
    }
  }
  refresh_control_modes(world, p, look_ahead);
}

void ad_hoc_step(World& world, const CaccParams& p, double look_ahead) {
  world.plans.clear();
  refresh_control_modes(world, p, look_ahead);
}

std::optional<VehicleId> gap_request_for(const World& world, VehicleId id) {
  for (const auto& [joiner, plan] : world.plans) {
    if (plan.state == JoinState::GapRequested && plan.gap_maker == id) return joiner;
  }
  return std::nullopt;
}

void local_coordination_step(World& world, const ScenarioConfig& cfg) {
  const auto& p = cfg.cacc_params;
  const double now = world.time;

  std::vector<VehicleId> joiners;
  for (const auto& [id, plan] : world.plans) joiners.push_back(id);

  for (VehicleId joiner : joiners) {
    auto pit = world.plans.find(joiner);
    if (pit == world.plans.end()) continue;
    JoinPlan& plan = pit->second;
    const auto* subject = world.find(joiner);
    if (!subject) {
      world.plans.erase(pit);
      continue;
    }

    bool valid = !subject->platoon_id && world.lane_count() > plan.target_lane &&
                 cfg.network.lane_open(plan.target_lane) && std::abs(subject->lane - plan.target_lane) == 1 &&
                 now < plan.deadline;
    if (valid && plan.platoon) {
      auto it = world.platoons.find(*plan.platoon);
      valid = it != world.platoons.end() && static_cast<int>(it->second.members.size()) < p.phi_max;
    }
    if (valid && plan.partner) {
      const auto* partner = world.find(*plan.partner);
      valid = partner && !partner->platoon_id && partner->lane == plan.target_lane;
    }
    std::optional<Slot> slot;
    if (valid) {
      slot = locate_slot(*subject, plan, world);
      valid = slot.has_value();
    }
    if (valid && slot->kind != plan.kind) {
      plan.kind = slot->kind;
      if (plan.kind != JoinKind::Mid) {
        plan.gap_maker.reset();
        if (plan.state == JoinState::GapRequested) plan.state = JoinState::Scanning;
      }
    }
    if (valid && plan.state == JoinState::GapRequested && plan.kind == JoinKind::Mid) {
      plan.gap_maker = slot->member_behind;
    }
    if (valid && plan.gap_maker) {
      // A gap maker gives up when its own follower has to brake beyond the comfort bound.
      const auto* follower = world.find(*plan.gap_maker) ? world.follower_of(*plan.gap_maker) : nullptr;
      valid = !(follower && follower->accel < -p.b_des);
    }
    if (!valid) {
      abort_plan(world, joiner, p);
      continue;
    }

    const auto thresholds = default_gap_thresholds(*subject, plan, world, p, cfg.hv_params);
    switch (evaluate_gaps(*subject, plan, world, thresholds)) {
      case GapVerdict::GapsOk:
        plan.state = JoinState::Changing;
        if (commit_lane_change(plan, world, thresholds)) world.plans.erase(joiner);
        break;
      case GapVerdict::NeedGap:
        if (plan.state == JoinState::Scanning) {
          plan = request_gap(plan, world, now, p);
          log_event(world, CoordinationEventType::GapRequest, joiner, plan.platoon, plan.kind);
        }
        break;
      case GapVerdict::Unsafe:
        break;
    }
  }

  std::vector<VehicleId> candidates;
  for (const auto& [id, v] : world.vehicles()) {
    if (v.cls != VehicleClass::CAV || v.platoon_id || world.plans.count(id)) continue;
    if (auto cd = world.cooldown_until.find(id); cd != world.cooldown_until.end() && cd->second > now) continue;
    candidates.push_back(id);
  }
  for (VehicleId id : candidates) {
    const auto* subject = world.find(id);
    if (!subject || subject->platoon_id || partner_targeted(world, id)) continue;
    auto target = scan_for_platoon(*subject, world, p);
    if (!target) continue;
    if (!cfg.network.lane_open(target->target_lane)) continue;
    log_event(world, CoordinationEventType::Scan, id, target->platoon, target->kind);

    if (target->kind == JoinKind::InLaneRear) {
      std::optional<PlatoonId> pid = target->platoon;
      if (pid) {
        auto members = world.platoons.at(*pid).members;
        members.push_back(id);
        world.set_members(*pid, std::move(members));
      } else {
        pid = world.create_platoon({*target->partner, id});
      }
      log_event(world, CoordinationEventType::Commit, id, pid, JoinKind::InLaneRear);
      continue;
    }
    JoinPlan plan;
    plan.joiner = id;
    plan.platoon = target->platoon;
    plan.partner = target->partner;
    plan.kind = target->kind;
    plan.target_lane = target->target_lane;
    plan.state = JoinState::Scanning;
    plan.deadline = now + p.gap_request_timeout;
    world.plans.emplace(id, plan);
  }
}

}  // namespace cavmix
