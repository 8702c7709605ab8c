#pragma once

#include <optional>

#include "cavmix/core.hpp"
#include "cavmix/world.hpp"

namespace cavmix {

/// A clustering opportunity found by a free-agent CAV.
struct JoinTarget {
  std::optional<PlatoonId> platoon;
  std::optional<VehicleId> partner;  // free CAV to pair with
  JoinKind kind = JoinKind::Rear;
  int target_lane = 0;
};

/// Nearest eligible platoon (below phi_max) or free CAV within [-D_r, +D_f] of the
/// subject, on its own lane (as its immediate leader) or an adjacent lane.
/// A same-lane CAV leader takes precedence and yields IN_LANE_REAR.
std::optional<JoinTarget> scan_for_platoon(const VehicleState& subject, const World& world,
                                           const CaccParams& p);

/// Slot of the subject's lateral projection relative to a target.
struct Slot {
  JoinKind kind = JoinKind::Rear;
  std::optional<VehicleId> member_behind;  // for MID: the nearest member behind the slot
};

std::optional<Slot> locate_slot(const VehicleState& subject, const JoinPlan& plan, const World& world);

struct ProjectedGaps {
  const VehicleState* leader = nullptr;
  const VehicleState* follower = nullptr;
  double front = 0.0;  // +inf without a leader
  double rear = 0.0;   // +inf without a follower
};

ProjectedGaps projected_gaps(const VehicleState& subject, int lane, const World& world);

struct GapThresholds {
  double front_min = 0.0;
  double rear_min = 0.0;
};

/// Speed-dependent defaults: the joiner's own s* toward the projected leader and
/// the projected follower's s* (CAV) or W99 safe distance (HV) toward the joiner.
GapThresholds default_gap_thresholds(const VehicleState& subject, const JoinPlan& plan, const World& world,
                                     const CaccParams& cacc, const HvParams& hv);

enum class GapVerdict { GapsOk, NeedGap, Unsafe };

std::string_view to_string(GapVerdict v) noexcept;

GapVerdict evaluate_gaps(const VehicleState& subject, const JoinPlan& plan, const World& world,
                         const GapThresholds& thresholds);

/// Nominates the member right behind the slot as gap maker and arms the request timer.
JoinPlan request_gap(JoinPlan plan, const World& world, double now, const CaccParams& p);

/// Moves the joiner into the target lane and updates the roster. The gaps are
/// re-checked first; on failure the plan falls back to SCANNING and nothing changes.
bool commit_lane_change(JoinPlan& plan, World& world, const GapThresholds& thresholds);

/// Ends a plan: ABORTED state, cooldown armed, gap maker released, event logged.
void abort_plan(World& world, VehicleId joiner, const CaccParams& p);

/// Splits platoons at interposed vehicles, lane breaks or gaps beyond twice the
/// V2V range, dissolves singletons and refreshes every CAV's control mode.
void maintain_platoons(World& world, const CaccParams& p, double look_ahead);

/// Sets each vehicle's control mode from its current immediate leader.
void refresh_control_modes(World& world, const CaccParams& p, double look_ahead);

/// Ad hoc clustering: no plans, no roster; CACC engages behind whichever CAV happens to lead.
void ad_hoc_step(World& world, const CaccParams& p, double look_ahead);

/// One serialized local-coordination pass: advance active plans, then scan for new ones.
void local_coordination_step(World& world, const ScenarioConfig& cfg);

/// Vehicle that currently acts as gap maker, if `id` is one.
std::optional<VehicleId> gap_request_for(const World& world, VehicleId id);

}  // namespace cavmix
