#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cavmix/core.hpp"

namespace cavmix {

/// Ordered roster of CAVs driving as one platoon; members[0] is the leader.
struct Platoon {
  PlatoonId id = 0;
  std::vector<VehicleId> members;
};

enum class JoinState { Scanning, GapRequested, Changing, Complete, Aborted };

std::string_view to_string(JoinState s) noexcept;

/// A free agent's attempt to join a platoon (or pair up with another free CAV).
struct JoinPlan {
  VehicleId joiner = 0;
  std::optional<PlatoonId> platoon;   // target platoon, absent when pairing with a free CAV
  std::optional<VehicleId> partner;   // free CAV being paired with
  JoinKind kind = JoinKind::Rear;
  int target_lane = 0;
  std::optional<VehicleId> gap_maker;
  JoinState state = JoinState::Scanning;
  double deadline = 0.0;
};

enum class CoordinationEventType { Scan, GapRequest, Commit, Abort, Split, Dissolve };

std::string_view to_string(CoordinationEventType t) noexcept;

struct CoordinationEvent {
  double time = 0.0;
  CoordinationEventType type = CoordinationEventType::Scan;
  std::optional<VehicleId> joiner;
  std::optional<PlatoonId> platoon;
  std::optional<JoinKind> kind;
};

/// Vehicles, per-lane ordering, platoon roster and coordination bookkeeping.
/// Lane vectors hold ids front-to-back (decreasing position).
class World {
 public:
  explicit World(int lane_count = 1);

  double time = 0.0;
  std::map<PlatoonId, Platoon> platoons;
  std::map<VehicleId, JoinPlan> plans;
  std::map<VehicleId, double> cooldown_until;
  std::vector<CoordinationEvent> events;

  int lane_count() const noexcept { return static_cast<int>(lanes_.size()); }
  const std::map<VehicleId, VehicleState>& vehicles() const noexcept { return vehicles_; }
  const std::vector<VehicleId>& lane(int l) const { return lanes_.at(static_cast<std::size_t>(l)); }

  const VehicleState* find(VehicleId id) const;
  VehicleState* find(VehicleId id);
  const VehicleState& at(VehicleId id) const;
  VehicleState& at(VehicleId id);

  void add(VehicleState v);
  void remove(VehicleId id);
  /// Reassigns a lane, keeping both lane orderings valid.
  void move_to_lane(VehicleId id, int lane);
  /// Restores per-lane ordering after positions change.
  void resort();

  /// Immediate same-lane leader / follower of a vehicle.
  const VehicleState* leader_of(VehicleId id) const;
  const VehicleState* follower_of(VehicleId id) const;

  /// Nearest vehicle in `lane` whose front is ahead of `position`, and the
  /// nearest whose front is at or behind it (the lateral projection neighbors).
  const VehicleState* projected_leader(int lane, double position, VehicleId exclude) const;
  const VehicleState* projected_follower(int lane, double position, VehicleId exclude) const;

  /// Rear bumper of `leader` minus front bumper of `follower`.
  static double net_gap(const VehicleState& leader, const VehicleState& follower) noexcept {
    return leader.rear() - follower.position;
  }

  // Platoon roster helpers. Keep VehicleState::platoon_id in sync.
  PlatoonId create_platoon(std::vector<VehicleId> members);
  void set_members(PlatoonId pid, std::vector<VehicleId> members);
  void dissolve(PlatoonId pid);
  const Platoon* platoon_of(VehicleId id) const;

 private:
  void reindex_lane(int l);

  std::map<VehicleId, VehicleState> vehicles_;
  std::vector<std::vector<VehicleId>> lanes_;
  std::map<VehicleId, std::size_t> rank_;
  PlatoonId next_platoon_ = 1;
};

}  // namespace cavmix
