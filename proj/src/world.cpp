#include "cavmix/world.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace cavmix {

std::string_view to_string(JoinState s) noexcept {
  switch (s) {
    case JoinState::Scanning: return "SCANNING";
    case JoinState::GapRequested: return "GAP_REQUESTED";
    case JoinState::Changing: return "CHANGING";
    case JoinState::Complete: return "COMPLETE";
    case JoinState::Aborted: return "ABORTED";
  }
  return "SCANNING";
}

std::string_view to_string(CoordinationEventType t) noexcept {
  switch (t) {
    case CoordinationEventType::Scan: return "SCAN";
    case CoordinationEventType::GapRequest: return "GAP_REQUEST";
    case CoordinationEventType::Commit: return "COMMIT";
    case CoordinationEventType::Abort: return "ABORT";
    case CoordinationEventType::Split: return "SPLIT";
    case CoordinationEventType::Dissolve: return "DISSOLVE";
  }
  return "SCAN";
}

World::World(int lane_count) : lanes_(static_cast<std::size_t>(std::max(lane_count, 1))) {}

const VehicleState* World::find(VehicleId id) const {
  auto it = vehicles_.find(id);
  return it == vehicles_.end() ? nullptr : &it->second;
}

VehicleState* World::find(VehicleId id) {
  auto it = vehicles_.find(id);
  return it == vehicles_.end() ? nullptr : &it->second;
}

const VehicleState& World::at(VehicleId id) const {
  if (auto* v = find(id)) return *v;
  throw std::out_of_range(fmt::format("unknown vehicle {}", id));
}

VehicleState& World::at(VehicleId id) {
  if (auto* v = find(id)) return *v;
  throw std::out_of_range(fmt::format("unknown vehicle {}", id));
}

void World::add(VehicleState v) {
  const int l = v.lane;
  if (l < 0 || l >= lane_count()) throw std::out_of_range(fmt::format("lane {} out of range", l));
  const VehicleId id = v.id;
  if (!vehicles_.emplace(id, std::move(v)).second) {
    throw std::invalid_argument(fmt::format("duplicate vehicle id {}", id));
  }
  lanes_[static_cast<std::size_t>(l)].push_back(id);
  reindex_lane(l);
}

void World::remove(VehicleId id) {
  auto it = vehicles_.find(id);
  if (it == vehicles_.end()) return;
  const int l = it->second.lane;
  if (auto pid = it->second.platoon_id) {
    auto pit = platoons.find(*pid);
    if (pit != platoons.end()) {
      auto& m = pit->second.members;
      m.erase(std::remove(m.begin(), m.end(), id), m.end());
    }
  }
  auto& ids = lanes_[static_cast<std::size_t>(l)];
  ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
  vehicles_.erase(it);
  rank_.erase(id);
  plans.erase(id);
  cooldown_until.erase(id);
  reindex_lane(l);
}

void World::move_to_lane(VehicleId id, int lane) {
  auto& v = at(id);
  if (lane < 0 || lane >= lane_count()) throw std::out_of_range(fmt::format("lane {} out of range", lane));
  const int old = v.lane;
  if (old == lane) return;
  auto& from = lanes_[static_cast<std::size_t>(old)];
  from.erase(std::remove(from.begin(), from.end(), id), from.end());
  v.lane = lane;
  lanes_[static_cast<std::size_t>(lane)].push_back(id);
  reindex_lane(old);
  reindex_lane(lane);
}

void World::resort() {
  for (int l = 0; l < lane_count(); ++l) reindex_lane(l);
}

void World::reindex_lane(int l) {
  auto& ids = lanes_[static_cast<std::size_t>(l)];
  std::sort(ids.begin(), ids.end(), [this](VehicleId a, VehicleId b) {
    const double pa = vehicles_.at(a).position;
    const double pb = vehicles_.at(b).position;
    return pa != pb ? pa > pb : a < b;
  });
  for (std::size_t i = 0; i < ids.size(); ++i) rank_[ids[i]] = i;
}

const VehicleState* World::leader_of(VehicleId id) const {
  const auto& v = at(id);
  const std::size_t r = rank_.at(id);
  if (r == 0) return nullptr;
  return &vehicles_.at(lanes_[static_cast<std::size_t>(v.lane)][r - 1]);
}

const VehicleState* World::follower_of(VehicleId id) const {
  const auto& v = at(id);
  const auto& ids = lanes_[static_cast<std::size_t>(v.lane)];
  const std::size_t r = rank_.at(id);
  if (r + 1 >= ids.size()) return nullptr;
  return &vehicles_.at(ids[r + 1]);
}

const VehicleState* World::projected_leader(int lane, double position, VehicleId exclude) const {
  const VehicleState* best = nullptr;
  for (VehicleId id : lanes_[static_cast<std::size_t>(lane)]) {
    if (id == exclude) continue;
    const auto& v = vehicles_.at(id);
    if (v.position > position) {
      best = &v;  // lanes are front-to-back; keep the last one ahead
    } else {
      break;
    }
  }
  return best;
}

const VehicleState* World::projected_follower(int lane, double position, VehicleId exclude) const {
  for (VehicleId id : lanes_[static_cast<std::size_t>(lane)]) {
    if (id == exclude) continue;
    const auto& v = vehicles_.at(id);
    if (v.position <= position) return &v;
  }
  return nullptr;
}

PlatoonId World::create_platoon(std::vector<VehicleId> members) {
  const PlatoonId pid = next_platoon_++;
  platoons.emplace(pid, Platoon{pid, {}});
  set_members(pid, std::move(members));
  return pid;
}

void World::set_members(PlatoonId pid, std::vector<VehicleId> members) {
  auto& p = platoons.at(pid);
  for (VehicleId id : p.members) {
    if (auto* v = find(id); v && v->platoon_id == pid) v->platoon_id.reset();
  }
  p.members = std::move(members);
  for (VehicleId id : p.members) at(id).platoon_id = pid;
}

void World::dissolve(PlatoonId pid) {
  auto it = platoons.find(pid);
  if (it == platoons.end()) return;
  for (VehicleId id : it->second.members) {
    if (auto* v = find(id); v && v->platoon_id == pid) v->platoon_id.reset();
  }
  platoons.erase(it);
}

const Platoon* World::platoon_of(VehicleId id) const {
  const auto* v = find(id);
  if (!v || !v->platoon_id) return nullptr;
  auto it = platoons.find(*v->platoon_id);
  return it == platoons.end() ? nullptr : &it->second;
}

}  // namespace cavmix
