#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cavmix/cacc_model.hpp"
#include "cavmix/coordination.hpp"
#include "cavmix/engine.hpp"

using namespace cavmix;

namespace {

VehicleState car(VehicleId id, VehicleClass cls, int lane, double x, double v = 25.0) {
  return {id, cls, lane, x, v, 0.0, 4.5, v,
          std::nullopt, cls == VehicleClass::CAV ? ControlMode::Acc : ControlMode::Human};
}

VehicleState cav(VehicleId id, int lane, double x, double v = 25.0) { return car(id, VehicleClass::CAV, lane, x, v); }
VehicleState hv(VehicleId id, int lane, double x, double v = 25.0) { return car(id, VehicleClass::HV, lane, x, v); }

// Two-member platoon {1, 2} in lane 1 at 1015 / 995.
World pair_world() {
  World w(2);
  w.add(cav(1, 1, 1015.0));
  w.add(cav(2, 1, 995.0));
  w.create_platoon({1, 2});
  return w;
}

ScenarioConfig two_lane_local() {
  auto cfg = desk_scale_config();
  cfg.demand_vph = 0.0;
  cfg.strategy = Strategy::LocalCoord;
  cfg.network.length = 50000.0;
  cfg.network.lane_count = 2;
  cfg.network.lane_policies = {LanePolicy::General, LanePolicy::General};
  return cfg;
}

bool has_event(const World& w, CoordinationEventType type, VehicleId joiner) {
  return std::any_of(w.events.begin(), w.events.end(),
                     [&](const CoordinationEvent& e) { return e.type == type && e.joiner == joiner; });
}

}  // namespace

TEST(Scan, SlotKindsFromProjection) {
  const CaccParams p;
  for (auto [x, kind] : {std::pair{1000.0, JoinKind::Mid}, {985.0, JoinKind::Rear}, {1030.0, JoinKind::Front}}) {
    auto w = pair_world();
    w.add(cav(3, 0, x));
    const auto t = scan_for_platoon(w.at(3), w, p);
    ASSERT_TRUE(t) << x;
    EXPECT_EQ(t->kind, kind) << x;
    EXPECT_EQ(t->platoon, w.at(1).platoon_id);
    EXPECT_EQ(t->target_lane, 1);
  }
}

TEST(Scan, NothingInRange) {
  const CaccParams p;
  auto w = pair_world();
  w.add(cav(3, 0, 960.0));
  EXPECT_FALSE(scan_for_platoon(w.at(3), w, p));
  w.add(hv(4, 1, 955.0));
  EXPECT_FALSE(scan_for_platoon(w.at(3), w, p));
}

TEST(Scan, FullPlatoonIsSkipped) {
  CaccParams p;
  p.phi_max = 2;
  auto w = pair_world();
  w.add(cav(3, 0, 1000.0));
  EXPECT_FALSE(scan_for_platoon(w.at(3), w, p));
}

TEST(Scan, HumanDriverAndMemberDoNotScan) {
  const CaccParams p;
  auto w = pair_world();
  w.add(hv(3, 0, 1000.0));
  EXPECT_FALSE(scan_for_platoon(w.at(3), w, p));
  EXPECT_FALSE(scan_for_platoon(w.at(1), w, p));
}

TEST(Scan, SameLaneTailIsInLaneRear) {
  const CaccParams p;
  auto w = pair_world();
  w.add(cav(3, 1, 980.0));
  const auto t = scan_for_platoon(w.at(3), w, p);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->kind, JoinKind::InLaneRear);
  EXPECT_EQ(t->target_lane, 1);
}

TEST(Scan, FreeCavPartner) {
  const CaccParams p;
  World w(2);
  w.add(cav(1, 1, 1010.0));
  w.add(cav(2, 0, 1000.0));
  const auto t = scan_for_platoon(w.at(2), w, p);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->partner, 1);
  EXPECT_FALSE(t->platoon);
  EXPECT_EQ(t->kind, JoinKind::Rear);
}

TEST(EvaluateGaps, Verdicts) {
  const CaccParams p;
  const HvParams h;
  {  // REAR with room behind the tail
    auto w = pair_world();
    w.add(cav(3, 0, 960.0));
    JoinPlan plan{3, w.at(1).platoon_id, std::nullopt, JoinKind::Rear, 1};
    EXPECT_EQ(evaluate_gaps(w.at(3), plan, w, {16.0, 16.0}), GapVerdict::GapsOk);
    EXPECT_EQ(evaluate_gaps(w.at(3), plan, w, {40.0, 16.0}), GapVerdict::Unsafe);
  }
  {  // MID with a tight rear gap asks for a gap
    auto w = pair_world();
    w.add(cav(3, 0, 1005.0));
    JoinPlan plan{3, w.at(1).platoon_id, std::nullopt, JoinKind::Mid, 1};
    const auto t = default_gap_thresholds(w.at(3), plan, w, p, h);
    EXPECT_DOUBLE_EQ(t.front_min, 16.0);
    EXPECT_DOUBLE_EQ(t.rear_min, 16.0);
    EXPECT_EQ(evaluate_gaps(w.at(3), plan, w, {1.0, 16.0}), GapVerdict::NeedGap);
  }
  {  // interposed HV breaks the slot
    auto w = pair_world();
    w.add(hv(4, 1, 975.0));
    w.add(cav(3, 0, 960.0));
    JoinPlan plan{3, w.at(1).platoon_id, std::nullopt, JoinKind::Rear, 1};
    EXPECT_EQ(evaluate_gaps(w.at(3), plan, w, {0.0, 0.0}), GapVerdict::Unsafe);
  }
  EXPECT_EQ(to_string(GapVerdict::NeedGap), "NEED_GAP");
}

TEST(DefaultGapThresholds, HumanFollowerUsesSafeDistance) {
  const CaccParams p;
  const HvParams h;
  World w(2);
  w.add(cav(1, 1, 1050.0));
  w.add(hv(2, 1, 960.0, 20.0));
  w.add(cav(3, 0, 1000.0));
  JoinPlan plan{3, std::nullopt, 1, JoinKind::Rear, 1};
  const auto t = default_gap_thresholds(w.at(3), plan, w, p, h);
  EXPECT_DOUBLE_EQ(t.front_min, 16.0);
  EXPECT_DOUBLE_EQ(t.rear_min, 1.5 + 0.9 * 20.0);
}

TEST(RequestGap, NominatesMemberBehindSlot) {
  const CaccParams p;
  auto w = pair_world();
  w.add(cav(3, 0, 1005.0));
  JoinPlan plan{3, w.at(1).platoon_id, std::nullopt, JoinKind::Mid, 1};
  const auto r = request_gap(plan, w, 100.0, p);
  EXPECT_EQ(r.state, JoinState::GapRequested);
  EXPECT_EQ(r.gap_maker, 2);
  EXPECT_DOUBLE_EQ(r.deadline, 115.0);
  w.plans.emplace(3, r);
  EXPECT_EQ(gap_request_for(w, 2), 3);
  EXPECT_FALSE(gap_request_for(w, 1));
}

TEST(Commit, MidInsertKeepsOrder) {
  World w(2);
  w.add(cav(1, 1, 1050.0));
  w.add(cav(2, 1, 990.0));
  const auto pid = w.create_platoon({1, 2});
  w.add(cav(3, 0, 1020.0));
  JoinPlan plan{3, pid, std::nullopt, JoinKind::Mid, 1, std::nullopt, JoinState::Changing};
  ASSERT_TRUE(commit_lane_change(plan, w, {16.0, 16.0}));
  EXPECT_EQ(w.platoons.at(pid).members, (std::vector<VehicleId>{1, 3, 2}));
  EXPECT_EQ(w.at(3).lane, 1);
  EXPECT_EQ(w.at(3).platoon_id, pid);
  EXPECT_EQ(plan.state, JoinState::Complete);
  ASSERT_EQ(w.events.size(), 1u);
  EXPECT_EQ(w.events[0].type, CoordinationEventType::Commit);
  EXPECT_EQ(w.events[0].kind, JoinKind::Mid);
}

TEST(Commit, FrontPrependsAndPartnerPairs) {
  {
    auto w = pair_world();
    w.add(cav(3, 0, 1045.0));
    JoinPlan plan{3, w.at(1).platoon_id, std::nullopt, JoinKind::Front, 1, std::nullopt, JoinState::Changing};
    ASSERT_TRUE(commit_lane_change(plan, w, {16.0, 16.0}));
    EXPECT_EQ(w.platoons.at(*plan.platoon).members, (std::vector<VehicleId>{3, 1, 2}));
  }
  {
    World w(2);
    w.add(cav(1, 1, 1050.0));
    w.add(cav(2, 0, 1020.0));
    JoinPlan plan{2, std::nullopt, 1, JoinKind::Rear, 1, std::nullopt, JoinState::Changing};
    ASSERT_TRUE(commit_lane_change(plan, w, {16.0, 16.0}));
    ASSERT_TRUE(plan.platoon);
    EXPECT_EQ(w.platoons.at(*plan.platoon).members, (std::vector<VehicleId>{1, 2}));
  }
}

TEST(Commit, RejectedWhenGapsShrankLeavesWorldUntouched) {
  auto w = pair_world();
  w.add(cav(3, 0, 1000.0));
  JoinPlan plan{3, w.at(1).platoon_id, std::nullopt, JoinKind::Mid, 1, std::nullopt, JoinState::Changing};
  EXPECT_FALSE(commit_lane_change(plan, w, {16.0, 16.0}));
  EXPECT_EQ(plan.state, JoinState::Scanning);
  EXPECT_EQ(w.at(3).lane, 0);
  EXPECT_EQ(w.platoons.at(*plan.platoon).members.size(), 2u);
  EXPECT_TRUE(w.events.empty());
}

TEST(Abort, ArmsCooldownAndLogs) {
  const CaccParams p;
  auto w = pair_world();
  w.time = 50.0;
  w.add(cav(3, 0, 1000.0));
  w.plans.emplace(3, JoinPlan{3, w.at(1).platoon_id, std::nullopt, JoinKind::Mid, 1});
  abort_plan(w, 3, p);
  EXPECT_FALSE(w.plans.count(3));
  EXPECT_DOUBLE_EQ(w.cooldown_until.at(3), 60.0);
  EXPECT_TRUE(has_event(w, CoordinationEventType::Abort, 3));
}

TEST(Maintain, InterposedVehicleSplitsAndSingletonsDissolve) {
  const CaccParams p;
  World w(2);
  w.add(cav(1, 1, 1100.0));
  w.add(cav(2, 1, 1080.0));
  w.add(cav(3, 1, 1060.0));
  const auto pid = w.create_platoon({1, 2, 3});
  w.add(hv(4, 1, 1070.0));
  maintain_platoons(w, p, 250.0);
  EXPECT_EQ(w.platoons.at(pid).members, (std::vector<VehicleId>{1, 2}));
  EXPECT_FALSE(w.at(3).platoon_id);
  EXPECT_EQ(w.at(2).mode, ControlMode::Cacc);
  EXPECT_EQ(w.at(3).mode, ControlMode::Acc);
  w.move_to_lane(2, 0);
  maintain_platoons(w, p, 250.0);
  EXPECT_TRUE(w.platoons.empty());
  EXPECT_FALSE(w.at(1).platoon_id);
  EXPECT_FALSE(w.at(2).platoon_id);
}

TEST(Maintain, LongGapSplits) {
  const CaccParams p;
  World w(1);
  w.add(cav(1, 0, 2000.0));
  w.add(cav(2, 0, 1980.0));
  w.add(cav(3, 0, 1700.0));
  w.add(cav(4, 0, 1680.0));
  w.create_platoon({1, 2, 3, 4});
  maintain_platoons(w, p, 250.0);
  ASSERT_EQ(w.platoons.size(), 2u);
  EXPECT_EQ(w.at(1).platoon_id, w.at(2).platoon_id);
  EXPECT_EQ(w.at(3).platoon_id, w.at(4).platoon_id);
  EXPECT_NE(w.at(1).platoon_id, w.at(3).platoon_id);
  EXPECT_EQ(w.at(3).mode, ControlMode::Acc);
}

TEST(AdHoc, NoRosterButCaccBehindCav) {
  const CaccParams p;
  World w(1);
  w.add(cav(1, 0, 1000.0));
  w.add(cav(2, 0, 970.0));
  w.add(hv(3, 0, 940.0));
  w.add(cav(4, 0, 910.0));
  w.plans.emplace(2, JoinPlan{});
  ad_hoc_step(w, p, 250.0);
  EXPECT_TRUE(w.plans.empty());
  EXPECT_TRUE(w.platoons.empty());
  EXPECT_EQ(w.at(1).mode, ControlMode::Acc);
  EXPECT_EQ(w.at(2).mode, ControlMode::Cacc);
  EXPECT_EQ(w.at(3).mode, ControlMode::Human);
  EXPECT_EQ(w.at(4).mode, ControlMode::Acc);
}

// Platoon {1, 2, 3} in lane 1 at its IDM equilibrium spacing behind a 25 m/s leader.
struct Corridor {
  Simulation sim{two_lane_local(), 1};
  PlatoonId pid = 0;
  double spacing = 0.0;

  explicit Corridor(int members = 3) {
    const auto& p = sim.config().cacc_params;
    spacing = desired_gap(25.0, 25.0, p.t_cacc, p) / std::sqrt(1.0 - std::pow(25.0 / 30.0, p.delta)) + 4.5;
    std::vector<VehicleId> ids;
    for (int i = 0; i < members; ++i) {
      auto v = cav(i + 1, 1, 1060.0 - spacing * i);
      v.desired_speed = i == 0 ? 25.0 : 30.0;
      sim.add_vehicle(v);
      ids.push_back(i + 1);
    }
    pid = sim.world().create_platoon(ids);
  }
};

TEST(Liveness, RearJoinCompletesWithinOneMinute) {
  Corridor c;
  auto j = cav(4, 0, 1060.0 - 2.0 * c.spacing - 12.0);
  j.desired_speed = 30.0;
  c.sim.add_vehicle(j);
  for (int k = 0; k < 600 && c.sim.world().at(4).platoon_id != c.pid; ++k) ASSERT_NO_THROW(c.sim.step());
  EXPECT_EQ(c.sim.world().at(4).platoon_id, c.pid);
  EXPECT_EQ(c.sim.world().at(4).lane, 1);
  EXPECT_EQ(c.sim.world().platoons.at(c.pid).members, (std::vector<VehicleId>{1, 2, 3, 4}));
  EXPECT_LE(c.sim.time(), 60.0);
}

TEST(Liveness, MidJoinThroughGapMaker) {
  Corridor c;
  auto j = cav(4, 0, 1060.0 - 1.5 * c.spacing);
  j.desired_speed = 30.0;
  c.sim.add_vehicle(j);
  for (int k = 0; k < 600 && c.sim.world().at(4).platoon_id != c.pid; ++k) ASSERT_NO_THROW(c.sim.step());
  ASSERT_EQ(c.sim.world().at(4).platoon_id, c.pid);
  EXPECT_TRUE(has_event(c.sim.world(), CoordinationEventType::GapRequest, 4));
  EXPECT_EQ(c.sim.world().platoons.at(c.pid).members, (std::vector<VehicleId>{1, 2, 4, 3}));
  EXPECT_LE(c.sim.time(), 60.0);
}

TEST(Abort, BlockedSlotTimesOutWithoutCollision) {
  Corridor c(2);
  auto h = hv(3, 1, 1060.0 - c.spacing - 4.5 - 26.0);
  c.sim.add_vehicle(h);
  auto j = cav(4, 0, h.position + 7.0);
  j.desired_speed = 30.0;
  c.sim.add_vehicle(j);
  for (int k = 0; k < 200; ++k) ASSERT_NO_THROW(c.sim.step());
  const auto& w = c.sim.world();
  EXPECT_TRUE(has_event(w, CoordinationEventType::Abort, 4));
  EXPECT_FALSE(has_event(w, CoordinationEventType::Commit, 4));
  EXPECT_FALSE(w.at(4).platoon_id);
  EXPECT_EQ(w.at(4).lane, 0);
  ASSERT_TRUE(w.cooldown_until.count(4));
  EXPECT_GT(w.cooldown_until.at(4), c.sim.time());
  EXPECT_FALSE(w.plans.count(4));
}
