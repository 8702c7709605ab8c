#include <gtest/gtest.h>

#include <random>

#include "cavmix/engine.hpp"
#include "cavmix/hv_model.hpp"

using namespace cavmix;

namespace {

LeaderObservation leader(double gap, double v_lead, double v, double a_lead = 0.0) {
  return LeaderObservation{gap, v_lead - v, a_lead, v_lead, VehicleClass::HV, 1};
}

constexpr double kDt = 0.1;

}  // namespace

TEST(W99Thresholds, StationaryLeader) {
  const HvParams p;
  const auto t = w99_thresholds(leader(10.0, 0.0, 15.0), 15.0, p);
  EXPECT_DOUBLE_EQ(t.sdxc, 1.5);
  EXPECT_DOUBLE_EQ(t.sdvc, 0.0);
}

TEST(W99Thresholds, EqualSpeeds) {
  const HvParams p;
  const auto t = w99_thresholds(leader(30.0, 20.0, 20.0), 20.0, p);
  EXPECT_DOUBLE_EQ(t.sdxc, 19.5);
  EXPECT_DOUBLE_EQ(t.sdxo, 19.5 + p.cc2);
  EXPECT_DOUBLE_EQ(t.sdxv, t.sdxo + p.cc3 * (0.0 - p.cc4));
}

TEST(W99Thresholds, ClosingPerception) {
  const HvParams p;
  const auto t = w99_thresholds(leader(100.0, 20.0, 20.0), 20.0, p);
  EXPECT_NEAR(t.sdv, 11.44, 1e-12);
  EXPECT_NEAR(t.sdvc, p.cc4 - 11.44, 1e-12);
  EXPECT_NEAR(t.sdvo, 11.44 + p.cc5, 1e-12);
}

TEST(W99Thresholds, OrderedWhileClosing) {
  const HvParams p;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> gap(0.1, 200.0), speed(0.0, 35.0);
  for (int i = 0; i < 20000; ++i) {
    const double v = speed(gen);
    const double vl = speed(gen);
    const auto obs = leader(gap(gen), vl, v);
    if (obs.dv > p.cc4) continue;
    const auto t = w99_thresholds(obs, v, p);
    EXPECT_LE(t.sdxc, t.sdxo);
    EXPECT_LE(t.sdxo, t.sdxv);
  }
}

TEST(ClassifyState, NoLeaderIsFree) {
  EXPECT_EQ(classify_state(std::nullopt, 20.0, std::nullopt), InteractionState::Free);
}

TEST(ClassifyState, InsideSafeDistanceIsBrakeAX) {
  const HvParams p;
  const auto base = w99_thresholds(leader(30.0, 20.0, 20.0), 20.0, p);
  const auto obs = leader(0.9 * base.sdxc, 20.0, 20.0);
  EXPECT_EQ(classify_state(obs, 20.0, w99_thresholds(obs, 20.0, p)), InteractionState::BrakeAX);
}

TEST(ClassifyState, SmallSpeedDifferenceInsideBandIsFollow) {
  const HvParams p;
  const auto base = w99_thresholds(leader(21.0, 20.0, 20.0), 20.0, p);
  const double gap = 0.5 * (base.sdxc + base.sdxo);
  const auto obs = leader(gap, 20.05, 20.0);
  const auto t = w99_thresholds(obs, 20.0, p);
  ASSERT_LT(std::abs(obs.dv), std::min(std::abs(t.sdvc), t.sdvo));
  EXPECT_EQ(classify_state(obs, 20.0, t), InteractionState::Follow);
}

TEST(ClassifyState, ApproachFromFarIsCloseUpThenBrakeBX) {
  const HvParams p;
  auto far = leader(40.0, 10.0, 20.0);
  EXPECT_EQ(classify_state(far, 20.0, w99_thresholds(far, 20.0, p)), InteractionState::CloseUp);
  const auto t = w99_thresholds(leader(12.0, 10.0, 20.0), 20.0, p);
  auto near = leader(0.5 * (t.sdxc + t.sdxo), 10.0, 20.0);
  EXPECT_EQ(classify_state(near, 20.0, w99_thresholds(near, 20.0, p)), InteractionState::BrakeBX);
}

TEST(ClassifyState, RegionPartitionGrid) {
  const HvParams p;
  for (double v : {0.0, 5.0, 15.0, 25.0, 33.0}) {
    for (double gap = 0.5; gap <= 200.0; gap += 0.5) {
      for (double dv = -15.0; dv <= 15.0; dv += 0.25) {
        const double vl = std::max(0.0, v + dv);
        const auto obs = leader(gap, vl, v);
        const auto t = w99_thresholds(obs, v, p);
        const bool ax = gap <= t.sdxc;
        const bool approach = gap > t.sdxc && gap < t.sdxv && obs.dv < t.sdvc;
        const bool follow = gap > t.sdxc && gap <= t.sdxo && obs.dv >= t.sdvc && obs.dv < t.sdvo;
        ASSERT_LE(int(ax) + int(approach) + int(follow), 1) << gap << " " << dv << " " << v;
        const auto s = classify_state(obs, v, t);
        EXPECT_EQ(s, classify_state(obs, v, t));
        if (ax) EXPECT_EQ(s, InteractionState::BrakeAX);
        if (approach) EXPECT_TRUE(s == InteractionState::CloseUp || s == InteractionState::BrakeBX);
        if (follow) EXPECT_EQ(s, InteractionState::Follow);
        if (!ax && !approach && !follow) EXPECT_EQ(s, InteractionState::Free);
      }
    }
  }
}

TEST(HvAcceleration, FreeAtDesiredSpeedIsZero) {
  const HvParams p;
  EXPECT_DOUBLE_EQ(hv_acceleration(std::nullopt, 25.0, 25.0, InteractionState::Free, p, kDt), 0.0);
}

TEST(HvAcceleration, StandstillStartUsesCc8) {
  const HvParams p;
  EXPECT_DOUBLE_EQ(hv_acceleration(std::nullopt, 0.0, 25.0, InteractionState::Free, p, kDt), 3.5);
}

TEST(HvAcceleration, FreeTaperReachesCc9) {
  const HvParams p;
  EXPECT_DOUBLE_EQ(hv_acceleration(std::nullopt, 22.2, 30.0, InteractionState::Free, p, kDt), 1.5);
  EXPECT_NEAR(hv_acceleration(std::nullopt, 24.95, 25.0, InteractionState::Free, p, kDt), 0.5, 1e-9);
}

TEST(HvAcceleration, BrakeAXStationaryLeaderClampsToMaxDecel) {
  const HvParams p;
  const auto obs = leader(1e-4, 0.0, 20.0);
  EXPECT_DOUBLE_EQ(hv_acceleration(obs, 20.0, 25.0, InteractionState::BrakeAX, p, kDt), -8.5);
}

TEST(HvAcceleration, BoundsProperty) {
  const HvParams p;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> gap(1e-3, 250.0), speed(0.0, 40.0), acc(-8.5, 3.5);
  for (int i = 0; i < 100000; ++i) {
    const double v = speed(gen);
    const auto obs = leader(gap(gen), speed(gen), v, acc(gen));
    for (auto s : kAllInteractionStates) {
      const double a = hv_acceleration(obs, v, speed(gen), s, p, kDt);
      ASSERT_GE(a, p.max_decel);
      ASSERT_LE(a, p.cc8);
    }
    const auto d = hv_control(obs, v, speed(gen), p, kDt);
    ASSERT_GE(d.accel, p.max_decel);
    ASSERT_LE(d.accel, p.cc8);
  }
}

TEST(HvDynamics, FollowerSettlesBehindConstantSpeedLeader) {
  const HvParams p;
  const double v_lead = 25.0;
  double x_lead = 200.0, x = 100.0, v = 20.0;  // front bumpers, 4.5 m vehicles
  for (int k = 0; k < 1200; ++k) {
    const auto obs = leader(x_lead - 4.5 - x, v_lead, v);
    const double a = hv_control(obs, v, 30.0, p, kDt).accel;
    const double v1 = std::max(0.0, v + a * kDt);
    x += 0.5 * (v + v1) * kDt;
    v = v1;
    x_lead += v_lead * kDt;
  }
  const auto obs = leader(x_lead - 4.5 - x, v_lead, v);
  const auto t = w99_thresholds(obs, v, p);
  EXPECT_GE(obs.net_gap, t.sdxc);
  EXPECT_LE(obs.net_gap, t.sdxo);
  EXPECT_LT(std::abs(obs.dv), 0.5);
}

TEST(HvDynamics, EmergencyBrakeOfLeaderCausesNoCollision) {
  auto cfg = desk_scale_config();
  cfg.demand_vph = 0.0;
  cfg.network.length = 20000.0;
  cfg.network.lane_count = 1;
  cfg.network.lane_policies = {LanePolicy::General};
  for (double extra : {0.05, 1.0, 5.0}) {
    Simulation sim(cfg, 1);
    const double sdxc = cfg.hv_params.cc0 + cfg.hv_params.cc1 * 30.0;
    sim.add_vehicle({1, VehicleClass::HV, 0, 1000.0, 30.0, 0.0, 4.5, 30.0, std::nullopt, ControlMode::Human});
    sim.add_vehicle({2, VehicleClass::HV, 0, 1000.0 - 4.5 - sdxc - extra, 30.0, 0.0, 4.5, 30.0, std::nullopt,
                     ControlMode::Human});
    sim.set_external_control(1, [](double) { return -8.5; });
    for (int k = 0; k < 300; ++k) ASSERT_NO_THROW(sim.step());
    EXPECT_EQ(sim.world().at(2).speed, 0.0);
    EXPECT_GT(World::net_gap(sim.world().at(1), sim.world().at(2)), 0.0);
  }
}

TEST(LaneChange, NoEligibleNeighbour) {
  const HvParams p;
  VehicleState s{5, VehicleClass::HV, 0, 500.0, 25.0, 0.0, 4.5, 30.0, std::nullopt, ControlMode::Human};
  LaneNeighborhood nb;
  nb.current = {0, true, leader(20.0, 15.0, 25.0), std::nullopt};
  EXPECT_FALSE(hv_lane_change_decision(s, nb, p, kDt));
  nb.left = LaneView{1, false, std::nullopt, std::nullopt};
  EXPECT_FALSE(hv_lane_change_decision(s, nb, p, kDt));
}

TEST(LaneChange, EmptyTargetLaneBeatsSlowLeader) {
  const HvParams p;
  VehicleState s{5, VehicleClass::HV, 0, 500.0, 25.0, 0.0, 4.5, 30.0, std::nullopt, ControlMode::Human};
  LaneNeighborhood nb;
  nb.current = {0, true, leader(20.0, 15.0, 25.0), std::nullopt};
  nb.left = LaneView{1, true, std::nullopt, std::nullopt};
  EXPECT_EQ(hv_lane_change_decision(s, nb, p, kDt), 1);
}

TEST(LaneChange, FastClosingFollowerVetoes) {
  const HvParams p;
  VehicleState s{5, VehicleClass::HV, 0, 500.0, 25.0, 0.0, 4.5, 30.0, std::nullopt, ControlMode::Human};
  LaneNeighborhood nb;
  nb.current = {0, true, leader(20.0, 15.0, 25.0), std::nullopt};
  FollowerObservation f{35.0, 35.0, VehicleClass::HV, 9};
  ASSERT_LT(follower_required_decel(f, 25.0, p), -3.0);
  nb.left = LaneView{1, true, std::nullopt, f};
  EXPECT_FALSE(hv_lane_change_decision(s, nb, p, kDt));
}

TEST(LaneChange, NecessaryChangeLeavesClosedLane) {
  const HvParams p;
  VehicleState s{5, VehicleClass::HV, 1, 500.0, 25.0, 0.0, 4.5, 25.0, std::nullopt, ControlMode::Human};
  LaneNeighborhood nb;
  nb.current = {1, false, std::nullopt, std::nullopt};
  nb.right = LaneView{0, true, leader(60.0, 25.0, 25.0), std::nullopt};
  EXPECT_EQ(hv_lane_change_decision(s, nb, p, kDt), 0);
}
