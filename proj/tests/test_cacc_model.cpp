#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cavmix/cacc_model.hpp"
#include "cavmix/engine.hpp"
#include "oracles/oracles.hpp"

using namespace cavmix;

namespace {

EidmInputs inputs(double v, double v_lead, double a_lead, double s, double v_des, GapMode m = GapMode::Acc) {
  return EidmInputs{v, v_lead, a_lead, s, v_des, m};
}

ScenarioConfig single_lane() {
  auto cfg = desk_scale_config();
  cfg.demand_vph = 0.0;
  cfg.strategy = Strategy::AdHoc;
  cfg.network.length = 50000.0;
  cfg.network.lane_count = 1;
  cfg.network.lane_policies = {LanePolicy::General};
  return cfg;
}

VehicleState cav(VehicleId id, double x, double v, double v_des) {
  return {id, VehicleClass::CAV, 0, x, v, 0.0, 4.5, v_des, std::nullopt, ControlMode::Acc};
}

}  // namespace

TEST(DesiredGap, Examples) {
  const CaccParams p;
  EXPECT_DOUBLE_EQ(desired_gap(20.0, 25.0, 0.9, p), 19.0);
  EXPECT_DOUBLE_EQ(desired_gap(0.0, 10.0, 0.6, p), 1.0);
  EXPECT_DOUBLE_EQ(desired_gap(20.0, 20.0, 0.6, p), 13.0);
  EXPECT_DOUBLE_EQ(desired_gap(25.0, 25.0, 0.6, p), 16.0);
  EXPECT_DOUBLE_EQ(desired_gap(25.0, 25.0, 0.9, p), 23.5);
  // closing: 1 + 12 + 20*5/4
  EXPECT_DOUBLE_EQ(desired_gap(20.0, 15.0, 0.6, p), 38.0);
}

TEST(Idm, Examples) {
  const CaccParams p;
  EXPECT_DOUBLE_EQ(idm_free_acceleration(0.0, 30.0, p), 2.0);
  EXPECT_DOUBLE_EQ(idm_free_acceleration(30.0, 30.0, p), 0.0);
  EXPECT_NEAR(idm_acceleration(inputs(25.0, 25.0, 0.0, 16.0, 27.78, GapMode::Cacc), p), -1.311780179967365, 1e-12);
}

TEST(Cah, FirstBranchAndFallback) {
  const CaccParams p;
  // Leader braking hard, follower slower: first branch v^2 a / (v_l^2 - 2 s a).
  EXPECT_NEAR(cah_acceleration(inputs(10.0, 12.0, -4.0, 20.0, 30.0), 0.0, p), 100.0 * -4.0 / (144.0 + 160.0), 1e-12);
  // Stationary leader, closing: fallback a - dv^2 / (2 s).
  EXPECT_NEAR(cah_acceleration(inputs(25.0, 0.0, 0.0, 30.0, 30.0), 0.0, p), -625.0 / 60.0, 1e-12);
  // Opening fast: first branch with the follower's own acceleration as a_eff.
  EXPECT_NEAR(cah_acceleration(inputs(20.0, 25.0, 1.0, 30.0, 30.0), 0.5, p), 400.0 * 0.5 / (625.0 - 30.0), 1e-12);
  // Opening slowly, no closing term: effective leader acceleration.
  EXPECT_DOUBLE_EQ(cah_acceleration(inputs(24.9, 25.0, 1.0, 30.0, 30.0), 0.5, p), 0.5);
}

TEST(Eidm, FrozenValues) {
  const CaccParams p;
  EXPECT_DOUBLE_EQ(eidm_acceleration(inputs(25.0, 0.0, 0.0, 30.0, 27.78), p), -8.5);
  EXPECT_NEAR(eidm_acceleration(inputs(25.0, 20.0, -1.0, 30.0, 27.78), p), -5.8868798626686925, 1e-12);
  EXPECT_NEAR(eidm_acceleration(inputs(22.0, 20.0, 0.0, 25.0, 27.78, GapMode::Cacc), p), -0.81879648726639354,
              1e-12);
}

TEST(Eidm, MatchesOracle) {
  const CaccParams p;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> speed(0.0, 35.0), acc(-8.5, 2.0), gap(0.5, 150.0), vdes(20.0, 35.0);
  for (int i = 0; i < 50000; ++i) {
    const double v = speed(gen), vl = speed(gen), al = acc(gen), s = gap(gen), vd = vdes(gen);
    const auto mode = i % 2 ? GapMode::Cacc : GapMode::Acc;
    const double expected = oracle::eidm(v, vl, al, s, vd, time_gap(mode, p));
    ASSERT_NEAR(eidm_acceleration(inputs(v, vl, al, s, vd, mode), p), expected, 1e-9)
        << v << " " << vl << " " << al << " " << s << " " << vd;
  }
}

TEST(Eidm, BoundedAndContinuous) {
  const CaccParams p;
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> speed(1.0, 35.0), acc(-8.0, 2.0), gap(1.0, 150.0);
  for (int i = 0; i < 100000; ++i) {
    const auto in = inputs(speed(gen), speed(gen), acc(gen), gap(gen), 30.0);
    const double a = eidm_acceleration(in, p);
    ASSERT_GE(a, p.max_decel);
    ASSERT_LE(a, p.a_max);
    auto ds = in;
    ds.s += 1e-6;
    auto dv = in;
    dv.v += 1e-6;
    auto dl = in;
    dl.v_lead += 1e-6;
    ASSERT_LT(std::abs(eidm_acceleration(ds, p) - a), 1e-3);
    ASSERT_LT(std::abs(eidm_acceleration(dv, p) - a), 1e-3);
    ASSERT_LT(std::abs(eidm_acceleration(dl, p) - a), 1e-3);
  }
}

TEST(Eidm, MonotoneInGapAndLeaderSpeed) {
  const CaccParams p;
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> speed(0.0, 35.0), acc(-8.0, 2.0), gap(0.5, 150.0), step(0.0, 5.0);
  for (int i = 0; i < 50000; ++i) {
    const auto in = inputs(speed(gen), speed(gen), acc(gen), gap(gen), 30.0);
    auto wider = in;
    wider.s += step(gen);
    auto faster = in;
    faster.v_lead += step(gen);
    const double a = eidm_acceleration(in, p);
    ASSERT_GE(eidm_acceleration(wider, p), a - 1e-12);
    ASSERT_GE(eidm_acceleration(faster, p), a - 1e-12);
  }
}

TEST(Eidm, ShorterTimeGapNeverBrakesHarder) {
  const CaccParams p;
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> speed(0.0, 35.0), acc(-8.0, 2.0), gap(0.5, 150.0);
  for (int i = 0; i < 20000; ++i) {
    const auto acc_in = inputs(speed(gen), speed(gen), acc(gen), gap(gen), 30.0, GapMode::Acc);
    auto cacc_in = acc_in;
    cacc_in.gap_mode = GapMode::Cacc;
    ASSERT_GE(eidm_acceleration(cacc_in, p), eidm_acceleration(acc_in, p) - 1e-12);
  }
}

TEST(SelectGapMode, Rules) {
  const CaccParams p;
  EXPECT_EQ(select_gap_mode(std::nullopt, p), GapMode::Acc);
  EXPECT_EQ(select_gap_mode(LeaderLink{VehicleClass::HV, 10.0}, p), GapMode::Acc);
  EXPECT_EQ(select_gap_mode(LeaderLink{VehicleClass::CAV, 10.0}, p), GapMode::Cacc);
  EXPECT_EQ(select_gap_mode(LeaderLink{VehicleClass::CAV, p.comm_range}, p), GapMode::Cacc);
  EXPECT_EQ(select_gap_mode(LeaderLink{VehicleClass::CAV, p.comm_range + 0.1}, p), GapMode::Acc);
  EXPECT_EQ(time_gap(GapMode::Cacc, p), 0.6);
  EXPECT_EQ(time_gap(GapMode::Acc, p), 0.9);
}

TEST(CaccString, EightVehiclesReachEquilibrium) {
  const auto cfg = single_lane();
  const auto& p = cfg.cacc_params;
  Simulation sim(cfg, 1);
  const double v = 25.0;
  for (int i = 0; i < 8; ++i) sim.add_vehicle(cav(i + 1, 5000.0 - 30.0 * i, v, i == 0 ? v : 30.0));
  sim.set_external_control(1, [](double) { return 0.0; });
  for (int k = 0; k < 1800; ++k) sim.step();
  // IDM equilibrium behind a constant-speed leader.
  const double s_eq = desired_gap(v, v, p.t_cacc, p) / std::sqrt(1.0 - std::pow(v / 30.0, p.delta));
  for (VehicleId id = 2; id <= 8; ++id) {
    const auto& f = sim.world().at(id);
    const auto& l = sim.world().at(id - 1);
    EXPECT_EQ(f.mode, ControlMode::Cacc);
    EXPECT_NEAR(f.speed, v, 0.05);
    EXPECT_NEAR(World::net_gap(l, f), s_eq, 0.1);
  }
}

TEST(CaccString, FiveVehiclePerturbationIsDamped) {
  const auto cfg = single_lane();
  const auto& p = cfg.cacc_params;
  Simulation sim(cfg, 1);
  const double v = 25.0;
  const double s_eq = desired_gap(v, v, p.t_cacc, p) / std::sqrt(1.0 - std::pow(v / 30.0, p.delta));
  for (int i = 0; i < 5; ++i) sim.add_vehicle(cav(i + 1, 5000.0 - (s_eq + 4.5) * i, v, i == 0 ? v : 30.0));
  sim.set_external_control(1, [](double t) { return t >= 5.0 && t < 7.0 ? -2.0 : 0.0; });
  std::vector<double> max_dev(5, 0.0), peak_decel(5, 0.0);
  for (int k = 0; k < 1200; ++k) {
    sim.step();
    for (VehicleId id = 1; id <= 5; ++id) {
      const auto& veh = sim.world().at(id);
      max_dev[id - 1] = std::max(max_dev[id - 1], std::abs(veh.speed - v));
      peak_decel[id - 1] = std::min(peak_decel[id - 1], veh.accel);
    }
  }
  EXPECT_NEAR(max_dev[0], 4.0, 1e-6);
  // Follower 4 (fifth vehicle) brakes no harder than 1.2x follower 1.
  EXPECT_GE(peak_decel[4], 1.2 * peak_decel[1]);
  for (std::size_t i = 1; i < max_dev.size(); ++i) EXPECT_LE(max_dev[i], max_dev[i - 1] + 1e-9) << i;
}
