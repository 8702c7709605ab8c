#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cavmix {

using VehicleId = std::int64_t;
using PlatoonId = std::int64_t;

inline constexpr double kKmhPerMs = 3.6;

constexpr double kmh_to_ms(double kmh) noexcept { return kmh / kKmhPerMs; }
constexpr double ms_to_kmh(double ms) noexcept { return ms * kKmhPerMs; }

enum class VehicleClass { HV, CAV };

/// Longitudinal controller a vehicle is running. HUMAN iff the vehicle is an HV.
enum class ControlMode { Human, Acc, Cacc };

enum class InteractionState { Free, CloseUp, Follow, BrakeBX, BrakeAX, Other };

enum class LanePolicy { General, CavPreferred, Closed };

enum class Strategy { Base, AdHoc, LocalCoord };

enum class JoinKind { Front, Mid, Rear, InLaneRear };

std::string_view to_string(VehicleClass c) noexcept;
std::string_view to_string(ControlMode m) noexcept;
std::string_view to_string(InteractionState s) noexcept;
std::string_view to_string(LanePolicy p) noexcept;
std::string_view to_string(Strategy s) noexcept;
std::string_view to_string(JoinKind k) noexcept;

std::optional<VehicleClass> parse_vehicle_class(std::string_view s) noexcept;
std::optional<InteractionState> parse_interaction_state(std::string_view s) noexcept;
std::optional<LanePolicy> parse_lane_policy(std::string_view s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view s) noexcept;

inline constexpr InteractionState kAllInteractionStates[] = {
    InteractionState::Free,    InteractionState::CloseUp, InteractionState::Follow,
    InteractionState::BrakeBX, InteractionState::BrakeAX, InteractionState::Other};

struct VehicleState {
  VehicleId id = 0;
  VehicleClass cls = VehicleClass::HV;
  int lane = 0;             // 0 = rightmost
  double position = 0.0;    // front bumper, m along the corridor
  double speed = 0.0;       // m/s
  double accel = 0.0;       // m/s^2
  double length = 4.5;      // m
  double desired_speed = 0.0;
  std::optional<PlatoonId> platoon_id;
  ControlMode mode = ControlMode::Human;

  double rear() const noexcept { return position - length; }
};

/// E-IDM controller parameters plus the coordination ranges that travel with them.
struct CaccParams {
  double t_cacc = 0.6;   // s, time gap behind a connected leader
  double t_acc = 0.9;    // s, degraded time gap
  double s0 = 1.0;       // m
  double a_max = 2.0;    // m/s^2
  double b_des = 2.0;    // m/s^2
  double coolness = 0.99;
  double delta = 4.0;
  double v_des_min = kmh_to_ms(96.0);
  double v_des_max = kmh_to_ms(105.0);
  int phi_max = 5;
  double d_front = 20.0;  // m
  double d_rear = 20.0;   // m
  double max_decel = -8.5;  // vehicle capability floor, m/s^2
  double comm_range = 120.0;         // m, V2V range for CACC engagement
  double t_gap_make = 1.4;           // s, temporary time gap of a gap maker
  double gap_request_timeout = 15.0; // s
  double abort_cooldown = 10.0;      // s
  bool adhoc_lane_change = true;     // ad hoc CAVs use the free lane-change model
};

/// Wiedemann-99 driver parameters (CC0..CC9) and the free lane-change knobs.
struct HvParams {
  double cc0 = 1.5;    // m standstill distance
  double cc1 = 0.9;    // s following headway
  double cc2 = 4.0;    // m longitudinal oscillation
  double cc3 = -8.0;   // s perception threshold onset
  double cc4 = -0.35;  // m/s
  double cc5 = 0.35;   // m/s
  double cc6 = 11.44;  // 1/(m s)
  double cc7 = 0.25;   // m/s^2
  double cc8 = 3.5;    // m/s^2
  double cc9 = 1.5;    // m/s^2
  double max_decel = -8.5;
  double look_ahead = 250.0;           // m
  double desired_speed_sigma = kmh_to_ms(5.0);
  double desired_speed_trunc = kmh_to_ms(10.0);
  double lc_gain_threshold = 0.2;      // m/s^2
  double lc_keep_right_bias = 0.1;     // m/s^2
  double lc_safe_decel = -3.0;         // m/s^2
};

struct RoadNetwork {
  double length = 3000.0;  // m
  int lane_count = 3;
  std::vector<LanePolicy> lane_policies{3, LanePolicy::General};
  double speed_limit = kmh_to_ms(88.5);

  bool lane_open(int lane) const noexcept {
    return lane >= 0 && lane < lane_count &&
           lane_policies[static_cast<std::size_t>(lane)] != LanePolicy::Closed;
  }
};

struct ScenarioConfig {
  RoadNetwork network;
  double demand_vph = 1800.0;
  double demand_scale = 1.3;
  double mpr = 0.0;
  std::vector<double> mpr_list;  // matrix sweep; empty means {mpr}
  Strategy strategy = Strategy::Base;
  double duration_s = 1200.0;
  double warmup_s = 120.0;
  double dt_s = 0.1;
  double record_interval_s = 0.5;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double vehicle_length = 4.5;
  HvParams hv_params;
  CaccParams cacc_params;

  /// Steps between two recording instants.
  long record_stride() const noexcept;
  /// Total integration steps of a run.
  long step_count() const noexcept;
};

/// Full-scale experiment: 8 km, 4 lanes, 3900 s with a 300 s warm-up, five seeds.
ScenarioConfig full_scale_config();
/// Desk-scale experiment: 3 km, 3 lanes, 1800 vph, 1200 s with a 120 s warm-up.
ScenarioConfig desk_scale_config();

/// Every broken invariant of `cfg`, each naming the field and the rule. Empty when valid.
std::vector<std::string> validate_config(const ScenarioConfig& cfg);

}  // namespace cavmix
