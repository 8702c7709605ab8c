#include "cavmix/core.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace cavmix {

std::string_view to_string(VehicleClass c) noexcept {
  return c == VehicleClass::HV ? "HV" : "CAV";
}

std::string_view to_string(ControlMode m) noexcept {
  switch (m) {
    case ControlMode::Human: return "HUMAN";
    case ControlMode::Acc: return "ACC";
    case ControlMode::Cacc: return "CACC";
  }
  return "HUMAN";
}

std::string_view to_string(InteractionState s) noexcept {
  switch (s) {
    case InteractionState::Free: return "FREE";
    case InteractionState::CloseUp: return "CLOSE_UP";
    case InteractionState::Follow: return "FOLLOW";
    case InteractionState::BrakeBX: return "BRAKE_BX";
    case InteractionState::BrakeAX: return "BRAKE_AX";
    case InteractionState::Other: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(LanePolicy p) noexcept {
  switch (p) {
    case LanePolicy::General: return "GENERAL";
    case LanePolicy::CavPreferred: return "CAV_PREFERRED";
    case LanePolicy::Closed: return "CLOSED";
  }
  return "GENERAL";
}

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Base: return "BASE";
    case Strategy::AdHoc: return "AD_HOC";
    case Strategy::LocalCoord: return "LOCAL_COORD";
  }
  return "BASE";
}

std::string_view to_string(JoinKind k) noexcept {
  switch (k) {
    case JoinKind::Front: return "FRONT";
    case JoinKind::Mid: return "MID";
    case JoinKind::Rear: return "REAR";
    case JoinKind::InLaneRear: return "IN_LANE_REAR";
  }
  return "REAR";
}

std::optional<VehicleClass> parse_vehicle_class(std::string_view s) noexcept {
  if (s == "HV") return VehicleClass::HV;
  if (s == "CAV") return VehicleClass::CAV;
  return std::nullopt;
}

std::optional<InteractionState> parse_interaction_state(std::string_view s) noexcept {
  for (auto st : kAllInteractionStates) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::optional<LanePolicy> parse_lane_policy(std::string_view s) noexcept {
  for (auto p : {LanePolicy::General, LanePolicy::CavPreferred, LanePolicy::Closed}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::optional<Strategy> parse_strategy(std::string_view s) noexcept {
  for (auto st : {Strategy::Base, Strategy::AdHoc, Strategy::LocalCoord}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

long ScenarioConfig::record_stride() const noexcept {
  return std::lround(record_interval_s / dt_s);
}

long ScenarioConfig::step_count() const noexcept {
  return std::lround(duration_s / dt_s);
}

ScenarioConfig full_scale_config() {
  ScenarioConfig cfg;
  cfg.network.length = 8000.0;
  cfg.network.lane_count = 4;
  cfg.network.lane_policies.assign(4, LanePolicy::General);
  cfg.demand_vph = 7200.0;
  cfg.duration_s = 3900.0;
  cfg.warmup_s = 300.0;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.mpr_list = {0.1, 0.2, 0.3, 0.4};
  return cfg;
}

ScenarioConfig desk_scale_config() {
  ScenarioConfig cfg;
  cfg.mpr_list = {0.0, 0.1, 0.2, 0.3, 0.4};
  return cfg;
}

namespace {

class Violations {
 public:
  void require(bool ok, std::string msg) {
    if (!ok) out_.push_back(std::move(msg));
  }
  std::vector<std::string> take() { return std::move(out_); }

 private:
  std::vector<std::string> out_;
};

bool is_multiple(double value, double step) {
  const double ratio = value / step;
  return std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio);
}

}  // namespace

std::vector<std::string> validate_config(const ScenarioConfig& cfg) {
  Violations v;
  const auto& net = cfg.network;
  v.require(net.length > 0.0, "network.length must be > 0");
  v.require(net.lane_count >= 1, "network.lane_count must be >= 1");
  v.require(static_cast<int>(net.lane_policies.size()) == net.lane_count,
            "network.lane_policies must list one policy per lane");
  v.require(std::any_of(net.lane_policies.begin(), net.lane_policies.end(),
                        [](LanePolicy p) { return p == LanePolicy::General; }),
            "network.lane_policies must contain at least one GENERAL lane");
  v.require(net.speed_limit > 0.0, "network.speed_limit must be > 0");

  v.require(cfg.demand_vph >= 0.0, "demand_vph must be >= 0");
  v.require(cfg.demand_scale >= 0.0, "demand_scale must be >= 0");
  v.require(cfg.mpr >= 0.0 && cfg.mpr <= 1.0, "mpr must be within [0,1]");
  for (double m : cfg.mpr_list) {
    v.require(m >= 0.0 && m <= 1.0, fmt::format("mpr_list entry {} must be within [0,1]", m));
  }
  v.require(cfg.duration_s > 0.0, "duration_s must be > 0");
  v.require(cfg.warmup_s >= 0.0, "warmup_s must be >= 0");
  v.require(cfg.warmup_s < cfg.duration_s, "warmup_s must be < duration_s");
  v.require(cfg.dt_s > 0.0, "dt_s must be > 0");
  if (cfg.dt_s > 0.0) {
    v.require(cfg.record_interval_s > 0.0 && is_multiple(cfg.record_interval_s, cfg.dt_s),
              "record_interval_s must be an integer multiple of dt_s");
  }
  v.require(!cfg.seeds.empty(), "seeds must be non-empty");
  v.require(cfg.vehicle_length > 0.0, "vehicle_length must be > 0");

  const auto& c = cfg.cacc_params;
  v.require(c.t_cacc > 0.0 && c.t_cacc <= c.t_acc, "cacc_params: 0 < t_cacc <= t_acc required");
  v.require(c.s0 > 0.0, "cacc_params.s0 must be > 0");
  v.require(c.a_max > 0.0, "cacc_params.a_max must be > 0");
  v.require(c.b_des > 0.0, "cacc_params.b_des must be > 0");
  v.require(c.coolness >= 0.0 && c.coolness <= 1.0, "cacc_params.coolness must be within [0,1]");
  v.require(c.delta > 0.0, "cacc_params.delta must be > 0");
  v.require(c.v_des_min > 0.0 && c.v_des_min <= c.v_des_max,
            "cacc_params.v_des_range must be an increasing positive interval");
  v.require(c.phi_max >= 2, "cacc_params.phi_max must be >= 2");
  v.require(c.d_front > 0.0, "cacc_params.d_front must be > 0");
  v.require(c.d_rear > 0.0, "cacc_params.d_rear must be > 0");
  v.require(c.max_decel < 0.0, "cacc_params.max_decel must be < 0");
  v.require(c.comm_range > 0.0, "cacc_params.comm_range must be > 0");
  v.require(c.t_gap_make >= c.t_cacc, "cacc_params.t_gap_make must be >= t_cacc");
  v.require(c.gap_request_timeout > 0.0, "cacc_params.gap_request_timeout must be > 0");
  v.require(c.abort_cooldown >= 0.0, "cacc_params.abort_cooldown must be >= 0");

  const auto& h = cfg.hv_params;
  v.require(h.cc0 >= 0.0, "hv_params.cc0 must be >= 0");
  v.require(h.cc1 > 0.0, "hv_params.cc1 must be > 0");
  v.require(h.cc2 >= 0.0, "hv_params.cc2 must be >= 0");
  v.require(h.cc7 > 0.0, "hv_params.cc7 must be > 0");
  v.require(h.cc8 > 0.0, "hv_params.cc8 must be > 0");
  v.require(h.cc9 > 0.0, "hv_params.cc9 must be > 0");
  v.require(h.max_decel < 0.0, "hv_params.max_decel must be < 0");
  v.require(h.look_ahead > 0.0, "hv_params.look_ahead must be > 0");
  v.require(h.desired_speed_sigma >= 0.0, "hv_params.desired_speed_sigma must be >= 0");
  v.require(h.desired_speed_trunc >= 0.0, "hv_params.desired_speed_trunc must be >= 0");
  v.require(h.lc_safe_decel < 0.0, "hv_params.lc_safe_decel must be < 0");
  return v.take();
}

}  // namespace cavmix
