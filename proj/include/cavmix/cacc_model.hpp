#pragma once

#include <optional>

#include "cavmix/core.hpp"

namespace cavmix {

enum class GapMode { Cacc, Acc };

/// Inputs of the enhanced IDM for one follower. `s` is the net gap to the leader.
struct EidmInputs {
  double v = 0.0;
  double v_lead = 0.0;
  double a_lead = 0.0;
  double s = 0.0;
  double v_des = 0.0;
  GapMode gap_mode = GapMode::Acc;
};

constexpr double time_gap(GapMode mode, const CaccParams& p) noexcept {
  return mode == GapMode::Cacc ? p.t_cacc : p.t_acc;
}

/// Desired dynamic gap s* = s0 + v T + max(0, v (v - v_lead) / (2 sqrt(a b))).
double desired_gap(double v, double v_lead, double T, const CaccParams& p) noexcept;

/// Plain IDM acceleration a [1 - (v/v_des)^delta - (s*/s)^2].
double idm_acceleration(const EidmInputs& in, const CaccParams& p) noexcept;

/// IDM with no leader: the interaction term vanishes.
double idm_free_acceleration(double v, double v_des, const CaccParams& p) noexcept;

/// Constant-acceleration heuristic with effective leader acceleration min(a_lead, a_self).
/// Falls back to the second branch when the first branch's denominator is below 1e-9.
double cah_acceleration(const EidmInputs& in, double a_self, const CaccParams& p) noexcept;

/// Enhanced IDM: IDM when it is not more cautious than CAH, otherwise the
/// coolness-weighted tanh blend. Clamped to [max_decel, a_max].
double eidm_acceleration(const EidmInputs& in, const CaccParams& p) noexcept;

/// Leader facts that decide the gap mode.
struct LeaderLink {
  VehicleClass cls = VehicleClass::HV;
  double net_gap = 0.0;
};

/// CACC iff the immediate leader is connected and within V2V range; ACC otherwise.
GapMode select_gap_mode(const std::optional<LeaderLink>& leader, const CaccParams& p) noexcept;

constexpr ControlMode to_control_mode(GapMode m) noexcept {
  return m == GapMode::Cacc ? ControlMode::Cacc : ControlMode::Acc;
}

}  // namespace cavmix
