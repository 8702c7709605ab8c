#include "cavmix/hv_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cavmix {

namespace {

// Speed at which the free-acceleration taper reaches cc9 (80 km/h).
constexpr double kTaperSpeed = 22.2;
// Following-regime spring on the gap error and damper on dv.
constexpr double kFollowGapGain = 0.05;
constexpr double kFollowSpeedGain = 0.5;

double safe_distance(double cc0, double cc1, double v, double leader_speed) noexcept {
  return leader_speed > 0.0 ? cc0 + cc1 * std::min(v, leader_speed) : cc0;
}

}  // namespace

W99Thresholds w99_thresholds(const LeaderObservation& obs, double v, const HvParams& p) noexcept {
  W99Thresholds t;
  const bool leader_moving = obs.leader_speed > 0.0;
  t.sdxc = safe_distance(p.cc0, p.cc1, v, obs.leader_speed);
  t.sdxo = t.sdxc + p.cc2;
  t.sdxv = t.sdxo + p.cc3 * (obs.dv - p.cc4);
  t.sdv = p.cc6 * obs.net_gap * obs.net_gap * 1e-4;
  t.sdvc = leader_moving ? p.cc4 - t.sdv : 0.0;
  t.sdvo = v > p.cc5 ? t.sdv + p.cc5 : t.sdv;
  return t;
}

InteractionState classify_state(const std::optional<LeaderObservation>& obs, double /*v*/,
                                const std::optional<W99Thresholds>& thr) noexcept {
  if (!obs || !thr) return InteractionState::Free;
  const double gap = obs->net_gap;
  const double dv = obs->dv;
  const auto& t = *thr;
  if (gap <= t.sdxc) return InteractionState::BrakeAX;
  if (gap < t.sdxv && dv < t.sdvc) {
    return gap > t.sdxo ? InteractionState::CloseUp : InteractionState::BrakeBX;
  }
  if (gap <= t.sdxo && dv >= t.sdvc && dv < t.sdvo) return InteractionState::Follow;
  return InteractionState::Free;
}

double hv_acceleration(const std::optional<LeaderObservation>& obs, double v, double v_des,
                       InteractionState state, const HvParams& p, double dt) noexcept {
  double a = 0.0;
  if (!obs || state == InteractionState::Free || state == InteractionState::Other) {
    if (v <= v_des) {
      const double taper = p.cc8 + (p.cc9 - p.cc8) * std::min(v, kTaperSpeed) / kTaperSpeed;
      a = std::min(taper, (v_des - v) / dt);
    } else {
      a = std::max((v_des - v) / dt, -p.cc7);
    }
  } else {
    const auto thr = w99_thresholds(*obs, v, p);
    const double gap = obs->net_gap;
    const double dv = obs->dv;
    switch (state) {
      case InteractionState::Follow: {
        const double mid = 0.5 * (thr.sdxc + thr.sdxo);
        a = std::clamp(kFollowGapGain * (gap - mid) + kFollowSpeedGain * dv, -p.cc7, p.cc7);
        break;
      }
      case InteractionState::CloseUp:
      case InteractionState::BrakeBX: {
        // Null the speed difference on arrival at sdxc; brake at least as hard as the leader.
        const double room = gap - thr.sdxc;
        const double needed = room > 0.0 ? -dv * dv / (2.0 * room) : p.max_decel;
        a = std::min(std::min(needed, obs->leader_accel), 0.0);
        break;
      }
      case InteractionState::BrakeAX: {
        const double room = gap > 2.0 * p.cc0 ? gap - p.cc0 : 0.5 * gap;
        const double kinematic = dv < 0.0 ? obs->leader_accel - dv * dv / (2.0 * std::max(room, 1e-6))
                                          : std::numeric_limits<double>::infinity();
        a = std::min({kinematic, obs->leader_accel - p.cc7, 0.0});
        break;
      }
      default:
        break;
    }
  }
  return std::clamp(a, p.max_decel, p.cc8);
}

HvDecision hv_control(const std::optional<LeaderObservation>& obs, double v, double v_des,
                      const HvParams& p, double dt) noexcept {
  std::optional<W99Thresholds> thr;
  if (obs) thr = w99_thresholds(*obs, v, p);
  HvDecision d;
  d.state = classify_state(obs, v, thr);
  d.accel = hv_acceleration(obs, v, v_des, d.state, p, dt);
  return d;
}

double follower_required_decel(const FollowerObservation& f, double subject_speed,
                               const HvParams& p) noexcept {
  const double safe = safe_distance(p.cc0, p.cc1, f.speed, subject_speed);
  const double margin = f.net_gap - safe;
  if (margin <= 0.0) return -std::numeric_limits<double>::infinity();
  const double closing = std::max(0.0, f.speed - subject_speed);
  return -closing * closing / (2.0 * margin);
}

bool lane_change_safe(const LaneView& target, double subject_speed, const HvParams& p) noexcept {
  if (target.leader && target.leader->net_gap <= p.cc0) return false;
  if (target.follower) {
    if (target.follower->net_gap <= p.cc0) return false;
    if (follower_required_decel(*target.follower, subject_speed, p) < p.lc_safe_decel) return false;
  }
  return true;
}

std::optional<int> hv_lane_change_decision(const VehicleState& subject, const LaneNeighborhood& nb,
                                           const HvParams& p, double dt) {
  if (!nb.current.eligible) {
    for (const auto* view : {&nb.right, &nb.left}) {
      if (*view && (*view)->eligible && lane_change_safe(**view, subject.speed, p)) return (*view)->lane;
    }
    return std::nullopt;
  }
  return free_lane_change_decision(subject, nb, p, [&](const std::optional<LeaderObservation>& leader) {
    return hv_control(leader, subject.speed, subject.desired_speed, p, dt).accel;
  });
}

}  // namespace cavmix
