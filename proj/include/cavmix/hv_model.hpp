#pragma once

#include <optional>

#include "cavmix/core.hpp"

namespace cavmix {

/// What a follower perceives about its immediate leader.
/// Sign convention: dv = leader_speed - follower_speed, negative while closing.
struct LeaderObservation {
  double net_gap = 0.0;  // leader rear bumper minus follower front bumper, m
  double dv = 0.0;
  double leader_accel = 0.0;
  double leader_speed = 0.0;
  VehicleClass leader_class = VehicleClass::HV;
  VehicleId leader_id = 0;
};

/// Perception thresholds of the Wiedemann-99 regime map at one instant.
struct W99Thresholds {
  double sdxc = 0.0;  // safe following distance, m
  double sdxo = 0.0;  // maximum following distance, m
  double sdxv = 0.0;  // perception distance while closing, m
  double sdv = 0.0;   // closing perception, m/s
  double sdvc = 0.0;  // closing-action threshold, m/s
  double sdvo = 0.0;  // opening threshold, m/s
};

W99Thresholds w99_thresholds(const LeaderObservation& obs, double v, const HvParams& p) noexcept;

/// Regime of a driver given its leader. FREE when there is no leader in range.
InteractionState classify_state(const std::optional<LeaderObservation>& obs, double v,
                                const std::optional<W99Thresholds>& thr) noexcept;

/// Acceleration for the given regime; always within [max_decel, cc8].
/// `dt` bounds the free-driving response so the desired speed is not overshot.
double hv_acceleration(const std::optional<LeaderObservation>& obs, double v, double v_des,
                       InteractionState state, const HvParams& p, double dt) noexcept;

struct HvDecision {
  InteractionState state = InteractionState::Free;
  double accel = 0.0;
};

/// Thresholds, classification and acceleration in one call.
HvDecision hv_control(const std::optional<LeaderObservation>& obs, double v, double v_des,
                      const HvParams& p, double dt) noexcept;

/// Vehicle directly behind the subject's lateral projection onto a lane.
struct FollowerObservation {
  double net_gap = 0.0;  // subject rear bumper minus follower front bumper, m
  double speed = 0.0;
  VehicleClass cls = VehicleClass::HV;
  VehicleId id = 0;
};

struct LaneView {
  int lane = 0;
  bool eligible = true;
  std::optional<LeaderObservation> leader;
  std::optional<FollowerObservation> follower;
};

/// Current lane plus whichever adjacent lanes exist. Left is lane + 1.
struct LaneNeighborhood {
  LaneView current;
  std::optional<LaneView> right;
  std::optional<LaneView> left;
};

/// Deceleration a target-lane follower needs to settle at its safe distance
/// behind the subject. -infinity when the gap is already inside that distance.
double follower_required_decel(const FollowerObservation& f, double subject_speed,
                               const HvParams& p) noexcept;

/// Safety half of a lane change: both projected gaps above cc0 and the new
/// follower's required deceleration no harsher than lc_safe_decel.
bool lane_change_safe(const LaneView& target, double subject_speed, const HvParams& p) noexcept;

/// Incentive-plus-safety free lane change. `accel_with` maps a prospective
/// leader (or none) to the subject's anticipated acceleration.
template <class AccelFn>
std::optional<int> free_lane_change_decision(const VehicleState& subject, const LaneNeighborhood& nb,
                                             const HvParams& p, AccelFn&& accel_with) {
  const double a_current = accel_with(nb.current.leader);
  std::optional<int> best;
  double best_gain = 0.0;
  auto consider = [&](const std::optional<LaneView>& view, bool moving_left) {
    if (!view || !view->eligible) return;
    const double gain = accel_with(view->leader) - a_current;
    const double threshold =
        p.lc_gain_threshold + (moving_left ? p.lc_keep_right_bias : -p.lc_keep_right_bias);
    if (gain <= threshold) return;
    if (!lane_change_safe(*view, subject.speed, p)) return;
    if (!best || gain > best_gain) {
      best = view->lane;
      best_gain = gain;
    }
  };
  consider(nb.right, false);
  consider(nb.left, true);
  return best;
}

/// Free lane change for a human driver, anticipating accelerations with the W99 model.
/// A vehicle whose current lane is not eligible makes a necessary change to the first
/// safe eligible neighbor without any incentive test.
std::optional<int> hv_lane_change_decision(const VehicleState& subject, const LaneNeighborhood& nb,
                                           const HvParams& p, double dt);

}  // namespace cavmix
