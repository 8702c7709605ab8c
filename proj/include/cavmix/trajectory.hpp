#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavmix/core.hpp"
#include "cavmix/world.hpp"

namespace cavmix {

/// One sampled row of a vehicle's trajectory.
struct TrajectoryRecord {
  double time = 0.0;
  VehicleId id = 0;
  VehicleClass cls = VehicleClass::HV;
  int lane = 0;
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  std::optional<VehicleId> leader_id;
  std::optional<VehicleClass> leader_class;
  std::optional<double> net_gap;
  std::optional<InteractionState> state;  // HV rows only
  ControlMode mode = ControlMode::Human;
  std::optional<PlatoonId> platoon_id;

  bool operator==(const TrajectoryRecord&) const = default;
};

class TrajectoryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kTrajectoryHeader =
    "time,veh_id,class,lane,pos_m,speed_ms,accel_ms2,leader_id,leader_class,net_gap_m,state,platoon_id";

// The `state` column carries the interaction state for HV rows and the
// control mode (ACC/CACC) for CAV rows. Doubles use the shortest round-trip form.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records);
std::string trajectory_csv(const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in);
std::vector<TrajectoryRecord> load_trajectory_csv(const std::filesystem::path& path);

inline constexpr const char* kEventHeader = "time,event,joiner,platoon,join_kind";

void write_event_csv(std::ostream& out, const std::vector<CoordinationEvent>& events);

}  // namespace cavmix
