#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavmix/core.hpp"
#include "cavmix/hv_model.hpp"
#include "cavmix/trajectory.hpp"
#include "cavmix/world.hpp"

namespace cavmix {

struct RunSummary {
  long entered = 0;
  long exited = 0;
  long present = 0;
  long exited_post_warmup = 0;
  long queued = 0;
  double vmt_km = 0.0;
  double vht_h = 0.0;
  std::optional<double> q_kmh;
  double throughput_vph = 0.0;
  int halts = 0;
};

std::string to_json(const RunSummary& s);
RunSummary summary_from_json(const std::string& text);

/// Raised when a net gap closes to zero or below after integration.
class SimulationHalt : public std::runtime_error {
 public:
  SimulationHalt(double time, std::vector<VehicleId> ids, const std::string& dump);
  double time;
  std::vector<VehicleId> ids;
};

/// Control output of one vehicle for one step.
struct Control {
  double accel = 0.0;
  InteractionState state = InteractionState::Free;
  std::optional<int> lane_change;
};

/// Fixed-timestep simulator of one run. The constructor seeds everything from
/// (cfg, seed); nothing else feeds randomness.
class Simulation {
 public:
  Simulation(ScenarioConfig cfg, std::uint64_t seed);

  /// One full step: demand, decisions, lane changes and coordination,
  /// integration, gap check and exits, platoon upkeep, bookkeeping.
  void step();

  /// Draws this step's arrivals and inserts at most one queued vehicle per lane.
  void inject_demand();

  /// Places a vehicle directly (scripted scenarios). Counts as entered.
  void add_vehicle(VehicleState v);

  /// Overrides a vehicle's acceleration with a function of time.
  void set_external_control(VehicleId id, std::function<double(double)> accel_of_time);

  /// Current rows for every vehicle, as they would be recorded now.
  std::vector<TrajectoryRecord> snapshot_records() const;
  /// True when the instant reached by the last step is a recording instant.
  bool recording_due() const noexcept;

  /// Decision for one vehicle from the current state (no side effects).
  Control decide(const VehicleState& v, bool with_lane_change) const;

  const World& world() const noexcept { return world_; }
  World& world() noexcept { return world_; }
  const ScenarioConfig& config() const noexcept { return cfg_; }
  double time() const noexcept;
  long step_index() const noexcept { return k_; }
  long entered() const noexcept { return entered_; }
  long exited() const noexcept { return exited_; }
  long queued() const noexcept;
  std::optional<InteractionState> hv_state(VehicleId id) const;
  RunSummary summary() const;

 private:
  struct Pending {
    VehicleId id = 0;
    VehicleClass cls = VehicleClass::HV;
    double desired_speed = 0.0;
  };

  std::optional<LeaderObservation> observe(const VehicleState* lead, const VehicleState& v) const;
  double cav_accel(const VehicleState& v, const std::optional<LeaderObservation>& obs,
                   const CaccParams& p) const;
  double cav_control(const VehicleState& v) const;
  LaneNeighborhood neighborhood(const VehicleState& v) const;
  bool lane_eligible(int lane, VehicleClass cls) const noexcept;
  bool may_free_lane_change(const VehicleState& v) const;
  Pending draw_arrival();
  bool try_insert(int lane, const Pending& p);
  void check_gaps() const;

  ScenarioConfig cfg_;
  std::uint64_t seed_;
  World world_;
  std::mt19937_64 arrivals_;
  std::vector<int> entry_lanes_;
  std::vector<std::deque<Pending>> queues_;
  std::map<VehicleId, InteractionState> hv_states_;
  std::map<VehicleId, double> last_lane_change_;
  std::map<VehicleId, std::function<double(double)>> external_;
  long k_ = 0;
  long warmup_steps_ = 0;
  long next_arrival_ = 0;
  long entered_ = 0;
  long exited_ = 0;
  long exited_post_warmup_ = 0;
  double vmt_m_ = 0.0;
  double vht_s_ = 0.0;
};

struct RunResult {
  std::vector<TrajectoryRecord> records;
  std::vector<CoordinationEvent> events;
  RunSummary summary;
};

/// Runs duration/dt steps and collects records at every recording instant at or after warm-up.
/// Propagates SimulationHalt.
RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace cavmix
