#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavmix/core.hpp"
#include "cavmix/engine.hpp"
#include "cavmix/trajectory.hpp"

namespace cavmix {

enum class Interaction { HvHv, HvCav };

std::string_view to_string(Interaction i) noexcept;

inline constexpr double kHardBrakeThreshold = -3.0;  // m/s^2, strict
inline constexpr double kTtcThreshold = 3.0;         // s, strict

struct HardBrakeEvent {
  double time = 0.0;
  VehicleId vehicle = 0;
  double accel = 0.0;
  Interaction interaction = Interaction::HvHv;
};

struct TtcSample {
  double time = 0.0;
  VehicleId vehicle = 0;
  double ttc = 0.0;
  Interaction interaction = Interaction::HvHv;
};

struct LaneChangeCount {
  long total = 0;
  double per_vehicle_mean = 0.0;
  long vehicles = 0;
};

struct NetworkPerformance {
  double vmt_km = 0.0;
  double vht_h = 0.0;
  std::optional<double> q_kmh;
  double throughput_vph = 0.0;
};

/// One event per HV instant with accel < -3 and a leader, tagged by leader class.
std::vector<HardBrakeEvent> detect_hard_braking(const std::vector<TrajectoryRecord>& stream);

/// Speed-based TTC of closing HVs against their recorded leader; kept when < 3 s.
/// Leader speeds come from the leader's row at the same instant.
std::vector<TtcSample> compute_ttc(const std::vector<TrajectoryRecord>& stream);

/// Lane-index changes between consecutive rows of each HV.
LaneChangeCount count_lane_changes(const std::vector<TrajectoryRecord>& stream);

/// Fraction of HV rows per interaction state. All zeros for a stream without HVs.
std::map<InteractionState, double> state_composition(const std::vector<TrajectoryRecord>& stream);

/// VMT and VHT summed per vehicle over its recorded span; throughput from the
/// run summary when one is given.
NetworkPerformance network_performance(const std::vector<TrajectoryRecord>& stream,
                                       const std::optional<RunSummary>& summary, const ScenarioConfig& cfg);

/// Mean length of CACC-connected strings (at least two vehicles) over all instants.
std::optional<double> mean_platoon_length(const std::vector<TrajectoryRecord>& stream);

class EmptySampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Right-continuous empirical CDF.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> samples);
  double operator()(double t) const noexcept;
  const std::vector<double>& sorted() const noexcept { return sorted_; }
  std::size_t size() const noexcept { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

Ecdf ecdf(std::vector<double> samples);

/// Asymptotic critical coefficient c(alpha) = sqrt(-ln(alpha / 2) / 2).
double ks_critical_value(double alpha);

struct KsResult {
  double d = 0.0;
  double threshold = 0.0;
  bool reject = false;
  std::size_t n = 0;
  std::size_t m = 0;
};

/// Two-sample Kolmogorov-Smirnov test. D is the largest ECDF difference over the merged support.
KsResult ks_two_sample(const std::vector<double>& x, const std::vector<double>& y, double alpha = 0.05);

struct MetricReport {
  NetworkPerformance performance;
  std::vector<HardBrakeEvent> hard_brakes;
  std::vector<TtcSample> ttc;
  LaneChangeCount lane_changes;
  std::map<InteractionState, double> composition;
  std::optional<double> mean_platoon_length;
  long hv_records = 0;
  long cav_records = 0;

  long hard_brakes_with(Interaction i) const;
  long ttc_with(Interaction i) const;
};

MetricReport analyze(const std::vector<TrajectoryRecord>& stream, const std::optional<RunSummary>& summary,
                     const ScenarioConfig& cfg);

std::string to_json(const MetricReport& r);
/// Reads the scalar part of a report back (event lists are left empty).
MetricReport report_from_json(const std::string& text);

/// metrics.json, hard_brakes.csv, ttc.csv and hard_brake_ecdf.csv into `dir`.
void write_report(const MetricReport& r, const std::filesystem::path& dir);

/// Hard-brake accelerations of one interaction class, read from a hard_brakes.csv.
std::vector<double> load_hard_brake_accels(const std::filesystem::path& csv, std::optional<Interaction> only);

}  // namespace cavmix
