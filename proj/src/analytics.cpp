#include "cavmix/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

namespace cavmix {

namespace {

std::optional<Interaction> interaction_of(const TrajectoryRecord& r) {
  if (r.cls != VehicleClass::HV || !r.leader_id || !r.leader_class) return std::nullopt;
  return *r.leader_class == VehicleClass::CAV ? Interaction::HvCav : Interaction::HvHv;
}

// Row indices ordered by (vehicle, time).
std::vector<std::size_t> by_vehicle(const std::vector<TrajectoryRecord>& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(s[a].id, s[a].time) < std::tie(s[b].id, s[b].time);
  });
  return idx;
}

}  // namespace

std::string_view to_string(Interaction i) noexcept {
  return i == Interaction::HvHv ? "HV_HV" : "HV_CAV";
}

std::vector<HardBrakeEvent> detect_hard_braking(const std::vector<TrajectoryRecord>& stream) {
  std::vector<HardBrakeEvent> out;
  for (std::size_t i : by_vehicle(stream)) {
    const auto& r = stream[i];
    if (!(r.accel < kHardBrakeThreshold)) continue;
    if (auto tag = interaction_of(r)) out.push_back({r.time, r.id, r.accel, *tag});
  }
  return out;
}

std::vector<TtcSample> compute_ttc(const std::vector<TrajectoryRecord>& stream) {
  std::vector<std::tuple<double, VehicleId, double>> speeds;
  speeds.reserve(stream.size());
  for (const auto& r : stream) speeds.emplace_back(r.time, r.id, r.speed);
  std::sort(speeds.begin(), speeds.end());

  std::vector<TtcSample> out;
  for (std::size_t i : by_vehicle(stream)) {
    const auto& r = stream[i];
    auto tag = interaction_of(r);
    if (!tag || !r.net_gap) continue;
    const auto key = std::make_tuple(r.time, *r.leader_id, -std::numeric_limits<double>::infinity());
    auto it = std::lower_bound(speeds.begin(), speeds.end(), key);
    if (it == speeds.end() || std::get<0>(*it) != r.time || std::get<1>(*it) != *r.leader_id) continue;
    const double closing = r.speed - std::get<2>(*it);
    if (closing <= 0.0) continue;
    const double ttc = *r.net_gap / closing;
    if (ttc < kTtcThreshold) out.push_back({r.time, r.id, ttc, *tag});
  }
  return out;
}

LaneChangeCount count_lane_changes(const std::vector<TrajectoryRecord>& stream) {
  LaneChangeCount c;
  std::optional<VehicleId> current;
  int last_lane = 0;
  for (std::size_t i : by_vehicle(stream)) {
    const auto& r = stream[i];
    if (r.cls != VehicleClass::HV) continue;
    if (current != r.id) {
      current = r.id;
      ++c.vehicles;
    } else if (r.lane != last_lane) {
      ++c.total;
    }
    last_lane = r.lane;
  }
  if (c.vehicles > 0) c.per_vehicle_mean = static_cast<double>(c.total) / static_cast<double>(c.vehicles);
  return c;
}

std::map<InteractionState, double> state_composition(const std::vector<TrajectoryRecord>& stream) {
  std::map<InteractionState, long> counts;
  long total = 0;
  for (const auto& r : stream) {
    if (r.cls != VehicleClass::HV) continue;
    ++counts[r.state.value_or(InteractionState::Other)];
    ++total;
  }
  std::map<InteractionState, double> out;
  for (auto s : kAllInteractionStates) {
    out[s] = total > 0 ? static_cast<double>(counts[s]) / static_cast<double>(total) : 0.0;
  }
  return out;
}

NetworkPerformance network_performance(const std::vector<TrajectoryRecord>& stream,
                                       const std::optional<RunSummary>& summary, const ScenarioConfig& cfg) {
  NetworkPerformance p;
  double vmt_m = 0.0;
  double vht_s = 0.0;
  double last_instant = -std::numeric_limits<double>::infinity();
  for (const auto& r : stream) last_instant = std::max(last_instant, r.time);

  long disappeared = 0;
  const auto idx = by_vehicle(stream);
  for (std::size_t a = 0; a < idx.size();) {
    std::size_t b = a;
    while (b + 1 < idx.size() && stream[idx[b + 1]].id == stream[idx[a]].id) ++b;
    const auto& first = stream[idx[a]];
    const auto& last = stream[idx[b]];
    vmt_m += last.position - first.position;
    vht_s += last.time - first.time;
    if (last.time < last_instant) ++disappeared;
    a = b + 1;
  }
  p.vmt_km = vmt_m / 1000.0;
  p.vht_h = vht_s / 3600.0;
  if (p.vht_h > 0.0) p.q_kmh = p.vmt_km / p.vht_h;
  if (summary) {
    p.throughput_vph = summary->throughput_vph;
  } else {
    const double window_h = (cfg.duration_s - cfg.warmup_s) / 3600.0;
    if (window_h > 0.0) p.throughput_vph = static_cast<double>(disappeared) / window_h;
  }
  return p;
}

std::optional<double> mean_platoon_length(const std::vector<TrajectoryRecord>& stream) {
  std::vector<std::size_t> idx(stream.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(stream[a].time, stream[a].id) < std::tie(stream[b].time, stream[b].id);
  });

  long strings = 0;
  long members = 0;
  for (std::size_t a = 0; a < idx.size();) {
    std::size_t b = a;
    while (b < idx.size() && stream[idx[b]].time == stream[idx[a]].time) ++b;
    std::unordered_map<VehicleId, VehicleId> follower_of;
    std::unordered_map<VehicleId, bool> attached;
    for (std::size_t i = a; i < b; ++i) attached[stream[idx[i]].id] = false;
    for (std::size_t i = a; i < b; ++i) {
      const auto& r = stream[idx[i]];
      if (r.mode == ControlMode::Cacc && r.leader_id && attached.count(*r.leader_id)) {
        follower_of[*r.leader_id] = r.id;
        attached[r.id] = true;
      }
    }
    for (const auto& [head, f] : follower_of) {
      if (attached[head]) continue;
      long len = 1;
      for (auto it = follower_of.find(head); it != follower_of.end(); it = follower_of.find(it->second)) ++len;
      ++strings;
      members += len;
    }
    a = b;
  }
  if (strings == 0) return std::nullopt;
  return static_cast<double>(members) / static_cast<double>(strings);
}

Ecdf::Ecdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw EmptySampleError("ECDF of an empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double t) const noexcept {
  const auto n = std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin();
  return static_cast<double>(n) / static_cast<double>(sorted_.size());
}

Ecdf ecdf(std::vector<double> samples) { return Ecdf(std::move(samples)); }

double ks_critical_value(double alpha) { return std::sqrt(-std::log(alpha / 2.0) / 2.0); }

KsResult ks_two_sample(const std::vector<double>& x, const std::vector<double>& y, double alpha) {
  if (x.empty() || y.empty()) throw EmptySampleError("K-S test needs two non-empty samples");
  std::vector<double> a = x;
  std::vector<double> b = y;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());

  KsResult r;
  r.n = a.size();
  r.m = b.size();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    double t;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      t = a[i];
    } else {
      t = b[j];
    }
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    r.d = std::max(r.d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  r.threshold = ks_critical_value(alpha) * std::sqrt((n + m) / (n * m));
  r.reject = r.d > r.threshold;
  return r;
}

long MetricReport::hard_brakes_with(Interaction i) const {
  return std::count_if(hard_brakes.begin(), hard_brakes.end(), [i](const auto& e) { return e.interaction == i; });
}

long MetricReport::ttc_with(Interaction i) const {
  return std::count_if(ttc.begin(), ttc.end(), [i](const auto& e) { return e.interaction == i; });
}

MetricReport analyze(const std::vector<TrajectoryRecord>& stream, const std::optional<RunSummary>& summary,
                     const ScenarioConfig& cfg) {
  MetricReport r;
  r.performance = network_performance(stream, summary, cfg);
  r.hard_brakes = detect_hard_braking(stream);
  r.ttc = compute_ttc(stream);
  r.lane_changes = count_lane_changes(stream);
  r.composition = state_composition(stream);
  r.mean_platoon_length = mean_platoon_length(stream);
  for (const auto& rec : stream) (rec.cls == VehicleClass::HV ? r.hv_records : r.cav_records)++;
  return r;
}

std::string to_json(const MetricReport& r) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["vmt_km"] = r.performance.vmt_km;
  j["vht_h"] = r.performance.vht_h;
  j["q_kmh"] = opt(r.performance.q_kmh);
  j["throughput_vph"] = r.performance.throughput_vph;
  j["hard_brake_events"] = r.hard_brakes.size();
  j["hard_brake_hv_hv"] = r.hard_brakes_with(Interaction::HvHv);
  j["hard_brake_hv_cav"] = r.hard_brakes_with(Interaction::HvCav);
  j["ttc_samples"] = r.ttc.size();
  j["ttc_hv_hv"] = r.ttc_with(Interaction::HvHv);
  j["ttc_hv_cav"] = r.ttc_with(Interaction::HvCav);
  j["lane_changes_total"] = r.lane_changes.total;
  j["lane_changes_per_hv"] = r.lane_changes.per_vehicle_mean;
  j["hvs_observed"] = r.lane_changes.vehicles;
  ordered_json comp;
  for (const auto& [s, f] : r.composition) comp[std::string(to_string(s))] = f;
  j["state_composition"] = comp;
  j["mean_platoon_length"] = opt(r.mean_platoon_length);
  j["hv_records"] = r.hv_records;
  j["cav_records"] = r.cav_records;
  return j.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricReport r;
  r.performance.vmt_km = j.at("vmt_km").get<double>();
  r.performance.vht_h = j.at("vht_h").get<double>();
  if (!j.at("q_kmh").is_null()) r.performance.q_kmh = j.at("q_kmh").get<double>();
  r.performance.throughput_vph = j.at("throughput_vph").get<double>();
  r.lane_changes.total = j.at("lane_changes_total").get<long>();
  r.lane_changes.per_vehicle_mean = j.at("lane_changes_per_hv").get<double>();
  r.lane_changes.vehicles = j.at("hvs_observed").get<long>();
  for (auto s : kAllInteractionStates) {
    r.composition[s] = j.at("state_composition").at(std::string(to_string(s))).get<double>();
  }
  if (!j.at("mean_platoon_length").is_null()) r.mean_platoon_length = j.at("mean_platoon_length").get<double>();
  r.hv_records = j.at("hv_records").get<long>();
  r.cav_records = j.at("cav_records").get<long>();
  return r;
}

void write_report(const MetricReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "metrics.json") << to_json(r);

  std::ofstream hb(dir / "hard_brakes.csv");
  hb << "time,veh_id,accel_ms2,interaction\n";
  for (const auto& e : r.hard_brakes) hb << fmt::format("{},{},{},{}\n", e.time, e.vehicle, e.accel, to_string(e.interaction));

  std::ofstream tt(dir / "ttc.csv");
  tt << "time,veh_id,ttc_s,interaction\n";
  for (const auto& e : r.ttc) tt << fmt::format("{},{},{},{}\n", e.time, e.vehicle, e.ttc, to_string(e.interaction));

  std::vector<double> hh;
  std::vector<double> hc;
  for (const auto& e : r.hard_brakes) (e.interaction == Interaction::HvHv ? hh : hc).push_back(e.accel);
  std::ofstream ec(dir / "hard_brake_ecdf.csv");
  ec << "accel_ms2,ecdf_hv_hv,ecdf_hv_cav\n";
  std::vector<double> support = hh;
  support.insert(support.end(), hc.begin(), hc.end());
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  std::optional<Ecdf> fh;
  std::optional<Ecdf> fc;
  if (!hh.empty()) fh.emplace(hh);
  if (!hc.empty()) fc.emplace(hc);
  for (double t : support) {
    ec << fmt::format("{},{},{}\n", t, fh ? fmt::format("{}", (*fh)(t)) : std::string{},
                      fc ? fmt::format("{}", (*fc)(t)) : std::string{});
  }
}

std::vector<double> load_hard_brake_accels(const std::filesystem::path& csv, std::optional<Interaction> only) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", csv.string()));
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    if (c3 == std::string::npos) throw std::runtime_error(fmt::format("malformed row in {}", csv.string()));
    const std::string tag = line.substr(c3 + 1);
    if (only && tag != to_string(*only)) continue;
    out.push_back(std::stod(line.substr(c2 + 1, c3 - c2 - 1)));
  }
  return out;
}

}  // namespace cavmix
