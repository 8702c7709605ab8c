#include "cavmix/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "cavmix/cacc_model.hpp"
#include "cavmix/coordination.hpp"

namespace cavmix {

namespace {

// Minimum time between two discretionary lane changes of one vehicle.
constexpr double kLaneChangeDwell = 3.0;

std::vector<std::uint32_t> seed_words(std::uint64_t a, std::uint64_t b, std::uint32_t stream) {
  return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
          static_cast<std::uint32_t>(b >> 32), stream};
}

std::mt19937_64 make_rng(std::uint64_t a, std::uint64_t b, std::uint32_t stream) {
  const auto words = seed_words(a, b, stream);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

std::string to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["entered"] = s.entered;
  j["exited"] = s.exited;
  j["present"] = s.present;
  j["exited_post_warmup"] = s.exited_post_warmup;
  j["queued"] = s.queued;
  j["vmt_km"] = s.vmt_km;
  j["vht_h"] = s.vht_h;
  j["q_kmh"] = s.q_kmh ? nlohmann::ordered_json(*s.q_kmh) : nlohmann::ordered_json(nullptr);
  j["throughput_vph"] = s.throughput_vph;
  j["halts"] = s.halts;
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunSummary s;
  s.entered = j.at("entered").get<long>();
  s.exited = j.at("exited").get<long>();
  s.present = j.value("present", 0L);
  s.exited_post_warmup = j.value("exited_post_warmup", 0L);
  s.queued = j.value("queued", 0L);
  s.vmt_km = j.at("vmt_km").get<double>();
  s.vht_h = j.at("vht_h").get<double>();
  if (!j.at("q_kmh").is_null()) s.q_kmh = j.at("q_kmh").get<double>();
  s.throughput_vph = j.at("throughput_vph").get<double>();
  s.halts = j.at("halts").get<int>();
  return s;
}

SimulationHalt::SimulationHalt(double t, std::vector<VehicleId> offenders, const std::string& dump)
    : std::runtime_error(dump), time(t), ids(std::move(offenders)) {}

Simulation::Simulation(ScenarioConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      seed_(seed),
      world_(cfg_.network.lane_count),
      arrivals_(make_rng(seed, 0, 11)) {
  for (int l = 0; l < cfg_.network.lane_count; ++l) {
    if (cfg_.network.lane_policies[static_cast<std::size_t>(l)] == LanePolicy::General) entry_lanes_.push_back(l);
  }
  queues_.resize(entry_lanes_.size());
  warmup_steps_ = std::lround(cfg_.warmup_s / cfg_.dt_s);
}

double Simulation::time() const noexcept {
  return std::round(static_cast<double>(k_) * cfg_.dt_s * 1e6) / 1e6;
}

long Simulation::queued() const noexcept {
  long n = 0;
  for (const auto& q : queues_) n += static_cast<long>(q.size());
  return n;
}

std::optional<InteractionState> Simulation::hv_state(VehicleId id) const {
  auto it = hv_states_.find(id);
  if (it == hv_states_.end()) return std::nullopt;
  return it->second;
}

bool Simulation::lane_eligible(int lane, VehicleClass cls) const noexcept {
  if (!cfg_.network.lane_open(lane)) return false;
  const auto policy = cfg_.network.lane_policies[static_cast<std::size_t>(lane)];
  return policy == LanePolicy::General || cls == VehicleClass::CAV;
}

std::optional<LeaderObservation> Simulation::observe(const VehicleState* lead, const VehicleState& v) const {
  if (!lead) return std::nullopt;
  const double gap = lead->rear() - v.position;
  if (gap > cfg_.hv_params.look_ahead) return std::nullopt;
  return LeaderObservation{gap, lead->speed - v.speed, lead->accel, lead->speed, lead->cls, lead->id};
}

double Simulation::cav_accel(const VehicleState& v, const std::optional<LeaderObservation>& obs,
                             const CaccParams& p) const {
  if (!obs) return std::clamp(idm_free_acceleration(v.speed, v.desired_speed, p), p.max_decel, p.a_max);
  if (obs->net_gap <= 0.0) return p.max_decel;
  const auto mode = select_gap_mode(LeaderLink{obs->leader_class, obs->net_gap}, p);
  const EidmInputs in{v.speed, obs->leader_speed, obs->leader_accel, obs->net_gap, v.desired_speed, mode};
  return eidm_acceleration(in, p);
}

double Simulation::cav_control(const VehicleState& v) const {
  const auto& p = cfg_.cacc_params;
  const auto obs = observe(world_.leader_of(v.id), v);
  double a = cav_accel(v, obs, p);
  if (cfg_.strategy != Strategy::LocalCoord) return a;

  if (gap_request_for(world_, v.id)) {
    CaccParams wide = p;
    wide.t_cacc = p.t_gap_make;
    wide.t_acc = p.t_gap_make;
    a = std::min(a, std::max(cav_accel(v, obs, wide), -p.b_des));
  }
  if (auto it = world_.plans.find(v.id); it != world_.plans.end()) {
    // Line up behind the projected slot leader, never braking harder than the comfort bound.
    const auto* slot_leader = world_.projected_leader(it->second.target_lane, v.position, v.id);
    if (auto slot_obs = observe(slot_leader, v)) {
      const double align = slot_obs->net_gap <= 0.0 ? -p.b_des : cav_accel(v, slot_obs, p);
      a = std::min(a, std::max(align, -p.b_des));
    }
  }
  return a;
}

LaneNeighborhood Simulation::neighborhood(const VehicleState& v) const {
  auto view_of = [&](int lane) {
    LaneView view;
    view.lane = lane;
    view.eligible = lane_eligible(lane, v.cls);
    const VehicleState* lead = nullptr;
    const VehicleState* follow = nullptr;
    if (lane == v.lane) {
      lead = world_.leader_of(v.id);
      follow = world_.follower_of(v.id);
    } else {
      lead = world_.projected_leader(lane, v.position, v.id);
      follow = world_.projected_follower(lane, v.position, v.id);
    }
    view.leader = observe(lead, v);
    if (follow) view.follower = FollowerObservation{v.rear() - follow->position, follow->speed, follow->cls, follow->id};
    return view;
  };
  LaneNeighborhood nb;
  nb.current = view_of(v.lane);
  if (v.lane > 0) nb.right = view_of(v.lane - 1);
  if (v.lane + 1 < world_.lane_count()) nb.left = view_of(v.lane + 1);
  return nb;
}

bool Simulation::may_free_lane_change(const VehicleState& v) const {
  if (external_.count(v.id)) return false;
  if (auto it = last_lane_change_.find(v.id); it != last_lane_change_.end() && time() - it->second < kLaneChangeDwell) {
    return false;
  }
  if (v.cls == VehicleClass::HV) return true;
  if (!cfg_.cacc_params.adhoc_lane_change) return false;
  if (cfg_.strategy != Strategy::LocalCoord) return true;
  if (world_.plans.count(v.id) || gap_request_for(world_, v.id)) return false;
  if (const auto* pl = world_.platoon_of(v.id)) return pl->members.front() == v.id;
  return true;
}

Control Simulation::decide(const VehicleState& v, bool with_lane_change) const {
  Control c;
  if (auto it = external_.find(v.id); it != external_.end()) {
    c.accel = it->second(time());
    if (v.cls == VehicleClass::HV) {
      c.state = hv_control(observe(world_.leader_of(v.id), v), v.speed, v.desired_speed, cfg_.hv_params, cfg_.dt_s).state;
    }
    return c;
  }
  const auto& hv = cfg_.hv_params;
  if (v.cls == VehicleClass::HV) {
    const auto d = hv_control(observe(world_.leader_of(v.id), v), v.speed, v.desired_speed, hv, cfg_.dt_s);
    c.accel = d.accel;
    c.state = d.state;
    if (with_lane_change && may_free_lane_change(v)) {
      c.lane_change = hv_lane_change_decision(v, neighborhood(v), hv, cfg_.dt_s);
    }
    return c;
  }
  c.accel = cav_control(v);
  if (with_lane_change && may_free_lane_change(v)) {
    const auto nb = neighborhood(v);
    if (!nb.current.eligible) {
      for (const auto* view : {&nb.right, &nb.left}) {
        if (*view && (*view)->eligible && lane_change_safe(**view, v.speed, hv)) {
          c.lane_change = (*view)->lane;
          break;
        }
      }
    } else {
      c.lane_change = free_lane_change_decision(v, nb, hv, [&](const std::optional<LeaderObservation>& leader) {
        return cav_accel(v, leader, cfg_.cacc_params);
      });
    }
  }
  return c;
}

Simulation::Pending Simulation::draw_arrival() {
  Pending p;
  p.id = ++next_arrival_;
  // Per-arrival generator with a fixed draw order, so one seed gives the same
  // arrivals and the same uniforms under every strategy and penetration rate.
  auto gen = make_rng(seed_, static_cast<std::uint64_t>(p.id), 7);
  const double u_class = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
  const double cav_speed =
      std::uniform_real_distribution<double>(cfg_.cacc_params.v_des_min, cfg_.cacc_params.v_des_max)(gen);
  const auto& hv = cfg_.hv_params;
  const double limit = cfg_.network.speed_limit;
  std::normal_distribution<double> normal(limit, hv.desired_speed_sigma);
  double hv_speed = limit;
  for (int tries = 0; tries < 1000; ++tries) {
    const double s = normal(gen);
    if (std::abs(s - limit) <= hv.desired_speed_trunc && s > 0.0) {
      hv_speed = s;
      break;
    }
  }
  p.cls = u_class < cfg_.mpr ? VehicleClass::CAV : VehicleClass::HV;
  p.desired_speed = p.cls == VehicleClass::CAV ? cav_speed : hv_speed;
  return p;
}

bool Simulation::try_insert(int lane, const Pending& p) {
  const auto& cacc = cfg_.cacc_params;
  const auto& hv = cfg_.hv_params;
  VehicleState v;
  v.id = p.id;
  v.cls = p.cls;
  v.lane = lane;
  v.length = cfg_.vehicle_length;
  v.position = cfg_.vehicle_length;
  v.desired_speed = p.desired_speed;
  v.mode = p.cls == VehicleClass::HV ? ControlMode::Human : ControlMode::Acc;
  v.speed = std::min(cfg_.network.speed_limit, p.desired_speed);

  const auto& ids = world_.lane(lane);
  if (!ids.empty()) {
    const auto& lead = world_.at(ids.back());
    v.speed = std::min(v.speed, lead.speed);
    const double gap = lead.rear() - v.position;
    double need = 0.0;
    if (p.cls == VehicleClass::CAV) {
      const double T = lead.cls == VehicleClass::CAV ? cacc.t_cacc : cacc.t_acc;
      need = desired_gap(v.speed, lead.speed, T, cacc);
    } else {
      need = std::max(desired_gap(v.speed, lead.speed, cacc.t_acc, cacc),
                      hv.cc0 + hv.cc1 * std::min(v.speed, lead.speed));
    }
    if (gap <= 0.0 || gap < need) return false;
  }
  world_.add(v);
  ++entered_;
  return true;
}

void Simulation::inject_demand() {
  if (entry_lanes_.empty()) return;
  const double rate = cfg_.demand_vph * cfg_.demand_scale / 3600.0;
  if (rate > 0.0) {
    const double mean = rate * cfg_.dt_s / static_cast<double>(entry_lanes_.size());
    for (std::size_t i = 0; i < entry_lanes_.size(); ++i) {
      const int n = std::poisson_distribution<int>(mean)(arrivals_);
      for (int a = 0; a < n; ++a) queues_[i].push_back(draw_arrival());
    }
  }
  for (std::size_t i = 0; i < entry_lanes_.size(); ++i) {
    if (!queues_[i].empty() && try_insert(entry_lanes_[i], queues_[i].front())) queues_[i].pop_front();
  }
}

void Simulation::add_vehicle(VehicleState v) {
  world_.add(std::move(v));
  ++entered_;
}

void Simulation::set_external_control(VehicleId id, std::function<double(double)> accel_of_time) {
  external_[id] = std::move(accel_of_time);
}

void Simulation::check_gaps() const {
  for (int l = 0; l < world_.lane_count(); ++l) {
    const auto& ids = world_.lane(l);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      const auto& lead = world_.at(ids[i]);
      const auto& follow = world_.at(ids[i + 1]);
      const double gap = World::net_gap(lead, follow);
      if (gap <= 0.0) {
        std::string dump = fmt::format("gap violation at t={} lane {}: leader {} (x={}, v={}, a={}) follower {} "
                                       "(x={}, v={}, a={}) net_gap={}",
                                       time(), l, lead.id, lead.position, lead.speed, lead.accel, follow.id,
                                       follow.position, follow.speed, follow.accel, gap);
        throw SimulationHalt(time(), {lead.id, follow.id}, dump);
      }
    }
  }
}

void Simulation::step() {
  const double now = time();
  const double dt = cfg_.dt_s;
  world_.time = now;

  inject_demand();

  std::map<VehicleId, Control> controls;
  std::map<VehicleId, int> lane_before;
  for (const auto& [id, v] : world_.vehicles()) {
    controls.emplace(id, decide(v, true));
    lane_before.emplace(id, v.lane);
  }

  for (const auto& [id, c] : controls) {
    if (!c.lane_change) continue;
    const auto& v = world_.at(id);
    const auto nb = neighborhood(v);
    const auto& view = *c.lane_change < v.lane ? nb.right : nb.left;
    if (!view || !view->eligible || !lane_change_safe(*view, v.speed, cfg_.hv_params)) continue;
    world_.move_to_lane(id, *c.lane_change);
    last_lane_change_[id] = now;
  }

  if (cfg_.strategy == Strategy::LocalCoord) local_coordination_step(world_, cfg_);

  std::set<VehicleId> redo;
  for (const auto& [id, lane] : lane_before) {
    const auto& v = world_.at(id);
    if (v.lane == lane) continue;
    last_lane_change_[id] = now;
    redo.insert(id);
    if (const auto* f = world_.follower_of(id)) redo.insert(f->id);
  }
  for (VehicleId id : redo) {
    const auto c = decide(world_.at(id), false);
    auto& slot = controls[id];
    slot.accel = c.accel;
    slot.state = c.state;
  }

  const bool counting = k_ >= warmup_steps_;
  for (const auto& [id, c] : controls) {
    auto& v = world_.at(id);
    const double v1 = std::max(0.0, v.speed + c.accel * dt);
    const double x1 = v.position + 0.5 * (v.speed + v1) * dt;
    if (counting) {
      vmt_m_ += x1 - v.position;
      vht_s_ += dt;
    }
    v.accel = (v1 - v.speed) / dt;
    v.speed = v1;
    v.position = x1;
    if (v.cls == VehicleClass::HV) hv_states_[id] = c.state;
  }

  check_gaps();
  world_.resort();

  std::vector<VehicleId> leaving;
  for (const auto& [id, v] : world_.vehicles()) {
    if (v.position >= cfg_.network.length) leaving.push_back(id);
  }
  for (VehicleId id : leaving) {
    world_.remove(id);
    hv_states_.erase(id);
    last_lane_change_.erase(id);
    external_.erase(id);
    ++exited_;
    if (counting) ++exited_post_warmup_;
  }

  ++k_;
  world_.time = time();
  if (cfg_.strategy == Strategy::LocalCoord) {
    maintain_platoons(world_, cfg_.cacc_params, cfg_.hv_params.look_ahead);
  } else {
    ad_hoc_step(world_, cfg_.cacc_params, cfg_.hv_params.look_ahead);
  }
}

bool Simulation::recording_due() const noexcept {
  return k_ % cfg_.record_stride() == 0 && k_ >= warmup_steps_ && k_ < cfg_.step_count();
}

std::vector<TrajectoryRecord> Simulation::snapshot_records() const {
  std::vector<TrajectoryRecord> out;
  out.reserve(world_.vehicles().size());
  const double now = time();
  for (const auto& [id, v] : world_.vehicles()) {
    TrajectoryRecord r;
    r.time = now;
    r.id = id;
    r.cls = v.cls;
    r.lane = v.lane;
    r.position = v.position;
    r.speed = v.speed;
    r.accel = v.accel;
    r.mode = v.mode;
    r.platoon_id = v.platoon_id;
    if (auto obs = observe(world_.leader_of(id), v)) {
      r.leader_id = obs->leader_id;
      r.leader_class = obs->leader_class;
      r.net_gap = obs->net_gap;
    }
    if (v.cls == VehicleClass::HV) {
      r.mode = ControlMode::Human;
      auto it = hv_states_.find(id);
      r.state = it == hv_states_.end() ? InteractionState::Free : it->second;
      if (auto lc = last_lane_change_.find(id);
          lc != last_lane_change_.end() && lc->second < now && now - lc->second <= cfg_.record_interval_s + 1e-9) {
        r.state = InteractionState::Other;
      }
    }
    out.push_back(r);
  }
  return out;
}

RunSummary Simulation::summary() const {
  RunSummary s;
  s.entered = entered_;
  s.exited = exited_;
  s.present = static_cast<long>(world_.vehicles().size());
  s.exited_post_warmup = exited_post_warmup_;
  s.queued = queued();
  s.vmt_km = vmt_m_ / 1000.0;
  s.vht_h = vht_s_ / 3600.0;
  if (vht_s_ > 0.0) s.q_kmh = s.vmt_km / s.vht_h;
  const double window_h = (cfg_.duration_s - cfg_.warmup_s) / 3600.0;
  if (window_h > 0.0) s.throughput_vph = static_cast<double>(exited_post_warmup_) / window_h;
  return s;
}

RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  Simulation sim(cfg, seed);
  RunResult result;
  if (sim.recording_due()) {
    auto rows = sim.snapshot_records();
    result.records.insert(result.records.end(), rows.begin(), rows.end());
  }
  const long n = cfg.step_count();
  for (long k = 0; k < n; ++k) {
    sim.step();
    if (sim.recording_due()) {
      auto rows = sim.snapshot_records();
      result.records.insert(result.records.end(), rows.begin(), rows.end());
    }
  }
  result.events = sim.world().events;
  result.summary = sim.summary();
  return result;
}

}  // namespace cavmix
