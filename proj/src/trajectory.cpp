#include "cavmix/trajectory.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

namespace cavmix {

namespace {

template <class T>
std::string opt(const std::optional<T>& v) {
  return v ? fmt::format("{}", *v) : std::string{};
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::size_t line_no, std::string_view column) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw TrajectoryFormatError(fmt::format("line {}: bad {} value '{}'", line_no, column, s));
  }
  return value;
}

template <class T>
std::optional<T> parse_optional(std::string_view s, std::size_t line_no, std::string_view column) {
  if (s.empty()) return std::nullopt;
  return parse_number<T>(s, line_no, column);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  out << kTrajectoryHeader << '\n';
  std::string line;
  for (const auto& r : records) {
    line.clear();
    std::string state;
    if (r.cls == VehicleClass::HV) {
      state = r.state ? std::string(to_string(*r.state)) : std::string{};
    } else {
      state = std::string(to_string(r.mode));
    }
    fmt::format_to(std::back_inserter(line), "{},{},{},{},{},{},{},{},{},{},{},{}\n", r.time, r.id,
                   to_string(r.cls), r.lane, r.position, r.speed, r.accel, opt(r.leader_id),
                   r.leader_class ? to_string(*r.leader_class) : std::string_view{}, opt(r.net_gap), state,
                   opt(r.platoon_id));
    out << line;
  }
}

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
  std::ostringstream out;
  write_trajectory_csv(out, records);
  return out.str();
}

std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TrajectoryFormatError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) throw TrajectoryFormatError("unexpected trajectory header: " + line);

  std::vector<TrajectoryRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 12) {
      throw TrajectoryFormatError(fmt::format("line {}: expected 12 fields, got {}", line_no, f.size()));
    }
    TrajectoryRecord r;
    r.time = parse_number<double>(f[0], line_no, "time");
    r.id = parse_number<VehicleId>(f[1], line_no, "veh_id");
    auto cls = parse_vehicle_class(f[2]);
    if (!cls) throw TrajectoryFormatError(fmt::format("line {}: bad class '{}'", line_no, f[2]));
    r.cls = *cls;
    r.lane = parse_number<int>(f[3], line_no, "lane");
    r.position = parse_number<double>(f[4], line_no, "pos_m");
    r.speed = parse_number<double>(f[5], line_no, "speed_ms");
    r.accel = parse_number<double>(f[6], line_no, "accel_ms2");
    r.leader_id = parse_optional<VehicleId>(f[7], line_no, "leader_id");
    if (!f[8].empty()) {
      r.leader_class = parse_vehicle_class(f[8]);
      if (!r.leader_class) throw TrajectoryFormatError(fmt::format("line {}: bad leader_class", line_no));
    }
    r.net_gap = parse_optional<double>(f[9], line_no, "net_gap_m");
    if (r.cls == VehicleClass::HV) {
      r.mode = ControlMode::Human;
      if (!f[10].empty()) {
        r.state = parse_interaction_state(f[10]);
        if (!r.state) throw TrajectoryFormatError(fmt::format("line {}: bad state '{}'", line_no, f[10]));
      }
    } else if (f[10] == "CACC") {
      r.mode = ControlMode::Cacc;
    } else if (f[10] == "ACC" || f[10].empty()) {
      r.mode = ControlMode::Acc;
    } else {
      throw TrajectoryFormatError(fmt::format("line {}: bad CAV mode '{}'", line_no, f[10]));
    }
    r.platoon_id = parse_optional<PlatoonId>(f[11], line_no, "platoon_id");
    out.push_back(r);
  }
  return out;
}

std::vector<TrajectoryRecord> load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrajectoryFormatError(fmt::format("cannot open {}", path.string()));
  return read_trajectory_csv(in);
}

void write_event_csv(std::ostream& out, const std::vector<CoordinationEvent>& events) {
  out << kEventHeader << '\n';
  for (const auto& e : events) {
    out << fmt::format("{},{},{},{},{}\n", e.time, to_string(e.type), opt(e.joiner), opt(e.platoon),
                       e.kind ? to_string(*e.kind) : std::string_view{});
  }
}

}  // namespace cavmix
