#include "cavmix/config_toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace cavmix {

namespace {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, std::int64_t, bool, std::string, Array> v;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::map<std::string, Value> parse() {
    std::map<std::string, Value> out;
    std::string table;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        table = read_bare_key();
        skip_inline_ws();
        expect(']');
        end_of_line();
        continue;
      }
      std::string key = read_bare_key();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      Value val = read_value();
      end_of_line();
      std::string full = table.empty() ? key : table + "." + key;
      if (out.count(full)) fail(fmt::format("duplicate key '{}'", full));
      out.emplace(std::move(full), std::move(val));
    }
    return out;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(fmt::format("line {}: {}", line(), what));
  }

  int line() const {
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos_), '\n'));
  }

  void expect(char c) {
    if (eof() || peek() != c) fail(fmt::format("expected '{}'", c));
    ++pos_;
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_ws();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        ++pos_;
        continue;
      }
      break;
    }
  }

  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (!eof() && peek() == '\r') ++pos_;
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
    if (!eof()) ++pos_;
  }

  std::string read_bare_key() {
    std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  Value read_value() {
    if (eof()) fail("missing value");
    char c = peek();
    if (c == '"') return Value{read_string()};
    if (c == '[') return Value{read_array()};
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return Value{true};
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return Value{false};
    }
    return read_number();
  }

  std::string read_string() {
    expect('"');
    std::string s;
    while (!eof() && peek() != '"') {
      if (peek() == '\n') fail("unterminated string");
      if (peek() == '\\') {
        ++pos_;
        if (eof()) fail("bad escape");
        char e = peek();
        s.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
      } else {
        s.push_back(peek());
      }
      ++pos_;
    }
    expect('"');
    return s;
  }

  Array read_array() {
    expect('[');
    Array arr;
    while (true) {
      skip_blank_lines();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(read_value());
      skip_blank_lines();
      if (!eof() && peek() == ',') {
        ++pos_;
        continue;
      }
      skip_blank_lines();
      expect(']');
      return arr;
    }
  }

  Value read_number() {
    std::size_t start = pos_;
    while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '-' || peek() == '+' ||
                      peek() == '.' || peek() == 'e' || peek() == 'E' || peek() == '_')) {
      ++pos_;
    }
    std::string token;
    for (char ch : text_.substr(start, pos_ - start)) {
      if (ch != '_') token.push_back(ch);
    }
    if (token.empty()) fail("expected a value");
    if (token.front() == '+') token.erase(0, 1);
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (is_float) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || p != last) fail(fmt::format("bad number '{}'", token));
      return Value{d};
    }
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(first, last, i);
    if (ec != std::errc() || p != last) fail(fmt::format("bad integer '{}'", token));
    return Value{i};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double as_double(const std::string& key, const Value& v) {
  if (auto d = std::get_if<double>(&v.v)) return *d;
  if (auto i = std::get_if<std::int64_t>(&v.v)) return static_cast<double>(*i);
  throw ConfigError(fmt::format("{}: expected a number", key));
}

std::int64_t as_int(const std::string& key, const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v.v)) return *i;
  throw ConfigError(fmt::format("{}: expected an integer", key));
}

bool as_bool(const std::string& key, const Value& v) {
  if (auto b = std::get_if<bool>(&v.v)) return *b;
  throw ConfigError(fmt::format("{}: expected true or false", key));
}

const std::string& as_string(const std::string& key, const Value& v) {
  if (auto s = std::get_if<std::string>(&v.v)) return *s;
  throw ConfigError(fmt::format("{}: expected a string", key));
}

const Array& as_array(const std::string& key, const Value& v) {
  if (auto a = std::get_if<Array>(&v.v)) return *a;
  throw ConfigError(fmt::format("{}: expected an array", key));
}

using Setter = std::function<void(const std::string&, const Value&, ScenarioConfig&)>;

Setter number(double ScenarioConfig::*field) {
  return [field](const std::string& k, const Value& v, ScenarioConfig& c) { c.*field = as_double(k, v); };
}

template <class Sub>
Setter sub_number(Sub ScenarioConfig::*sub, double Sub::*field, double scale = 1.0) {
  return [=](const std::string& k, const Value& v, ScenarioConfig& c) { (c.*sub).*field = as_double(k, v) * scale; };
}

constexpr double kFromKmh = 1.0 / kKmhPerMs;

const std::map<std::string, Setter>& setters() {
  using C = ScenarioConfig;
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["demand_vph"] = number(&C::demand_vph);
    t["demand_scale"] = number(&C::demand_scale);
    t["mpr"] = number(&C::mpr);
    t["duration_s"] = number(&C::duration_s);
    t["warmup_s"] = number(&C::warmup_s);
    t["dt_s"] = number(&C::dt_s);
    t["record_interval_s"] = number(&C::record_interval_s);
    t["vehicle_length"] = number(&C::vehicle_length);
    t["mpr_list"] = [](const std::string& k, const Value& v, C& c) {
      c.mpr_list.clear();
      for (const auto& e : as_array(k, v)) c.mpr_list.push_back(as_double(k, e));
    };
    t["strategy"] = [](const std::string& k, const Value& v, C& c) {
      auto s = parse_strategy(as_string(k, v));
      if (!s) throw ConfigError(fmt::format("{}: unknown strategy '{}'", k, as_string(k, v)));
      c.strategy = *s;
    };
    t["seeds"] = [](const std::string& k, const Value& v, C& c) {
      c.seeds.clear();
      for (const auto& e : as_array(k, v)) {
        auto s = as_int(k, e);
        if (s < 0) throw ConfigError(fmt::format("{}: seeds must be non-negative", k));
        c.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    };

    t["network.length"] = sub_number(&C::network, &RoadNetwork::length);
    t["network.speed_limit"] = sub_number(&C::network, &RoadNetwork::speed_limit, kFromKmh);
    t["network.lane_count"] = [](const std::string& k, const Value& v, C& c) {
      c.network.lane_count = static_cast<int>(as_int(k, v));
    };
    t["network.lane_policies"] = [](const std::string& k, const Value& v, C& c) {
      c.network.lane_policies.clear();
      for (const auto& e : as_array(k, v)) {
        auto p = parse_lane_policy(as_string(k, e));
        if (!p) throw ConfigError(fmt::format("{}: unknown lane policy '{}'", k, as_string(k, e)));
        c.network.lane_policies.push_back(*p);
      }
    };

    using H = HvParams;
    for (auto [name, field] : std::initializer_list<std::pair<const char*, double H::*>>{
             {"cc0", &H::cc0}, {"cc1", &H::cc1}, {"cc2", &H::cc2}, {"cc3", &H::cc3},
             {"cc4", &H::cc4}, {"cc5", &H::cc5}, {"cc6", &H::cc6}, {"cc7", &H::cc7},
             {"cc8", &H::cc8}, {"cc9", &H::cc9}, {"max_decel", &H::max_decel},
             {"look_ahead", &H::look_ahead}, {"lc_gain_threshold", &H::lc_gain_threshold},
             {"lc_keep_right_bias", &H::lc_keep_right_bias}, {"lc_safe_decel", &H::lc_safe_decel}}) {
      t[std::string("hv_params.") + name] = sub_number(&C::hv_params, field);
    }
    t["hv_params.desired_speed_sigma"] = sub_number(&C::hv_params, &H::desired_speed_sigma, kFromKmh);
    t["hv_params.desired_speed_trunc"] = sub_number(&C::hv_params, &H::desired_speed_trunc, kFromKmh);

    using P = CaccParams;
    for (auto [name, field] : std::initializer_list<std::pair<const char*, double P::*>>{
             {"t_cacc", &P::t_cacc}, {"t_acc", &P::t_acc}, {"s0", &P::s0}, {"a_max", &P::a_max},
             {"b_des", &P::b_des}, {"coolness", &P::coolness}, {"delta", &P::delta},
             {"d_f", &P::d_front}, {"d_r", &P::d_rear}, {"max_decel", &P::max_decel},
             {"comm_range", &P::comm_range}, {"t_gap_make", &P::t_gap_make},
             {"gap_request_timeout", &P::gap_request_timeout}, {"abort_cooldown", &P::abort_cooldown}}) {
      t[std::string("cacc_params.") + name] = sub_number(&C::cacc_params, field);
    }
    t["cacc_params.phi_max"] = [](const std::string& k, const Value& v, C& c) {
      c.cacc_params.phi_max = static_cast<int>(as_int(k, v));
    };
    t["cacc_params.adhoc_lane_change"] = [](const std::string& k, const Value& v, C& c) {
      c.cacc_params.adhoc_lane_change = as_bool(k, v);
    };
    t["cacc_params.v_des_range"] = [](const std::string& k, const Value& v, C& c) {
      const auto& arr = as_array(k, v);
      if (arr.size() != 2) throw ConfigError(fmt::format("{}: expected [min, max]", k));
      c.cacc_params.v_des_min = kmh_to_ms(as_double(k, arr[0]));
      c.cacc_params.v_des_max = kmh_to_ms(as_double(k, arr[1]));
    };
    return t;
  }();
  return table;
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  auto values = Parser(text).parse();
  ScenarioConfig cfg = desk_scale_config();
  const auto& table = setters();
  for (const auto& [key, value] : values) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(fmt::format("unknown key '{}'", key));
    it->second(key, value, cfg);
  }
  if (values.count("network.lane_count") && !values.count("network.lane_policies")) {
    cfg.network.lane_policies.assign(static_cast<std::size_t>(std::max(cfg.network.lane_count, 0)),
                                     LanePolicy::General);
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_toml(const ScenarioConfig& c) {
  std::string out;
  auto line = [&out](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  auto num = [](double d) { return fmt::format("{}", d); };
  // 12 significant digits absorb the km/h <-> m/s rounding so files stay stable.
  auto kmh = [&](double ms) { return num(std::stod(fmt::format("{:.12g}", ms_to_kmh(ms)))); };

  line("demand_vph", num(c.demand_vph));
  line("demand_scale", num(c.demand_scale));
  line("mpr", num(c.mpr));
  std::vector<std::string> mprs;
  for (double m : c.mpr_list) mprs.push_back(num(m));
  line("mpr_list", fmt::format("[{}]", fmt::join(mprs, ", ")));
  line("strategy", fmt::format("\"{}\"", to_string(c.strategy)));
  line("duration_s", num(c.duration_s));
  line("warmup_s", num(c.warmup_s));
  line("dt_s", num(c.dt_s));
  line("record_interval_s", num(c.record_interval_s));
  line("seeds", fmt::format("[{}]", fmt::join(c.seeds, ", ")));
  line("vehicle_length", num(c.vehicle_length));

  out += "\n[network]\n";
  line("length", num(c.network.length));
  line("lane_count", fmt::format("{}", c.network.lane_count));
  std::vector<std::string> pol;
  for (auto p : c.network.lane_policies) pol.push_back(fmt::format("\"{}\"", to_string(p)));
  line("lane_policies", fmt::format("[{}]", fmt::join(pol, ", ")));
  line("speed_limit", kmh(c.network.speed_limit));

  const auto& h = c.hv_params;
  out += "\n[hv_params]\n";
  line("cc0", num(h.cc0));
  line("cc1", num(h.cc1));
  line("cc2", num(h.cc2));
  line("cc3", num(h.cc3));
  line("cc4", num(h.cc4));
  line("cc5", num(h.cc5));
  line("cc6", num(h.cc6));
  line("cc7", num(h.cc7));
  line("cc8", num(h.cc8));
  line("cc9", num(h.cc9));
  line("max_decel", num(h.max_decel));
  line("look_ahead", num(h.look_ahead));
  line("desired_speed_sigma", kmh(h.desired_speed_sigma));
  line("desired_speed_trunc", kmh(h.desired_speed_trunc));
  line("lc_gain_threshold", num(h.lc_gain_threshold));
  line("lc_keep_right_bias", num(h.lc_keep_right_bias));
  line("lc_safe_decel", num(h.lc_safe_decel));

  const auto& p = c.cacc_params;
  out += "\n[cacc_params]\n";
  line("t_cacc", num(p.t_cacc));
  line("t_acc", num(p.t_acc));
  line("s0", num(p.s0));
  line("a_max", num(p.a_max));
  line("b_des", num(p.b_des));
  line("coolness", num(p.coolness));
  line("delta", num(p.delta));
  line("v_des_range", fmt::format("[{}, {}]", kmh(p.v_des_min), kmh(p.v_des_max)));
  line("phi_max", fmt::format("{}", p.phi_max));
  line("d_f", num(p.d_front));
  line("d_r", num(p.d_rear));
  line("max_decel", num(p.max_decel));
  line("comm_range", num(p.comm_range));
  line("t_gap_make", num(p.t_gap_make));
  line("gap_request_timeout", num(p.gap_request_timeout));
  line("abort_cooldown", num(p.abort_cooldown));
  line("adhoc_lane_change", p.adhoc_lane_change ? "true" : "false");
  return out;
}

}  // namespace cavmix
