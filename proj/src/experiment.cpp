#include "cavmix/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "cavmix/config_toml.hpp"
#include "cavmix/trajectory.hpp"

namespace cavmix {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("missing file {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string mpr_label(double mpr) { return fmt::format("{}%", std::lround(mpr * 100.0)); }

std::string ks_label(const MatrixCell& c) {
  return c.strategy == Strategy::Base ? "BASE" : fmt::format("{}-{}", to_string(c.strategy), mpr_label(c.mpr));
}

// Table-style K-S matrix over scenarios, hard-brake samples pooled across seeds.
void write_ks_matrix(const fs::path& path, const std::vector<CellOutcome>& outcomes,
                     std::optional<Interaction> only) {
  std::vector<std::string> labels;
  std::map<std::string, std::vector<double>> samples;
  for (const auto& o : outcomes) {
    const auto label = ks_label(o.cell);
    if (!samples.count(label)) labels.push_back(label);
    auto& s = samples[label];
    for (const auto& e : o.report.hard_brakes) {
      if (!only || e.interaction == *only) s.push_back(e.accel);
    }
  }
  std::ofstream out(path);
  out << "scenario";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (const auto& row : labels) {
    out << row;
    for (const auto& col : labels) {
      if (row == col) {
        out << ",-";
      } else if (samples[row].empty() || samples[col].empty()) {
        out << ",NA";
      } else {
        out << ',' << (ks_two_sample(samples[row], samples[col]).reject ? 1 : 0);
      }
    }
    out << '\n';
  }
}

struct CellRef {
  Strategy strategy;
  double mpr;
  std::uint64_t seed;
  fs::path dir;
};

std::vector<CellRef> load_manifest(const fs::path& dir) {
  const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  std::vector<CellRef> out;
  for (const auto& c : j.at("cells")) {
    auto s = parse_strategy(c.at("strategy").get<std::string>());
    if (!s) throw std::runtime_error("manifest names an unknown strategy");
    out.push_back({*s, c.at("mpr").get<double>(), c.at("seed").get<std::uint64_t>(), dir / c.at("dir").get<std::string>()});
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string MatrixCell::name() const {
  return fmt::format("{}_mpr{:.2f}_seed{}", to_string(strategy), mpr, seed);
}

ScenarioConfig MatrixCell::config(const ScenarioConfig& base) const {
  ScenarioConfig cfg = base;
  cfg.strategy = strategy;
  cfg.mpr = strategy == Strategy::Base ? 0.0 : mpr;
  cfg.mpr_list = {cfg.mpr};
  cfg.seeds = {seed};
  return cfg;
}

std::vector<MatrixCell> expand_matrix(const ScenarioConfig& cfg) {
  const std::vector<double> mprs = cfg.mpr_list.empty() ? std::vector<double>{cfg.mpr} : cfg.mpr_list;
  std::vector<MatrixCell> cells;
  for (auto seed : cfg.seeds) cells.push_back({Strategy::Base, 0.0, seed});
  for (auto strategy : {Strategy::AdHoc, Strategy::LocalCoord}) {
    for (double mpr : mprs) {
      for (auto seed : cfg.seeds) cells.push_back({strategy, mpr, seed});
    }
  }
  return cells;
}

CellOutcome run_cell(const ScenarioConfig& base, const MatrixCell& cell, const fs::path& dir) {
  CellOutcome o;
  o.cell = cell;
  fs::create_directories(dir);
  const auto cfg = cell.config(base);
  try {
    auto result = run_scenario(cfg, cell.seed);
    o.summary = result.summary;
    {
      std::ofstream out(dir / "trajectory.csv", std::ios::binary);
      write_trajectory_csv(out, result.records);
    }
    {
      std::ofstream out(dir / "events.csv", std::ios::binary);
      write_event_csv(out, result.events);
    }
    o.report = analyze(result.records, result.summary, cfg);
    write_report(o.report, dir);
  } catch (const SimulationHalt& h) {
    o.halted = true;
    o.error = h.what();
    o.summary.halts = 1;
  }
  write_file(dir / "summary.json", to_json(o.summary));
  return o;
}

int run_matrix(const ScenarioConfig& cfg, const MatrixOptions& opts, std::ostream& log) {
  const auto cells = expand_matrix(cfg);
  if (opts.dry_run) {
    for (const auto& c : cells) log << fmt::format("{} strategy={} mpr={} seed={}\n", c.name(), to_string(c.strategy), c.mpr, c.seed);
    log << fmt::format("{} runs\n", cells.size());
    return 0;
  }

  fs::create_directories(opts.out);
  write_file(opts.out / "config.toml", to_toml(cfg));

  unsigned jobs = opts.jobs ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      outcomes[i] = run_cell(cfg, cells[i], opts.out / "runs" / cells[i].name());
      std::lock_guard lock(log_mutex);
      log << fmt::format("[{}/{}] {} {}\n", i + 1, cells.size(), cells[i].name(),
                         outcomes[i].halted ? "HALTED" : "ok");
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  {
    std::ofstream out(opts.out / "comparison.csv", std::ios::binary);
    out << "strategy,mpr,seed,q_kmh,throughput_vph,hard_brake_hv_hv,hard_brake_hv_cav,ttc_hv_hv,ttc_hv_cav,"
           "lane_changes_per_hv,mean_platoon_length,halted";
    for (auto s : kAllInteractionStates) out << ',' << to_string(s);
    out << '\n';
    for (const auto& o : outcomes) {
      const auto& r = o.report;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", to_string(o.cell.strategy), o.cell.mpr, o.cell.seed,
                         r.performance.q_kmh ? fmt::format("{}", *r.performance.q_kmh) : std::string{},
                         r.performance.throughput_vph, r.hard_brakes_with(Interaction::HvHv),
                         r.hard_brakes_with(Interaction::HvCav), r.ttc_with(Interaction::HvHv),
                         r.ttc_with(Interaction::HvCav), r.lane_changes.per_vehicle_mean,
                         r.mean_platoon_length ? fmt::format("{}", *r.mean_platoon_length) : std::string{},
                         o.halted ? 1 : 0);
      for (auto s : kAllInteractionStates) {
        auto it = r.composition.find(s);
        out << ',' << fmt::format("{}", it == r.composition.end() ? 0.0 : it->second);
      }
      out << '\n';
    }
  }
  write_ks_matrix(opts.out / "ks_matrix.csv", outcomes, std::nullopt);
  write_ks_matrix(opts.out / "ks_matrix_hv_hv.csv", outcomes, Interaction::HvHv);
  write_ks_matrix(opts.out / "ks_matrix_hv_cav.csv", outcomes, Interaction::HvCav);

  nlohmann::ordered_json manifest;
  manifest["config_sha256"] = sha256_file(opts.out / "config.toml");
  auto& list = manifest["cells"] = nlohmann::ordered_json::array();
  for (const auto& o : outcomes) {
    const auto rel = fs::path("runs") / o.cell.name();
    nlohmann::ordered_json c;
    c["name"] = o.cell.name();
    c["strategy"] = std::string(to_string(o.cell.strategy));
    c["mpr"] = o.cell.mpr;
    c["seed"] = o.cell.seed;
    c["dir"] = rel.generic_string();
    c["halted"] = o.halted;
    nlohmann::ordered_json hashes;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opts.out / rel)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) hashes[f.filename().string()] = sha256_file(f);
    c["sha256"] = hashes;
    list.push_back(c);
  }
  for (const char* name : {"comparison.csv", "ks_matrix.csv", "ks_matrix_hv_hv.csv", "ks_matrix_hv_cav.csv"}) {
    manifest["outputs"][name] = sha256_file(opts.out / name);
  }
  write_file(opts.out / "manifest.json", manifest.dump(2) + "\n");

  int code = 0;
  for (const auto& o : outcomes) {
    if (o.halted) {
      log << fmt::format("run {} halted: {}\n", o.cell.name(), o.error);
      code = 2;
    }
  }
  return code;
}

int compare_matrices(const fs::path& a, const fs::path& b, const fs::path& out, std::optional<Strategy> strategy_a,
                     std::optional<Strategy> strategy_b, std::ostream& log) {
  const bool cross = strategy_a && strategy_b;
  std::vector<CellRef> cells_a;
  std::vector<CellRef> cells_b;
  try {
    cells_a = load_manifest(a);
    cells_b = load_manifest(b);
  } catch (const std::exception& e) {
    log << e.what() << '\n';
    return 1;
  }
  if (cross) {
    std::erase_if(cells_a, [&](const CellRef& c) { return c.strategy != *strategy_a; });
    std::erase_if(cells_b, [&](const CellRef& c) { return c.strategy != *strategy_b; });
  }

  struct Pair {
    CellRef a;
    CellRef b;
  };
  std::vector<Pair> pairs;
  for (const auto& ca : cells_a) {
    for (const auto& cb : cells_b) {
      const bool same_strategy = cross || ca.strategy == cb.strategy;
      if (same_strategy && ca.mpr == cb.mpr && ca.seed == cb.seed) pairs.push_back({ca, cb});
    }
  }
  if (pairs.empty()) {
    log << "no overlapping cells\n";
    return 1;
  }

  std::ostringstream csv;
  csv << "row_type,strategy_a,strategy_b,mpr,seed,delta_q_kmh,delta_throughput_vph,delta_lane_changes_per_hv,"
         "ks_d,ks_threshold,ks_reject\n";
  std::map<std::tuple<Strategy, Strategy, double>, std::pair<std::vector<double>, std::vector<double>>> pooled;
  try {
    for (const auto& p : pairs) {
      const auto ra = report_from_json(read_file(p.a.dir / "metrics.json"));
      const auto rb = report_from_json(read_file(p.b.dir / "metrics.json"));
      const double dq = rb.performance.q_kmh.value_or(0.0) - ra.performance.q_kmh.value_or(0.0);
      csv << fmt::format("cell,{},{},{},{},{},{},{},,,\n", to_string(p.a.strategy), to_string(p.b.strategy), p.a.mpr,
                         p.a.seed, dq, rb.performance.throughput_vph - ra.performance.throughput_vph,
                         rb.lane_changes.per_vehicle_mean - ra.lane_changes.per_vehicle_mean);
      auto& pool = pooled[{p.a.strategy, p.b.strategy, p.a.mpr}];
      auto xa = load_hard_brake_accels(p.a.dir / "hard_brakes.csv", std::nullopt);
      auto xb = load_hard_brake_accels(p.b.dir / "hard_brakes.csv", std::nullopt);
      pool.first.insert(pool.first.end(), xa.begin(), xa.end());
      pool.second.insert(pool.second.end(), xb.begin(), xb.end());
    }
  } catch (const std::exception& e) {
    log << e.what() << '\n';
    return 1;
  }
  for (const auto& [key, samples] : pooled) {
    const auto& [sa, sb, mpr] = key;
    if (samples.first.empty() || samples.second.empty()) {
      csv << fmt::format("ks,{},{},{},,,,,,,NA\n", to_string(sa), to_string(sb), mpr);
      continue;
    }
    const auto ks = ks_two_sample(samples.first, samples.second);
    csv << fmt::format("ks,{},{},{},,,,,{},{},{}\n", to_string(sa), to_string(sb), mpr, ks.d, ks.threshold,
                       ks.reject ? 1 : 0);
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file(out, csv.str());
  return 0;
}

}  // namespace cavmix
