#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "platoon/csv.hpp"
#include "platoon/energy.hpp"
#include "platoon/sim.hpp"

#ifndef PLATOON_DEFAULT_COEFFS
#define PLATOON_DEFAULT_COEFFS ""
#endif

namespace platoon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json path_or_null(const std::optional<fs::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw UsageError(what + ": not a number: '" + text + "'");
  return value;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

/// Comment line carrying the resolved configuration, first line of every CSV.
void write_config_line(std::ostream& out, const json& config) {
  out << "# config: " << config.dump() << '\n';
}

PrepareOptions prepare_options(const RunConfig& cfg) {
  PrepareOptions p;
  p.dt = cfg.grid_step();
  p.accel_window = cfg.accel_window;
  p.vehicle_length = cfg.vehicle_length;
  return p;
}

Scenario resolve_scenario(const RunConfig& cfg) {
  Scenario sc;
  if (cfg.scenario) {
    sc = scenario_from_json(load_json(*cfg.scenario));
  } else if (cfg.preset) {
    try {
      sc = preset_scenario(*cfg.preset);
    } catch (const std::invalid_argument& err) {
      throw UsageError(err.what());
    }
  } else {
    throw UsageError("simulation needs --scenario or --preset");
  }
  if (cfg.seed) sc.seed = *cfg.seed;
  if (cfg.dt) sc.output_dt = *cfg.dt;
  try {
    sc.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError("scenario", err.what());
  }
  return sc;
}

struct LoadedInput {
  PlatoonDataset dataset;
  json source;
  std::optional<Collision> collision;
};

LoadedInput simulate_input(const RunConfig& cfg) {
  const Scenario sc = resolve_scenario(cfg);
  SimulationResult result;
  try {
    result = simulate_platoon(sc);
  } catch (const InfeasibleCycle& err) {
    throw ConfigError("leader.events", err.what());
  }
  LoadedInput in;
  in.source = {{"type", "scenario"}, {"scenario", to_json(sc)}};
  in.collision = result.collision;
  in.dataset = std::move(result.dataset);
  return in;
}

/// Dataset from --input (canonical CSV, or raw CSV with --schema) or from a
/// scenario. Raw and canonical inputs run through the preparation chain.
LoadedInput load_input(const RunConfig& cfg) {
  const int sources = (cfg.input ? 1 : 0) + ((cfg.scenario || cfg.preset) ? 1 : 0);
  if (sources != 1) throw UsageError("exactly one of --input or --scenario/--preset is required");
  if (!cfg.input) return simulate_input(cfg);

  LoadedInput in;
  PlatoonDataset raw;
  if (cfg.schema) {
    const auto schema = ColumnMapping::from_json(load_json(*cfg.schema));
    raw = ingest_csv(*cfg.input, schema);
    in.source = {{"type", "csv"}, {"path", cfg.input->string()}, {"schema", schema.to_json()}};
  } else {
    raw = read_canonical(*cfg.input);
    in.source = {{"type", "canonical"}, {"path", cfg.input->string()}};
  }
  in.dataset = prepare(raw, prepare_options(cfg));
  return in;
}

json base_echo(const RunConfig& cfg, const EnergyConfig* energy, const json& source) {
  json j = cfg.to_json();
  j["source"] = source;
  if (energy) j["coefficients"] = to_json(*energy);
  return j;
}

json collision_json(const Collision& c) {
  return {{"time", c.time}, {"vehicle", c.vehicle_id}, {"gap", c.gap}};
}

class SimulationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void report_collision(const Collision& c) {
  throw SimulationAborted("collision at t=" + format_number(c.time) + " s, vehicle " + c.vehicle_id +
                          ", gap " + format_number(c.gap) + " m");
}

void write_histogram(const fs::path& path, const Histogram& h, const json& config) {
  auto out = open_output(path);
  write_config_line(out, config);
  out << "bin_left,bin_right,mass\n";
  for (std::size_t k = 0; k < h.bins(); ++k) {
    out << format_number(h.edges[k]) << ',' << format_number(h.edges[k + 1]) << ','
        << format_number(h.mass[k]) << '\n';
  }
}

void write_joint(const fs::path& path, const JointDistribution& jd, const json& config) {
  auto out = open_output(path);
  write_config_line(out, config);
  out << "v_bin,a_bin,mass\n";
  for (std::size_t iv = 0; iv < jd.v_bins(); ++iv) {
    const double vc = 0.5 * (jd.v_edges[iv] + jd.v_edges[iv + 1]);
    for (std::size_t ia = 0; ia < jd.a_bins(); ++ia) {
      const double ac = 0.5 * (jd.a_edges[ia] + jd.a_edges[ia + 1]);
      out << format_number(vc) << ',' << format_number(ac) << ',' << format_number(jd.at(iv, ia))
          << '\n';
    }
  }
}

json stats_json(const SummaryStats& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"std", s.stddev}};
}

json segments_json(const SegmentLabel& labels) {
  json arr = json::array();
  for (const auto& seg : labels.intervals) {
    arr.push_back({{"t_start", seg.t_start}, {"t_end", seg.t_end}, {"class", to_string(seg.segment)}});
  }
  return arr;
}

json correlation_table(const std::vector<CorrelationRow>& rows) {
  std::vector<std::string> columns;
  for (const auto& row : rows) {
    if (row.pairs.size() > columns.size()) columns = row.pairs;
  }
  json jrows = json::array();
  for (const auto& row : rows) {
    json r = json::array();
    for (double x : row.r) r.push_back(x);
    jrows.push_back({{"label", row.label}, {"r", r}});
  }
  return {{"columns", columns}, {"rows", jrows}};
}

void write_correlation_csv(const fs::path& path, const std::vector<CorrelationRow>& rows,
                           const json& config) {
  std::size_t width = 0;
  const CorrelationRow* widest = nullptr;
  for (const auto& row : rows) {
    if (!widest || row.pairs.size() > width) {
      width = row.pairs.size();
      widest = &row;
    }
  }
  auto out = open_output(path);
  write_config_line(out, config);
  out << "mode";
  if (widest) {
    for (const auto& p : widest->pairs) out << ',' << p;
  }
  out << '\n';
  for (const auto& row : rows) {
    out << row.label;
    for (std::size_t k = 0; k < width; ++k) {
      out << ',';
      if (k < row.r.size()) out << format_number(row.r[k]);
    }
    out << '\n';
  }
}

}  // namespace

json RunConfig::to_json() const {
  json masses_json = json::object();
  for (const auto& [id, m] : masses) masses_json[id] = m;
  json input_list = json::array();
  for (const auto& p : inputs) input_list.push_back(p.string());
  return {
      {"command", command},
      {"input", path_or_null(input)},
      {"inputs", input_list},
      {"schema", path_or_null(schema)},
      {"scenario", path_or_null(scenario)},
      {"preset", preset ? json(*preset) : json(nullptr)},
      {"seed", seed ? json(*seed) : json(nullptr)},
      {"dt", grid_step()},
      {"out", out.string()},
      {"coeffs", path_or_null(coeffs)},
      {"segments",
       {{"accel_threshold", segmentation.accel_threshold},
        {"min_duration", segmentation.min_duration},
        {"pad", segmentation.pad}}},
      {"timegap_ref", platoon::to_string(timegap_ref)},
      {"accel_window", accel_window},
      {"vehicle_length", vehicle_length},
      {"normalize", normalize},
      {"masses", masses_json},
      {"bins", {{"time_gap", time_bin}, {"space_gap", space_bin}, {"speed", v_bin}, {"accel", a_bin}}},
  };
}

SegmentationOptions parse_segments(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (parts.size() != 3) throw UsageError("--segments expects a_thr,min_dur,pad");
  SegmentationOptions o;
  o.accel_threshold = parse_double(parts[0], "--segments a_thr");
  o.min_duration = parse_double(parts[1], "--segments min_dur");
  o.pad = parse_double(parts[2], "--segments pad");
  if (!(o.accel_threshold > 0.0) || !(o.min_duration >= 0.0) || !(o.pad >= 0.0)) {
    throw UsageError("--segments: a_thr must be positive, min_dur and pad non-negative");
  }
  return o;
}

fs::path bundled_coefficients_path() { return fs::path(PLATOON_DEFAULT_COEFFS); }

EnergyConfig load_coefficients(const std::optional<fs::path>& path) {
  if (path) return energy_config_from_json(load_json(*path));
  const auto bundled = bundled_coefficients_path();
  std::error_code ec;
  if (!bundled.empty() && fs::is_regular_file(bundled, ec)) {
    return energy_config_from_json(load_json(bundled));
  }
  return EnergyConfig{};
}

int cmd_ingest(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.input || !cfg.schema) throw UsageError("ingest needs --input and --schema");
  ensure_out_dir(cfg.out);
  const auto in = load_input(cfg);
  const fs::path target = cfg.out / "platoon.csv";
  write_canonical(target, in.dataset, base_echo(cfg, nullptr, in.source));
  log << "wrote " << target.string() << " (" << in.dataset.vehicles.size() << " vehicles, "
      << in.dataset.vehicles.front().size() << " samples)\n";
  return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.input) throw UsageError("simulate takes --scenario or --preset, not --input");
  ensure_out_dir(cfg.out);
  const auto in = simulate_input(cfg);
  json echo = base_echo(cfg, nullptr, in.source);
  if (in.collision) echo["collision"] = collision_json(*in.collision);
  const fs::path target = cfg.out / "platoon.csv";
  if (!in.dataset.vehicles.empty() && in.dataset.vehicles.front().size() >= 1) {
    write_canonical(target, in.dataset, echo);
  }
  if (in.collision) report_collision(*in.collision);
  log << "wrote " << target.string() << '\n';
  return kOk;
}

int cmd_assess(const RunConfig& cfg, std::ostream& log) {
  ensure_out_dir(cfg.out);
  const EnergyConfig energy = load_coefficients(cfg.coeffs);
  const auto in = load_input(cfg);
  if (in.collision) report_collision(*in.collision);
  const auto& ds = in.dataset;

  AssessOptions opts;
  opts.vehicle = energy.vehicle;
  opts.coefficients = energy.coefficients;
  opts.normalize = cfg.normalize;
  opts.vehicle_masses = cfg.masses;
  opts.segments = segment_steady_perturbation(ds.vehicles.front(), cfg.segmentation);
  const EnergyReport report = assess_platoon(ds, opts);
  const json echo = base_echo(cfg, &energy, in.source);

  {
    auto out = open_output(cfg.out / "energy.csv");
    write_config_line(out, echo);
    out << "vehicle,position,segment,distance_m,duration_s,tractive_kwh_per_100km";
    for (auto m : kFuelModels) out << ',' << to_string(m) << "_l_per_100km";
    out << ",tractive_ratio";
    for (auto m : kFuelModels) out << ',' << to_string(m) << "_ratio";
    out << ",mass_kg\n";
    for (const auto& r : report.rows) {
      out << r.vehicle_id << ',' << r.position << ',' << to_string(r.segment) << ','
          << format_number(r.distance) << ',' << format_number(r.duration) << ','
          << format_number(r.tractive);
      for (double f : r.fuel) out << ',' << format_number(f);
      out << ',' << format_number(r.tractive_ratio);
      for (double f : r.fuel_ratio) out << ',' << format_number(f);
      out << ',' << format_number(r.mass) << '\n';
    }
  }

  json rows = json::array();
  for (const auto& r : report.rows) {
    json fuel = json::object();
    json fuel_ratio = json::object();
    for (std::size_t k = 0; k < kFuelModels.size(); ++k) {
      fuel[to_string(kFuelModels[k])] = r.fuel[k];
      fuel_ratio[to_string(kFuelModels[k])] = r.fuel_ratio[k];
    }
    rows.push_back({{"vehicle", r.vehicle_id},
                    {"position", r.position},
                    {"segment", to_string(r.segment)},
                    {"distance_m", r.distance},
                    {"duration_s", r.duration},
                    {"tractive_kwh_per_100km", r.tractive},
                    {"fuel_l_per_100km", fuel},
                    {"tractive_ratio", r.tractive_ratio},
                    {"fuel_ratio", fuel_ratio},
                    {"mass_kg", r.mass}});
  }
  json doc = {{"config", echo},
              {"normalized", report.normalized},
              {"vsp_jumps_g_per_s",
               {{"at_lower", report.vsp_jumps.at_lower}, {"at_upper", report.vsp_jumps.at_upper}}},
              {"segments", segments_json(*opts.segments)},
              {"rows", rows}};
  write_json(cfg.out / "energy.json", doc);
  log << "wrote " << (cfg.out / "energy.csv").string() << " and energy.json\n";
  return kOk;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  ensure_out_dir(cfg.out);
  const auto in = load_input(cfg);
  if (in.collision) report_collision(*in.collision);
  const auto& ds = in.dataset;
  const json echo = base_echo(cfg, nullptr, in.source);
  json metrics = {{"config", echo}, {"vehicles", json::array()}};
  for (const auto& v : ds.vehicles) metrics["vehicles"].push_back(v.vehicle_id);

  const SegmentLabel labels = segment_steady_perturbation(ds.vehicles.front(), cfg.segmentation);
  metrics["segments"] = segments_json(labels);

  json spread = json::object();
  for (auto cls : {SegmentClass::Steady, SegmentClass::Perturbation}) {
    json entry = json::object();
    if (!labels.of_class(cls).empty()) {
      const auto sd = speed_std(ds, labels, cls);
      for (std::size_t k = 0; k < sd.size(); ++k) entry[ds.vehicles[k].vehicle_id] = sd[k];
    }
    spread[to_string(cls)] = entry;
  }
  metrics["speed_std"] = spread;

  if (ds.vehicles.size() >= 2) {
    const auto stability = l2_amplification(ds, labels);
    json intervals = json::array();
    for (const auto& iv : stability.intervals) {
      json ratios = json::object();
      json overshoot = json::object();
      for (const auto& p : iv.followers) {
        ratios[p.vehicle_id] = p.l2_ratio ? json(*p.l2_ratio) : json(nullptr);
        overshoot[p.vehicle_id] = p.overshoot_peak;
      }
      intervals.push_back({{"t_start", iv.interval.t_start},
                           {"t_end", iv.interval.t_end},
                           {"l2_ratio", ratios},
                           {"overshoot_peak", overshoot},
                           {"strictly_increasing", iv.strictly_increasing},
                           {"all_attenuated", iv.all_attenuated}});
    }
    metrics["stability"] = {{"intervals", intervals}, {"verdict", to_string(stability.verdict)}};

    const auto gaps = compute_gaps(ds, cfg.timegap_ref);
    json gap_json = json::object();
    for (const auto& g : gaps) {
      const std::string pair = g.leader_id + "-" + g.follower_id;
      const auto scatter = gap_speed_scatter(g);
      {
        auto out = open_output(cfg.out / ("gap_speed_" + pair + ".csv"));
        write_config_line(out, echo);
        out << "speed,time_gap,space_gap\n";
        for (std::size_t k = 0; k < scatter.speed.size(); ++k) {
          out << format_number(scatter.speed[k]) << ',' << format_number(scatter.time_gap[k]) << ','
              << format_number(scatter.space_gap[k]) << '\n';
        }
      }
      json entry = {{"defined_time_gaps", scatter.speed.size()}};
      if (!scatter.speed.empty()) {
        const auto h = gap_histograms(g, cfg.time_bin, cfg.space_bin);
        write_histogram(cfg.out / ("hist_time_gap_" + pair + ".csv"), h.time_gap, echo);
        write_histogram(cfg.out / ("hist_space_gap_" + pair + ".csv"), h.space_gap, echo);
        entry["time_gap"] = stats_json(h.time_gap.stats);
        entry["time_gap"]["mode"] = h.time_gap.mode();
        entry["space_gap"] = stats_json(h.space_gap.stats);
        entry["space_gap"]["mode"] = h.space_gap.mode();
        if (scatter.speed.size() >= 2) {
          const auto fit = least_squares(scatter.speed, scatter.time_gap);
          entry["time_gap_vs_speed"] = {{"slope", fit.slope}, {"intercept", fit.intercept}};
          const auto sfit = least_squares(scatter.speed, scatter.space_gap);
          entry["space_gap_vs_speed"] = {{"slope", sfit.slope}, {"intercept", sfit.intercept}};
        }
      }
      gap_json[pair] = entry;
    }
    metrics["gaps"] = gap_json;
    bool any_defined = false;
    for (const auto& g : gaps) any_defined = any_defined || !g.defined_time_gaps().empty();
    if (any_defined) {
      const auto pooled = gap_histograms(std::span<const GapSeries>(gaps), cfg.time_bin, cfg.space_bin);
      write_histogram(cfg.out / "hist_time_gap_all.csv", pooled.time_gap, echo);
      write_histogram(cfg.out / "hist_space_gap_all.csv", pooled.space_gap, echo);
    }
  }

  // Joint maps share edges fitted to the whole platoon.
  std::vector<double> all_v, all_a;
  for (const auto& traj : ds.vehicles) {
    all_v.insert(all_v.end(), traj.v.begin(), traj.v.end());
    all_a.insert(all_a.end(), traj.a.begin(), traj.a.end());
  }
  const auto v_edges = auto_edges(all_v, cfg.v_bin);
  const auto a_edges = auto_edges(all_a, cfg.a_bin);
  json clipped = json::object();
  for (const auto& traj : ds.vehicles) {
    const auto jd = joint_distribution(traj, v_edges, a_edges);
    write_joint(cfg.out / ("joint_" + traj.vehicle_id + ".csv"), jd, echo);
    clipped[traj.vehicle_id] = jd.clipped_count;
  }
  metrics["joint_clipped"] = clipped;

  if (ds.vehicles.size() >= 2) {
    const auto row = leader_correlations(ds, cfg.v_bin, cfg.a_bin);
    const auto head = joint_distribution(ds.vehicles.front(), v_edges, a_edges);
    metrics["correlation"] = correlation_table({row});
    const std::string self = ds.vehicles.front().vehicle_id + "-" + ds.vehicles.front().vehicle_id;
    metrics["correlation"]["self"] = {{self, map_correlation(head, head)}};
  }

  write_json(cfg.out / "metrics.json", metrics);
  log << "wrote analysis products to " << cfg.out.string() << '\n';
  return kOk;
}

int cmd_correlate(const RunConfig& cfg, std::ostream& log) {
  std::vector<fs::path> inputs = cfg.inputs;
  if (inputs.empty() && cfg.input) inputs.push_back(*cfg.input);
  if (inputs.empty()) throw UsageError("correlate needs at least one --input");
  ensure_out_dir(cfg.out);
  std::vector<CorrelationRow> rows;
  for (const auto& path : inputs) {
    RunConfig one = cfg;
    one.input = path;
    one.scenario.reset();
    one.preset.reset();
    const auto in = load_input(one);
    if (in.dataset.vehicles.size() < 2) throw DataError(path.string() + ": need at least two vehicles");
    rows.push_back(leader_correlations(in.dataset, cfg.v_bin, cfg.a_bin));
  }
  const json echo = base_echo(cfg, nullptr, json(nullptr));
  write_correlation_csv(cfg.out / "correlation.csv", rows, echo);
  json doc = correlation_table(rows);
  doc["config"] = echo;
  write_json(cfg.out / "correlation.json", doc);
  log << "wrote " << (cfg.out / "correlation.csv").string() << '\n';
  return kOk;
}

namespace {

template <typename T>
void merge_number(const CLI::Option* opt, const json& j, const char* key, T& dst) {
  if (opt->count() == 0 && j.contains(key)) {
    if (!j.at(key).is_number()) throw ConfigError(key, "expected a number");
    dst = j.at(key).get<T>();
  }
}

void merge_path(const CLI::Option* opt, const json& j, const char* key,
                std::optional<fs::path>& dst) {
  if (opt->count() == 0 && j.contains(key)) {
    if (!j.at(key).is_string()) throw ConfigError(key, "expected a string");
    dst = fs::path(j.at(key).get<std::string>());
  }
}

struct Flags {
  std::string config;
  std::string segments;
  std::string timegap_ref;
  std::string out;
  std::string input;
  std::vector<std::string> inputs;
  std::string schema;
  std::string scenario;
  std::string preset;
  std::string coeffs;
  std::vector<std::string> masses;
  double dt = 0.0;
  std::uint64_t seed = 0;
  bool no_normalize = false;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy demand and behaviour analysis for vehicle platoons", "platoon"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  RunConfig cfg;
  auto* o_dt = app.add_option("--dt", f.dt, "Resampling / output grid step [s] (default 0.1)");
  auto* o_config = app.add_option("--config", f.config, "JSON run configuration");
  auto* o_out = app.add_option("--out", f.out, "Output directory (default .)");
  auto* o_coeffs = app.add_option("--coeffs", f.coeffs, "Coefficients JSON (default: bundled)");
  auto* o_segments = app.add_option("--segments", f.segments, "Segmentation a_thr,min_dur,pad");
  auto* o_ref = app.add_option("--timegap-ref", f.timegap_ref, "follower|preceding");

  auto* ingest = app.add_subcommand("ingest", "Raw CSV + schema -> canonical platoon CSV");
  auto* simulate = app.add_subcommand("simulate", "Scenario -> canonical platoon CSV");
  auto* assess = app.add_subcommand("assess", "Tractive energy and fuel per vehicle");
  auto* analyze = app.add_subcommand("analyze", "Gaps, stability, joint maps, correlation");
  auto* correlate = app.add_subcommand("correlate", "Leader-follower correlation table");

  std::vector<CLI::Option*> input_opts, schema_opts, scenario_opts, preset_opts, seed_opts;
  for (auto* sub : {ingest, assess, analyze}) {
    input_opts.push_back(sub->add_option("--input", f.input, "Canonical CSV, or raw CSV with --schema"));
    schema_opts.push_back(sub->add_option("--schema", f.schema, "Column mapping JSON for a raw CSV"));
  }
  for (auto* sub : {simulate, assess, analyze}) {
    scenario_opts.push_back(sub->add_option("--scenario", f.scenario, "Scenario JSON"));
    preset_opts.push_back(sub->add_option("--preset", f.preset, "stable|unstable|human"));
    seed_opts.push_back(sub->add_option("--seed", f.seed, "Noise seed override"));
  }
  auto* o_inputs = correlate->add_option("--input", f.inputs, "Canonical CSVs, one row each")->required();
  auto* o_accel_window = app.add_option("--accel-window", cfg.accel_window, "Smoothing window [samples]");
  auto* o_length = app.add_option("--vehicle-length", cfg.vehicle_length, "Vehicle length [m]");
  auto* o_no_norm = assess->add_flag("--no-normalize", f.no_normalize, "Use per-vehicle masses");
  auto* o_mass = assess->add_option("--mass", f.masses, "Per-vehicle mass id=kg");
  std::vector<CLI::Option*> bin_opts;
  for (auto* sub : {analyze, correlate}) {
    bin_opts.push_back(sub->add_option("--v-bin", cfg.v_bin, "Speed bin [m/s]"));
    bin_opts.push_back(sub->add_option("--a-bin", cfg.a_bin, "Acceleration bin [m/s^2]"));
  }
  auto* o_time_bin = analyze->add_option("--time-bin", cfg.time_bin, "Time-gap bin [s]");
  auto* o_space_bin = analyze->add_option("--space-bin", cfg.space_bin, "Space-gap bin [m]");
  (void)o_inputs;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  auto any_count = [](const std::vector<CLI::Option*>& opts) {
    for (auto* o : opts) {
      if (o->count() > 0) return true;
    }
    return false;
  };

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    json file = json::object();
    if (o_config->count() > 0) {
      file = load_json(f.config);
      if (!file.is_object()) throw ConfigError("config", "expected an object");
    }

    if (o_dt->count() > 0) {
      cfg.dt = f.dt;
    } else if (file.contains("dt")) {
      cfg.dt = file.at("dt").get<double>();
    }
    if (cfg.dt && !(*cfg.dt > 0.0)) throw UsageError("--dt must be positive");
    cfg.out = o_out->count() > 0 ? fs::path(f.out) : fs::path(file.value("out", std::string(".")));
    if (o_coeffs->count() > 0) cfg.coeffs = fs::path(f.coeffs);
    merge_path(o_coeffs, file, "coeffs", cfg.coeffs);

    if (o_segments->count() > 0) {
      cfg.segmentation = parse_segments(f.segments);
    } else if (file.contains("segments")) {
      const auto& s = file.at("segments");
      if (s.is_string()) {
        cfg.segmentation = parse_segments(s.get<std::string>());
      } else {
        cfg.segmentation.accel_threshold = s.value("accel_threshold", cfg.segmentation.accel_threshold);
        cfg.segmentation.min_duration = s.value("min_duration", cfg.segmentation.min_duration);
        cfg.segmentation.pad = s.value("pad", cfg.segmentation.pad);
      }
    }
    std::string ref = o_ref->count() > 0 ? f.timegap_ref : file.value("timegap_ref", std::string());
    if (!ref.empty()) {
      try {
        cfg.timegap_ref = parse_gap_reference(ref);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }

    if (any_count(input_opts)) cfg.input = fs::path(f.input);
    if (any_count(schema_opts)) cfg.schema = fs::path(f.schema);
    if (any_count(scenario_opts)) cfg.scenario = fs::path(f.scenario);
    if (any_count(preset_opts)) cfg.preset = f.preset;
    if (any_count(seed_opts)) cfg.seed = f.seed;
    if (!cfg.input && !cfg.scenario && !cfg.preset) {
      if (file.contains("input")) cfg.input = fs::path(file.at("input").get<std::string>());
      if (file.contains("scenario")) cfg.scenario = fs::path(file.at("scenario").get<std::string>());
      if (file.contains("preset")) cfg.preset = file.at("preset").get<std::string>();
    }
    if (!cfg.schema && file.contains("schema")) cfg.schema = fs::path(file.at("schema").get<std::string>());
    if (!cfg.seed && file.contains("seed")) cfg.seed = file.at("seed").get<std::uint64_t>();
    for (const auto& p : f.inputs) cfg.inputs.emplace_back(p);
    if (cfg.inputs.empty() && file.contains("inputs")) {
      for (const auto& p : file.at("inputs")) cfg.inputs.emplace_back(p.get<std::string>());
    }

    merge_number(o_accel_window, file, "accel_window", cfg.accel_window);
    merge_number(o_length, file, "vehicle_length", cfg.vehicle_length);
    if (file.contains("bins")) {
      const auto& b = file.at("bins");
      if (!any_count(bin_opts)) {
        cfg.v_bin = b.value("speed", cfg.v_bin);
        cfg.a_bin = b.value("accel", cfg.a_bin);
      }
      if (o_time_bin->count() == 0) cfg.time_bin = b.value("time_gap", cfg.time_bin);
      if (o_space_bin->count() == 0) cfg.space_bin = b.value("space_gap", cfg.space_bin);
    }
    for (double bin : {cfg.v_bin, cfg.a_bin, cfg.time_bin, cfg.space_bin}) {
      if (!(bin > 0.0)) throw UsageError("bin widths must be positive");
    }
    if (cfg.accel_window < 1 || cfg.accel_window % 2 == 0) {
      throw UsageError("--accel-window must be a positive odd number");
    }
    if (!(cfg.vehicle_length > 0.0)) throw UsageError("--vehicle-length must be positive");

    cfg.normalize = o_no_norm->count() > 0 ? false : file.value("normalize", true);
    std::vector<std::string> mass_specs = f.masses;
    if (o_mass->count() == 0 && file.contains("masses")) {
      for (const auto& [id, m] : file.at("masses").items()) {
        cfg.masses.emplace_back(id, m.get<double>());
      }
    }
    for (const auto& spec : mass_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--mass expects id=kg, got '" + spec + "'");
      cfg.masses.emplace_back(spec.substr(0, eq), parse_double(spec.substr(eq + 1), "--mass"));
    }

    if (cfg.command == "ingest") return cmd_ingest(cfg, out);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "assess") return cmd_assess(cfg, out);
    if (cfg.command == "analyze") return cmd_analyze(cfg, out);
    return cmd_correlate(cfg, out);
  } catch (const SimulationAborted& e) {
    err << "simulation aborted: " << e.what() << '\n';
    return kCollision;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataError& e) {
    err << "data error: " << e.what();
    if (e.row()) err << " (row " << *e.row() << ')';
    if (!e.column().empty()) err << " (column " << e.column() << ')';
    err << '\n';
    return kDataError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("platoon");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace platoon::cli
