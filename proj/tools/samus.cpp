// samus: simulate scenarios, run the tracker and write metrics.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "samus/samus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace samus;

namespace {

constexpr int kExitConfig = 2;

// ---- scenario configuration <-> JSON ----

const char* kScenarioSchema = R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "samus scenario configuration",
  "type": "object",
  "additionalProperties": false,
  "properties": {
    "dataset": {"type": "string", "pattern": "^(NC|ECC)-(EIS|IT)(-MAN)?$"},
    "n_targets": {"type": "integer", "minimum": 0},
    "duration_orbits": {"type": "number", "exclusiveMinimum": 0},
    "interval_sec": {"type": "number", "exclusiveMinimum": 0},
    "noise_arcsec": {"type": "number", "minimum": 0},
    "offaxis_arcsec": {"type": "number", "minimum": 0},
    "roll_arcsec": {"type": "number", "minimum": 0},
    "clutter_min": {"type": "integer", "minimum": 0},
    "clutter_max": {"type": "integer", "minimum": 0},
    "gap_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    "seed": {"type": "integer", "minimum": 0},
    "maneuvers": {"type": "boolean"},
    "n_maneuvers": {"type": "integer", "minimum": 0},
    "j2": {"type": "boolean"},
    "boresight_sign": {"enum": [-1, 0, 1]},
    "observer": {
      "type": "object",
      "required": ["a_km", "e", "i_deg"],
      "additionalProperties": false,
      "properties": {
        "a_km": {"type": "number"}, "e": {"type": "number"}, "i_deg": {"type": "number"},
        "raan_deg": {"type": "number"}, "argp_deg": {"type": "number"}, "M_deg": {"type": "number"}
      }
    },
    "targets_km": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "properties": {
          "da": {"type": "number"}, "dl": {"type": "number"}, "dex": {"type": "number"},
          "dey": {"type": "number"}, "dix": {"type": "number"}, "diy": {"type": "number"}
        }
      }
    },
    "maneuver_list": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["epoch_sec", "dv_rtn_ms", "spacecraft"],
        "additionalProperties": false,
        "properties": {
          "epoch_sec": {"type": "number"},
          "dv_rtn_ms": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
          "spacecraft": {"type": "integer", "minimum": -1}
        }
      }
    }
  }
})";

template <class T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario configuration must be a JSON object");
  static const std::set<std::string> known{
      "dataset", "n_targets", "duration_orbits", "interval_sec", "noise_arcsec", "offaxis_arcsec",
      "roll_arcsec", "clutter_min", "clutter_max", "gap_fraction", "seed", "maneuvers", "n_maneuvers",
      "j2", "boresight_sign", "observer", "targets_km", "maneuver_list"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown configuration key '" + k + "'");
  ScenarioConfig c;
  if (j.contains("dataset")) c.dataset = Dataset::parse(get<std::string>(j, "dataset"));
  if (j.contains("maneuvers")) c.dataset.maneuvers = get<bool>(j, "maneuvers");
  if (j.contains("n_targets")) c.n_targets = get<int>(j, "n_targets");
  if (j.contains("duration_orbits")) c.duration_orbits = get<double>(j, "duration_orbits");
  if (j.contains("interval_sec")) c.interval = get<double>(j, "interval_sec");
  if (j.contains("noise_arcsec")) c.sigma_vbs = get<double>(j, "noise_arcsec") * kArcsec;
  if (j.contains("offaxis_arcsec")) c.sigma_offaxis = get<double>(j, "offaxis_arcsec") * kArcsec;
  if (j.contains("roll_arcsec")) c.sigma_roll = get<double>(j, "roll_arcsec") * kArcsec;
  if (j.contains("clutter_min")) c.clutter_min = get<int>(j, "clutter_min");
  if (j.contains("clutter_max")) c.clutter_max = get<int>(j, "clutter_max");
  if (j.contains("gap_fraction")) c.gap_fraction = get<double>(j, "gap_fraction");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("n_maneuvers")) c.n_maneuvers = get<int>(j, "n_maneuvers");
  if (j.contains("j2")) c.j2 = get<bool>(j, "j2");
  if (j.contains("boresight_sign")) c.boresight_sign = get<int>(j, "boresight_sign");
  if (j.contains("observer")) {
    const json& o = j.at("observer");
    KeplerianElements el;
    el.a = get<double>(o, "a_km");
    el.e = get<double>(o, "e");
    el.i = get<double>(o, "i_deg") * kDeg;
    el.raan = o.value("raan_deg", 0.0) * kDeg;
    el.argp = o.value("argp_deg", 0.0) * kDeg;
    el.M = o.value("M_deg", 0.0) * kDeg;
    c.observer = el;
  }
  if (j.contains("targets_km")) {
    for (const json& t : j.at("targets_km")) {
      RoeState r;
      r.da = t.value("da", 0.0);
      r.dl = t.value("dl", 0.0);
      r.dex = t.value("dex", 0.0);
      r.dey = t.value("dey", 0.0);
      r.dix = t.value("dix", 0.0);
      r.diy = t.value("diy", 0.0);
      c.targets_km.push_back(r);
    }
    c.n_targets = static_cast<int>(c.targets_km.size());
  }
  if (j.contains("maneuver_list")) {
    std::vector<ManeuverSpec> ms;
    for (const json& m : j.at("maneuver_list")) {
      ManeuverSpec s;
      s.epoch = get<double>(m, "epoch_sec");
      const auto dv = get<std::vector<double>>(m, "dv_rtn_ms");
      if (dv.size() != 3) throw ConfigError("dv_rtn_ms needs three components");
      s.dv = Vec3(dv[0], dv[1], dv[2]);
      s.spacecraft = get<int>(m, "spacecraft");
      ms.push_back(s);
    }
    c.maneuvers = ms;
  }
  c.validate();
  return c;
}

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["dataset"] = c.dataset.name();
  j["n_targets"] = c.n_targets;
  j["duration_orbits"] = c.duration_orbits;
  j["interval_sec"] = c.interval;
  j["noise_arcsec"] = c.sigma_vbs / kArcsec;
  j["offaxis_arcsec"] = c.sigma_offaxis / kArcsec;
  j["roll_arcsec"] = c.sigma_roll / kArcsec;
  j["clutter_min"] = c.clutter_min;
  j["clutter_max"] = c.clutter_max;
  j["gap_fraction"] = c.gap_fraction;
  j["seed"] = c.seed;
  j["n_maneuvers"] = c.n_maneuvers;
  j["j2"] = c.j2;
  j["boresight_sign"] = c.boresight_sign;
  return j;
}

// ---- recorded scenarios for replay ----

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a three-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json record_scenario(const Scenario& sc, const SimOutput& sim) {
  json j;
  j["config"] = config_to_json(sc.cfg);
  j["boresight_sign"] = sc.boresight_sign;
  j["period_sec"] = sc.period;
  j["observer_estimate"] = {{"r_km", vec_json(sc.observer_estimate0.r)},
                            {"v_kms", vec_json(sc.observer_estimate0.v)},
                            {"epoch_sec", sc.observer_estimate0.epoch}};
  json man = json::array();
  for (const auto& m : sc.maneuvers)
    man.push_back({{"epoch_sec", m.epoch}, {"dv_rtn_ms", vec_json(m.dv)}, {"spacecraft", m.spacecraft}});
  j["maneuvers"] = man;
  j["n_targets"] = sim.truth.n_targets;
  json scans = json::array();
  for (std::size_t i = 0; i < sim.scans.size(); ++i) {
    const Scan& s = sim.scans[i];
    const TruthEpoch& te = sim.truth.epochs[i];
    json b = json::array(), tb = json::array();
    for (const Bearing& x : s.bearings) b.push_back({x.alpha, x.epsilon});
    for (std::size_t t = 0; t < te.bearings.size(); ++t)
      tb.push_back({te.bearings[t].alpha, te.bearings[t].epsilon, static_cast<bool>(te.in_fov[t])});
    scans.push_back({{"k", s.k},
                     {"epoch_sec", s.epoch},
                     {"visible", s.visible},
                     {"bearings", b},
                     {"labels", s.truth_labels},
                     {"truth", tb}});
  }
  j["scans"] = scans;
  return j;
}

std::pair<Scenario, SimOutput> load_recording(const json& j) {
  try {
    Scenario sc;
    sc.cfg = config_from_json(j.at("config"));
    sc.boresight_sign = j.at("boresight_sign").get<int>();
    sc.period = j.at("period_sec").get<double>();
    const json& oe = j.at("observer_estimate");
    sc.observer_estimate0.r = vec_from(oe.at("r_km"));
    sc.observer_estimate0.v = vec_from(oe.at("v_kms"));
    sc.observer_estimate0.epoch = oe.at("epoch_sec").get<double>();
    for (const json& m : j.at("maneuvers"))
      sc.maneuvers.push_back({m.at("epoch_sec").get<double>(), vec_from(m.at("dv_rtn_ms")),
                              m.at("spacecraft").get<int>()});
    SimOutput sim;
    sim.truth.n_targets = j.at("n_targets").get<int>();
    sim.truth.boresight_sign = sc.boresight_sign;
    sim.truth.maneuvers = sc.maneuvers;
    for (const json& s : j.at("scans")) {
      Scan scan;
      scan.k = s.at("k").get<int>();
      scan.epoch = s.at("epoch_sec").get<double>();
      scan.visible = s.at("visible").get<bool>();
      for (const json& b : s.at("bearings")) scan.bearings.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
      scan.truth_labels = s.at("labels").get<std::vector<int>>();
      if (scan.truth_labels.size() != scan.bearings.size()) throw ConfigError("labels and bearings differ in length");
      TruthEpoch te;
      te.k = scan.k;
      te.t = scan.epoch;
      te.gap = !scan.visible;
      for (const json& t : s.at("truth")) {
        te.bearings.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
        te.in_fov.push_back(t.at(2).get<bool>());
      }
      if (static_cast<int>(te.bearings.size()) != sim.truth.n_targets) throw ConfigError("truth size mismatch");
      sim.truth.epochs.push_back(std::move(te));
      sim.scans.push_back(std::move(scan));
    }
    sc.n_scans = static_cast<int>(sim.scans.size());
    return {sc, sim};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario recording: ") + e.what());
  }
}

// ---- outputs ----

// Ratios without a defined value are written as null.
json json_ratio(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metrics_json(const CaseMetrics& m) {
  const bool empty = m.tp + m.fp + m.fn + m.tn == 0;
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn},
          {"tn", m.tn},
          {"precision", empty ? json(nullptr) : json(m.precision())},
          {"zero_assignments", m.zero_assignments()},
          {"recall", json_ratio(m.recall())},
          {"accuracy", json_ratio(m.accuracy())},
          {"error_mean_arcsec", json_ratio(m.mean_error() / kArcsec)},
          {"error_max_arcsec", m.error_count > 0 ? json(m.error_max / kArcsec) : json(nullptr)},
          {"target_maneuvers", m.target_maneuvers},
          {"maneuvers_correct", m.maneuvers_correct},
          {"runtime_mean_ms", m.runtime_mean_ms},
          {"runtime_max_ms", m.runtime_max_ms},
          {"scans", m.n_scans}};
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string());
  f.precision(12);
  return f;
}

void write_case_rows(std::ofstream& assign, std::ofstream& tracks, std::ofstream& truth, int case_id,
                     const CaseResult& r) {
  for (const AssignmentRecord& a : r.assignments)
    assign << case_id << ',' << a.k << ',' << a.epoch << ',' << a.tree << ',' << a.meas << ','
           << a.bearing.alpha << ',' << a.bearing.epsilon << ',' << a.truth_label << ','
           << a.mapped_target << ',' << (a.correct ? 1 : 0) << '\n';
  for (std::size_t i = 0; i < r.reports.size(); ++i) {
    const ScanReport& rep = r.reports[i];
    const Scan& s = r.sim.scans[i];
    for (const BestAssignment& b : rep.best) {
      tracks << case_id << ',' << rep.k << ',' << rep.epoch << ',' << b.tree << ',' << b.meas << ',';
      if (b.meas >= 0)
        tracks << s.bearings[static_cast<std::size_t>(b.meas)].alpha << ','
               << s.bearings[static_cast<std::size_t>(b.meas)].epsilon;
      else
        tracks << ',';
      tracks << '\n';
    }
  }
  for (const TruthEpoch& te : r.sim.truth.epochs)
    for (std::size_t t = 0; t < te.bearings.size(); ++t)
      truth << case_id << ',' << te.t << ',' << t << ',' << te.bearings[t].alpha << ','
            << te.bearings[t].epsilon << ',' << (te.in_fov[t] ? 1 : 0) << '\n';
}

void write_outputs(const fs::path& dir, const json& metrics, const std::vector<CaseResult>& cases) {
  fs::create_directories(dir);
  auto m = open_out(dir / "metrics.json");
  m << metrics.dump(2) << '\n';
  auto a = open_out(dir / "assignments.csv");
  a << "case,k,epoch_sec,tree,meas,alpha_rad,epsilon_rad,truth_label,mapped_target,correct\n";
  auto t = open_out(dir / "tracks.csv");
  t << "case,k,epoch_sec,tree,meas,alpha_rad,epsilon_rad\n";
  auto g = open_out(dir / "truth.csv");
  g << "case,epoch_sec,target,alpha_truth_rad,epsilon_truth_rad,in_fov\n";
  for (std::size_t c = 0; c < cases.size(); ++c) write_case_rows(a, t, g, static_cast<int>(c), cases[c]);
  auto s = open_out(dir / "scenario.schema.json");
  s << json::parse(kScenarioSchema).dump(2) << '\n';
}

json case_json(const CaseResult& r) {
  json j = metrics_json(r.metrics);
  j["seed"] = r.scenario.cfg.seed;
  json man = json::array();
  for (const auto& o : r.maneuver_outcomes) {
    json x = {{"epoch_sec", o.epoch}, {"tree", o.tree}, {"decided_k", o.decided_k}};
    auto it = r.tree_target.find(o.tree);
    x["target"] = it == r.tree_target.end() ? -1 : it->second;
    man.push_back(x);
  }
  j["maneuver_outcomes"] = man;
  json truth = json::array();
  for (std::size_t m = 0; m < r.scenario.maneuvers.size(); ++m) {
    const ManeuverSpec& ms = r.scenario.maneuvers[m];
    truth.push_back({{"epoch_sec", ms.epoch},
                     {"spacecraft", ms.spacecraft},
                     {"dv_rtn_ms", vec_json(m < r.scenario.executed_dv.size() ? r.scenario.executed_dv[m] : ms.dv)}});
  }
  j["maneuvers_truth"] = truth;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Angles-only multitarget tracking: simulation, tracking and scoring"};
  app.require_subcommand(1);

  std::string suite = "NC-EIS", maneuvers = "off", out_dir = "results";
  int cases = 25, threads = 0, targets = 3;
  std::uint64_t seed = 7;
  double interval = 120.0, noise = 20.0, gap = 0.0, orbits = 2.0;
  auto* run = app.add_subcommand("run", "Simulate and track a suite of random cases");
  run->add_option("--suite", suite, "NC-EIS, NC-IT, ECC-EIS or ECC-IT (optional -MAN suffix)");
  run->add_option("--cases", cases, "Number of cases")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Suite seed");
  run->add_option("--interval-sec", interval, "Scan interval in seconds")->check(CLI::PositiveNumber);
  run->add_option("--noise-arcsec", noise, "White bearing noise (1 sigma)")->check(CLI::NonNegativeNumber);
  run->add_option("--gap-frac", gap, "Fraction of each orbit without measurements")->check(CLI::Range(0.0, 0.99));
  run->add_option("--maneuvers", maneuvers, "on or off")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--targets", targets, "Targets per case")->check(CLI::NonNegativeNumber);
  run->add_option("--orbits", orbits, "Observation span in orbits")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads (0: all cores)");
  run->add_option("--out-dir", out_dir, "Output directory");

  std::string config_path, scenario_path, out_dir2 = "results";
  auto* scen = app.add_subcommand("scenario", "Simulate and track one configured scenario");
  scen->add_option("--config", config_path, "Scenario configuration JSON")->required();
  scen->add_option("--out-dir", out_dir2, "Output directory");

  std::string out_dir3 = "results";
  auto* replay = app.add_subcommand("replay", "Track a recorded scenario");
  replay->add_option("--scenario", scenario_path, "Recording written by 'scenario'")->required();
  replay->add_option("--out-dir", out_dir3, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      SuiteConfig sc;
      sc.base.dataset = Dataset::parse(suite);
      if (maneuvers == "on") sc.base.dataset.maneuvers = true;
      sc.base.interval = interval;
      sc.base.sigma_vbs = noise * kArcsec;
      sc.base.gap_fraction = gap;
      sc.base.n_targets = targets;
      sc.base.duration_orbits = orbits;
      sc.base.validate();
      sc.cases = cases;
      sc.seed = seed;
      sc.threads = threads;
      std::vector<CaseResult> results;
      const SuiteMetrics sm = run_suite(sc, &results);
      json j;
      j["suite"] = sc.base.dataset.name();
      j["seed"] = seed;
      j["cases"] = cases;
      j["config"] = config_to_json(sc.base);
      j["total"] = metrics_json(sm.total);
      j["total"]["maneuver_accuracy"] = sm.maneuver_accuracy();
      j["total"]["perfect_precision_fraction"] = json_ratio(sm.perfect_precision_fraction());
      j["per_case"] = json::array();
      for (const auto& r : results) j["per_case"].push_back(case_json(r));
      write_outputs(out_dir, j, results);
      std::cout << sc.base.dataset.name() << ": precision " << sm.total.precision() << ", recall "
                << sm.total.recall() << ", maneuver accuracy " << sm.maneuver_accuracy()
                << ", mean scan " << sm.total.runtime_mean_ms << " ms, max " << sm.total.runtime_max_ms
                << " ms\n";
    } else if (*scen) {
      const ScenarioConfig cfg = config_from_json(read_json_file(config_path));
      const Scenario sc = generate_scenario(cfg);
      SimOutput sim = simulate(sc);
      const json rec = record_scenario(sc, sim);
      const CaseResult r = evaluate(sc, std::move(sim));
      json j = case_json(r);
      j["config"] = config_to_json(cfg);
      write_outputs(out_dir2, j, {r});
      auto f = open_out(fs::path(out_dir2) / "scenario.json");
      f << rec.dump() << '\n';
      std::cout << "precision " << r.metrics.precision() << ", recall " << r.metrics.recall() << '\n';
    } else if (*replay) {
      auto [sc, sim] = load_recording(read_json_file(scenario_path));
      const CaseResult r = evaluate(sc, std::move(sim));
      json j = case_json(r);
      j["config"] = config_to_json(sc.cfg);
      write_outputs(out_dir3, j, {r});
      std::cout << "precision " << r.metrics.precision() << ", recall " << r.metrics.recall() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
