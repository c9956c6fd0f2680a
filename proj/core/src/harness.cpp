#include "samus/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

namespace samus {

double CaseMetrics::precision() const {
  return tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
}
double CaseMetrics::recall() const {
  return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : std::nan("");
}
double CaseMetrics::accuracy() const {
  const long all = tp + fp + fn + tn;
  return all > 0 ? static_cast<double>(tp + tn) / static_cast<double>(all) : std::nan("");
}
double CaseMetrics::mean_error() const {
  return error_count > 0 ? error_sum / static_cast<double>(error_count) : std::nan("");
}
double SuiteMetrics::perfect_precision_fraction() const {
  if (per_case.empty()) return std::nan("");
  long n = 0;
  for (const CaseMetrics& c : per_case) n += c.fp == 0;
  return static_cast<double>(n) / static_cast<double>(per_case.size());
}
double SuiteMetrics::maneuver_accuracy() const {
  return total.target_maneuvers > 0
             ? static_cast<double>(total.maneuvers_correct) / total.target_maneuvers
             : 1.0;
}

TrackerConfig tracker_config_for(const Scenario& sc, TrackerConfig base) {
  base.boresight_sign = sc.boresight_sign;
  base.gate.sigma_vbs = sc.cfg.sigma_vbs;
  base.gate.fov = Vec2(sc.cfg.fov_half_x, sc.cfg.fov_half_y);
  return base;
}

CaseResult evaluate(const Scenario& sc, SimOutput sim, const TrackerConfig& base) {
  CaseResult r;
  r.scenario = sc;
  r.sim = std::move(sim);
  Tracker tracker(tracker_config_for(sc, base), make_observer_estimate(sc), known_maneuvers(sc));
  for (const Scan& s : r.sim.scans) {
    const auto t0 = std::chrono::steady_clock::now();
    ScanReport rep = tracker.process_scan(s);
    const auto t1 = std::chrono::steady_clock::now();
    r.scan_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    for (const auto& m : rep.maneuvers) r.maneuver_outcomes.push_back(m);
    r.reports.push_back(std::move(rep));
  }
  compute_metrics(r);
  return r;
}

CaseResult run_case(const ScenarioConfig& cfg, const TrackerConfig& base) {
  const Scenario sc = generate_scenario(cfg);
  return evaluate(sc, simulate(sc), base);
}

namespace {

double bearing_distance(const Bearing& a, const Bearing& b) {
  return std::hypot(a.alpha - b.alpha, a.epsilon - b.epsilon);
}

}  // namespace

void compute_metrics(CaseResult& r, double match_sigmas) {
  const auto& scans = r.sim.scans;
  const auto& truth = r.sim.truth;
  std::map<int, std::size_t> scan_index;
  for (std::size_t i = 0; i < scans.size(); ++i) scan_index[scans[i].k] = i;

  // Trees take the majority source of their emissions.
  std::map<int, std::map<int, int>> votes;
  std::vector<AssignmentRecord> recs;
  for (const ScanReport& rep : r.reports)
    for (const Emission& e : rep.emissions) {
      const Scan& s = scans[scan_index.at(e.k)];
      AssignmentRecord a;
      a.k = e.k;
      a.epoch = e.epoch;
      a.tree = e.tree;
      a.meas = e.meas;
      a.bearing = e.bearing;
      a.truth_label = s.truth_labels[static_cast<std::size_t>(e.meas)];
      ++votes[e.tree][a.truth_label];
      recs.push_back(a);
    }
  r.tree_target.clear();
  for (const auto& [tree, v] : votes) {
    auto best = std::max_element(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return a.second < b.second || (a.second == b.second && a.first > b.first);
    });
    if (best->first >= 0) r.tree_target[tree] = best->first;
  }

  const double tol = match_sigmas * r.scenario.cfg.sigma_vbs;
  std::map<std::pair<int, int>, std::vector<std::size_t>> by_scan_target;
  CaseMetrics m;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    AssignmentRecord& a = recs[i];
    auto it = r.tree_target.find(a.tree);
    if (it == r.tree_target.end()) {
      ++m.fp;
      continue;
    }
    a.mapped_target = it->second;
    const TruthEpoch& te = truth.epochs[scan_index.at(a.k)];
    const Bearing& tb = te.bearings[static_cast<std::size_t>(a.mapped_target)];
    a.correct = a.truth_label == a.mapped_target || bearing_distance(a.bearing, tb) <= tol;
    by_scan_target[{a.k, a.mapped_target}].push_back(i);
  }
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const TruthEpoch& te = truth.epochs[i];
    for (int j = 0; j < truth.n_targets; ++j) {
      const bool visible = scans[i].visible && te.in_fov[static_cast<std::size_t>(j)];
      auto it = by_scan_target.find({scans[i].k, j});
      if (it == by_scan_target.end()) {
        (visible ? m.fn : m.tn) += 1;
        continue;
      }
      bool ok = true;
      for (std::size_t idx : it->second) ok = ok && recs[idx].correct;
      (ok ? m.tp : m.fp) += 1;
      if (!ok) continue;
      for (std::size_t idx : it->second) {
        const double err = bearing_distance(recs[idx].bearing, te.bearings[static_cast<std::size_t>(j)]);
        m.error_sum += err;
        m.error_max = std::max(m.error_max, err);
        ++m.error_count;
      }
    }
  }

  // Maneuver attribution, matched by epoch.
  for (const ManeuverSpec& ms : r.scenario.maneuvers) {
    if (ms.spacecraft < 0) continue;
    ++m.target_maneuvers;
    for (const ManeuverOutcome& o : r.maneuver_outcomes) {
      if (std::abs(o.epoch - ms.epoch) > 1e-6 || o.tree < 0) continue;
      auto it = r.tree_target.find(o.tree);
      if (it != r.tree_target.end() && it->second == ms.spacecraft) ++m.maneuvers_correct;
    }
  }

  m.n_scans = static_cast<int>(r.scan_ms.size());
  for (double t : r.scan_ms) {
    m.runtime_mean_ms += t;
    m.runtime_max_ms = std::max(m.runtime_max_ms, t);
  }
  if (m.n_scans > 0) m.runtime_mean_ms /= m.n_scans;
  r.assignments = std::move(recs);
  r.metrics = m;
}

std::uint64_t case_seed(std::uint64_t suite_seed, int index) {
  return substream_seed(suite_seed, 1000 + static_cast<std::uint64_t>(index));
}

SuiteMetrics run_suite(const SuiteConfig& cfg, std::vector<CaseResult>* keep) {
  SuiteMetrics out;
  const int n = std::max(0, cfg.cases);
  out.per_case.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.case_seeds.push_back(case_seed(cfg.seed, i));
  if (keep) keep->assign(static_cast<std::size_t>(n), CaseResult{});

  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        ScenarioConfig c = cfg.base;
        c.seed = out.case_seeds[static_cast<std::size_t>(i)];
        CaseResult r = run_case(c, cfg.tracker);
        out.per_case[static_cast<std::size_t>(i)] = r.metrics;
        if (keep) (*keep)[static_cast<std::size_t>(i)] = std::move(r);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, std::max(1, n));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);

  CaseMetrics& T = out.total;
  double rt_sum = 0.0;
  for (const CaseMetrics& c : out.per_case) {
    T.tp += c.tp;
    T.fp += c.fp;
    T.fn += c.fn;
    T.tn += c.tn;
    T.target_maneuvers += c.target_maneuvers;
    T.maneuvers_correct += c.maneuvers_correct;
    T.n_scans += c.n_scans;
    T.error_sum += c.error_sum;
    T.error_count += c.error_count;
    T.error_max = std::max(T.error_max, c.error_max);
    rt_sum += c.runtime_mean_ms * c.n_scans;
    T.runtime_max_ms = std::max(T.runtime_max_ms, c.runtime_max_ms);
  }
  if (T.n_scans > 0) T.runtime_mean_ms = rt_sum / T.n_scans;
  return out;
}

}  // namespace samus
