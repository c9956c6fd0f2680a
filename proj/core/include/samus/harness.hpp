#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "samus/sim.hpp"
#include "samus/tracker.hpp"

namespace samus {

enum class Outcome { TP, FP, FN, TN };

// One emitted measurement after truth matching.
struct AssignmentRecord {
  int k = 0;
  double epoch = 0.0;
  int tree = 0;
  int meas = 0;
  int truth_label = -1;     // source of the measurement, -1 clutter
  int mapped_target = -1;   // target the tree was matched to, -1 none
  bool correct = false;
  Bearing bearing;
};

struct CaseMetrics {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  int target_maneuvers = 0;
  int maneuvers_correct = 0;
  double runtime_mean_ms = 0.0;
  double runtime_max_ms = 0.0;
  int n_scans = 0;
  // Bearing error of true-positive assignments, rad.
  double error_sum = 0.0;
  double error_max = 0.0;
  long error_count = 0;

  // 1 when nothing was assigned (see zero_assignments). Recall and accuracy
  // are NaN when their denominators are empty.
  double precision() const;
  double recall() const;
  double accuracy() const;
  bool zero_assignments() const { return tp + fp == 0; }
  double mean_error() const;
};

struct CaseResult {
  Scenario scenario;
  SimOutput sim;
  std::vector<ScanReport> reports;
  std::vector<double> scan_ms;
  std::map<int, int> tree_target;  // tree -> target, absent when unmatched
  std::vector<AssignmentRecord> assignments;
  std::vector<ManeuverOutcome> maneuver_outcomes;
  CaseMetrics metrics;
};

// Tracker settings matching a scenario's sensor.
TrackerConfig tracker_config_for(const Scenario& sc, TrackerConfig base = {});

// Runs the tracker over already simulated scans and scores the result.
CaseResult evaluate(const Scenario& sc, SimOutput sim, const TrackerConfig& base = {});
CaseResult run_case(const ScenarioConfig& cfg, const TrackerConfig& base = {});

// Truth matching and per (scan, target) classification.
void compute_metrics(CaseResult& r, double match_sigmas = 5.0);

struct SuiteConfig {
  ScenarioConfig base;
  int cases = 25;
  std::uint64_t seed = 7;
  int threads = 0;  // 0: hardware concurrency
  TrackerConfig tracker;
};

struct SuiteMetrics {
  CaseMetrics total;
  std::vector<CaseMetrics> per_case;
  std::vector<std::uint64_t> case_seeds;
  double maneuver_accuracy() const;
  // Fraction of cases without a false positive.
  double perfect_precision_fraction() const;
};

std::uint64_t case_seed(std::uint64_t suite_seed, int index);

// Cases run in parallel; results are identical for any thread count.
SuiteMetrics run_suite(const SuiteConfig& cfg, std::vector<CaseResult>* keep = nullptr);

}  // namespace samus
