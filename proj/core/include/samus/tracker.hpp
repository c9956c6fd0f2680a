#pragma once

#include <array>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "samus/gating.hpp"
#include "samus/observer.hpp"
#include "samus/roe.hpp"
#include "samus/scoring.hpp"
#include "samus/sim.hpp"

namespace samus {

struct TrackerConfig {
  GateConfig gate;
  AmbiguityConstants ambiguity;
  int boresight_sign = 1;

  int fit_window = 8;          // measured points per segment fit
  int score_window = 8;        // epochs summed per hypothesis score
  int root_depth = 8;          // branches must agree this many scans back
  int max_targets = 10;
  int max_tracks_per_target = 20;
  int max_hypotheses = 6;
  int candidate_hypotheses = 40;  // cheapest hypotheses fully scored per scan

  double dbscan_eps = -1.0;    // rad; < 0 uses 2 d_max dt
  int dbscan_min_pts = 4;
  int init_scans = 4;

  double miss_period_frac = 0.1;  // consecutive misses allowed, fraction of T
  double unobserved_frac = 0.1;
  double ambiguous_frac = 0.5;
  int min_visible_for_fractions = 10;

  int maneuver_scans = 4;
  double maneuver_threshold_factor = 5.0;  // x pre-maneuver fit RMS
  // Model changes compared in the linear coefficients (all in bearing
  // radians) rather than amplitude/phase form.
  bool maneuver_linear_change = true;
  // Weight pulling the post-maneuver fit toward the pre-maneuver model; 0
  // fits the post points alone.
  double maneuver_post_prior = 0.1;
  // Rule 1 bound multiplier on segments opened by a known burn.
  double maneuver_dmax_factor = 2.0;

  void validate() const;
};

// Prediction for one tree from an outside filter, in tracking-frame bearings.
struct ExternalPrediction {
  int tree = 0;
  Bearing predicted;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  bool converged = false;
};

struct BestAssignment {
  int tree = 0;
  int meas = -1;  // index into the scan's bearings, -1 when missed
};

// A measurement confirmed as belonging to a tree. Issued once, possibly a few
// scans after the measurement was taken.
struct Emission {
  int k = 0;
  double epoch = 0.0;
  int tree = 0;
  int meas = 0;
  Bearing bearing;
};

struct ManeuverOutcome {
  int maneuver = 0;  // index into the tracker's maneuver list
  double epoch = 0.0;
  int tree = -1;     // -1 when rejected
  int decided_k = 0;
  std::vector<int> candidates;  // trees scored
  std::vector<double> totals;   // their normalized criterion sums
  std::vector<std::array<double, 6>> scores;  // raw criteria per candidate
};

struct ScanReport {
  int k = 0;
  double epoch = 0.0;
  bool visible = true;
  std::vector<BestAssignment> best;
  std::vector<Emission> emissions;
  std::vector<ManeuverOutcome> maneuvers;
  int n_trees = 0;
  int n_tracks = 0;
  int n_hypotheses = 0;
};

class Tracker {
 public:
  Tracker(const TrackerConfig& cfg, ObserverEstimate observer,
          std::vector<ManeuverImpulse> maneuvers = {});
  ~Tracker();
  Tracker(Tracker&&) noexcept;
  Tracker& operator=(Tracker&&) noexcept;

  // Scans must arrive with strictly increasing epochs (SequencingError).
  // Truth labels in the scan are ignored.
  ScanReport process_scan(const Scan& scan, std::span<const ExternalPrediction> external = {});

  // Track maintenance; runs at the end of every scan and is idempotent.
  void maintain();

  std::size_t tree_count() const;
  std::size_t track_count() const;
  std::size_t hypothesis_count() const;
  std::vector<double> hypothesis_totals() const;
  // Compact fingerprint of trees, branches and hypotheses.
  std::string state_digest() const;
  // Structural invariant violations of the current state, empty when sound:
  // hypotheses sharing a measurement, repeated trees, cap overruns.
  std::vector<std::string> audit() const;

  // Tracking-frame bearing rotated into the frame the tracker models in.
  Vec2 model_plane_point(const Bearing& b, double t) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace samus
