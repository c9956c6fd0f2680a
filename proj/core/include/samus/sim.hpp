#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "samus/astro.hpp"
#include "samus/observer.hpp"
#include "samus/rng.hpp"
#include "samus/roe.hpp"

namespace samus {

enum class OrbitClass { NearCircular, Eccentric };
enum class FormationClass { Eis, InTrain };

struct Dataset {
  OrbitClass orbit = OrbitClass::NearCircular;
  FormationClass formation = FormationClass::Eis;
  bool maneuvers = false;

  // "NC-EIS", "ECC-IT-MAN", ...
  std::string name() const;
  static Dataset parse(const std::string& s);
};

// Maneuver as scheduled in a scenario. spacecraft = -1 for the observer,
// otherwise the target index.
struct ManeuverSpec {
  double epoch = 0.0;
  Vec3 dv = Vec3::Zero();  // nominal, RTN of the burning spacecraft, m/s
  int spacecraft = -1;
};

struct ScenarioConfig {
  Dataset dataset;
  int n_targets = 3;
  double duration_orbits = 2.0;
  double interval = 120.0;                // s
  double sigma_vbs = 20.0 * kArcsec;      // rad
  double sigma_offaxis = 3.0 * kArcsec;   // rad, per axis
  double sigma_roll = 20.0 * kArcsec;     // rad
  int clutter_min = 3;
  int clutter_max = 10;
  double gap_fraction = 0.0;
  std::uint64_t seed = 7;

  double sigma_pos = 0.010;   // km
  double sigma_vel = 0.02e-3; // km/s
  int n_maneuvers = 2;
  double dv_min = 0.1;        // m/s
  double dv_max = 2.0;        // m/s
  double dv_mag_sigma = 0.05; // fraction
  double dv_dir_sigma = 60.0 * kArcsec;
  // Minimum spacing between drawn maneuvers, in scan intervals.
  double maneuver_spacing_scans = 6.0;

  double fov_half_x = 6.0 * kDeg;  // elevation half-angle
  double fov_half_y = 5.0 * kDeg;  // azimuth half-angle

  // Observer orbit ranges. Eccentricity bounds < 0 select the class defaults.
  double rp_min = 6750.0, rp_max = 7150.0;
  double e_min = -1.0, e_max = -1.0;
  double i_min = 0.0, i_max = kPi;
  double min_abs_sin_i = 0.05;

  // Target ROE ranges, km.
  double da_max = 0.2;
  double dl_min = 10.0, dl_max = 200.0;
  double de_max = 5.0, di_max = 5.0;
  // Minimum dl/de and dl/di; < 0 selects 20 (EIS) or 200 (IT).
  double min_ratio = -1.0;

  bool j2 = true;
  GravityModel gravity;
  double integration_step = 10.0;  // s

  // Explicit geometry; when set, replaces the random draw.
  std::optional<KeplerianElements> observer;
  std::vector<RoeState> targets_km;  // ROE scaled by observer a, km
  std::optional<std::vector<ManeuverSpec>> maneuvers;
  int boresight_sign = 0;  // 0: sign of the first target's dl

  double e_lo() const;
  double e_hi() const;
  double ratio() const;
  // Throws ConfigError.
  void validate() const;
};

struct Scenario {
  ScenarioConfig cfg;
  KeplerianElements observer0;            // mean elements at t = 0
  std::vector<RoeState> target_roe;       // dimensionless
  std::vector<InertialState> initial;     // [0] observer, then targets (truth)
  int boresight_sign = 1;
  std::vector<ManeuverSpec> maneuvers;    // nominal
  std::vector<Vec3> executed_dv;          // per maneuver, m/s
  InertialState observer_estimate0;       // noisy initial observer state
  double period = 0.0;
  double gap_phase = 0.0;
  int n_scans = 0;

  double epoch(int k) const { return k * cfg.interval; }
  bool in_gap(double t) const;
};

struct TruthEpoch {
  int k = 0;
  double t = 0.0;
  std::vector<Bearing> bearings;  // per target, noiseless, tracking frame
  std::vector<bool> in_fov;
  bool gap = false;
  KeplerianElements observer;     // osculating truth
};

struct TruthLog {
  int n_targets = 0;
  int boresight_sign = 1;
  std::vector<TruthEpoch> epochs;
  std::vector<ManeuverSpec> maneuvers;  // with spacecraft labels
};

struct Scan {
  int k = 0;
  double epoch = 0.0;
  std::vector<Bearing> bearings;
  std::vector<int> truth_labels;  // target index, -1 for clutter
  bool visible = true;
};

// Draws observer orbit, target ROE and maneuvers. Rejects draws in which any
// target leaves the field of view over the span without maneuvers.
Scenario generate_scenario(const ScenarioConfig& cfg);

// Fixed-step RK4 propagation of all spacecraft with impulses applied at their
// exact epochs (executed, not nominal, dv).
class TruthPropagator {
 public:
  explicit TruthPropagator(const Scenario& sc, bool with_maneuvers = true);
  void advance(double t);
  double time() const { return t_; }
  // [0] observer, then targets.
  const std::vector<InertialState>& states() const { return states_; }

 private:
  const Scenario* sc_;
  bool with_maneuvers_;
  std::vector<InertialState> states_;
  std::size_t next_man_ = 0;
  std::vector<std::size_t> order_;
  double t_ = 0.0;
};

std::vector<InertialState> propagate_truth(const Scenario& sc, double t);

// Noiseless truth at the propagator's current time.
TruthEpoch truth_epoch(const Scenario& sc, const std::vector<InertialState>& states, int k);

Scan synthesize_scan(const TruthEpoch& truth, const ScenarioConfig& cfg, Rng& rng);

struct SimOutput {
  TruthLog truth;
  std::vector<Scan> scans;
};
SimOutput simulate(const Scenario& sc);

// Tracker-side observer knowledge: noisy initial state plus nominal observer burns.
ObserverEstimate make_observer_estimate(const Scenario& sc);
// Tracker-side maneuver list (nominal dv, actor flag only).
std::vector<ManeuverImpulse> known_maneuvers(const Scenario& sc);

}  // namespace samus
