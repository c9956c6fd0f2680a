#pragma once

// Reference computations shared by the unit tests and the acceptance run.

#include <cstdint>
#include <string>
#include <vector>

#include "samus/samus.hpp"

namespace samus::oracle {

// Fit of noiseless samples of a random model, compared with the model.
struct RoundTrip {
  int cases = 0;
  double worst_coeff = 0.0;    // max relative error over y, phases absolute
  double worst_predict = 0.0;  // held-out prediction error relative to model scale
  double worst_x5 = 0.0;       // |x5 - sqrt(y4^2 + y5^2)|
};
RoundTrip model_round_trip(int cases, std::uint64_t seed);

// Linear element change against osculating elements differenced across a
// numerically applied impulse, |num - lin|_inf / |num|_inf.
double control_matrix_error(const KeplerianElements& observer, const RoeState& target_roe,
                            const ManeuverImpulse& burn);

struct ControlOracle {
  int cases = 0;
  double worst = 0.0;
};
ControlOracle control_matrix_oracle(int cases, double e, std::uint64_t seed);

// Scenario with the observer and three targets used for the distortion study.
ScenarioConfig distortion_scenario(bool j2);

// Sliding-window fit residuals of the raw and pairwise differenced tracks of a
// noiseless run, pooled RMS in arcsec.
struct Cancellation {
  double raw_rms = 0.0;
  double diff_rms = 0.0;
  double diff_worst = 0.0;  // largest single-window residual
  int windows = 0;
};
Cancellation transform_cancellation(const ScenarioConfig& cfg, int window);

// True continuations of noiseless simulated tracks put through the gate with
// the tracker's own prediction inputs.
struct GatePass {
  long pass = 0;
  long total = 0;
  double rate() const { return total > 0 ? double(pass) / double(total) : 0.0; }
};
GatePass noiseless_gate_pass(int cases, std::uint64_t seed);

// Gate invariants over random inputs; each member counts violations.
struct GateInvariants {
  int samples = 0;
  int r_max_floor = 0;
  int psi_min_cap = 0;
  int rotation = 0;
  int monotonic = 0;
};
GateInvariants gate_invariants(int samples, std::uint64_t seed);

// Tracker fuzz over simulated scans with heavy clutter.
struct Fuzz {
  int scans = 0;
  int compat = 0;       // audit failures
  int cap = 0;          // more than max_hypotheses live
  int idempotence = 0;  // maintain() changed the state
  int determinism = 0;  // rerun diverged
  std::vector<std::string> first_errors;
};
Fuzz tracker_fuzz(int min_scans, std::uint64_t seed);

}  // namespace samus::oracle
