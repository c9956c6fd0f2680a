#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "samus/motion_model.hpp"
#include "samus/observer.hpp"
#include "samus/roe.hpp"

namespace samus {

using Coeffs = std::array<double, 6>;

struct ManeuverHypothesis {
  int maneuver = 0;
  int candidate = 0;            // caller's track or tree id
  Coeffs x_pre{};
  Coeffs x_post{};
  Coeffs dx_pred{};             // predicted change (any positive scale)
  double theta_man = 0.0;       // bearing-plane phase of the target-relative dv
  double fit_rms_pre = 0.0;     // rad
  // Post-maneuver measurements and pre-maneuver model predictions, epochs k-3..k.
  std::vector<Vec2> meas;
  std::vector<Vec2> pred_pre;
  // Changes are taken in the linear coefficients y instead of x. dx_pred must
  // then be a y-space change as well (see linearize_change).
  bool linear = false;

  Coeffs dx_meas() const;
};

struct BranchSpec {
  int track = 0;
  bool maneuver = false;
};

// Two branches per track for an unknown-target maneuver, maneuver-only for an
// observer maneuver.
std::vector<BranchSpec> split_on_maneuver(std::span<const int> tracks, Actor actor);

// Delta x / max_j |Delta x_j|; zero stays zero.
Coeffs normalize_change(const Coeffs& dx);

// Coefficient difference with the phase components wrapped to (-pi, pi].
Coeffs coeff_difference(const Coeffs& post, const Coeffs& pre);

// First-order y-space image of an x-space change at x.
Coeffs linearize_change(const Coeffs& x, const Coeffs& dx);

// Six criteria; throws NotReady with fewer than four post-maneuver points.
std::array<double, 6> score_maneuver_assignment(const ManeuverHypothesis& h);

struct ManeuverDecision {
  std::optional<std::size_t> winner;  // index into the candidate list
  std::vector<double> totals;
};

// Criteria are min-max normalized across candidates and summed; the lowest
// total wins unless its model change is below its threshold.
ManeuverDecision assign_or_reject(const std::vector<std::array<double, 6>>& scores,
                                  std::span<const double> change_norms,
                                  std::span<const double> thresholds);

// Target-relative dv (m/s) expressed in the tracking frame. Observer burns are
// negated.
Vec3 relative_dv_tracking(const ManeuverImpulse& m, const ObserverEpoch& obs, int boresight_sign);

// Qualitative model change caused by the impulse, from the relative-element
// change pushed through the linearized element-to-coefficient map at x_pre.
Coeffs predict_model_change(const Coeffs& x_pre, const ManeuverImpulse& m, const ObserverEpoch& obs,
                            int boresight_sign, double mu = kMuEarth);

}  // namespace samus
