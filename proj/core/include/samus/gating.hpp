#pragma once

#include <array>
#include <span>

#include "samus/astro.hpp"

namespace samus {

struct GateConfig {
  double d_max = 0.005;                // rad/min
  double sigma_vbs = 20.0 * kArcsec;   // rad
  int j_window = 6;
  double wedge_radius_frac = 0.2;
  double wedge_arc = kPi / 4.0;
  Vec2 fov = Vec2(6.0 * kDeg, 5.0 * kDeg);  // half-angles (elevation, azimuth)

  double wedge_radius() const { return wedge_radius_frac * fov.minCoeff(); }
  void validate() const;
};

enum class RegionKind { Circle, CircleUnionWedge };
enum class RegionContext { Normal, PostManeuver, PostGap };

struct ErrorRegion {
  RegionKind kind = RegionKind::Circle;
  Vec2 center = Vec2::Zero();  // (epsilon, alpha)
  double radius = 0.0;
  Vec2 wedge_apex = Vec2::Zero();
  double wedge_phase = 0.0;
  double wedge_arc = 0.0;
  double wedge_radius = 0.0;
};

// Circle of radius max(10 sigma, 2 d_mean)(1 + e), doubled after a gap, joined
// with a wedge along the maneuver direction after a maneuver. dv_t is the
// target-relative velocity change in the tracking frame (x, y components).
ErrorRegion build_error_region(const Vec2& prediction, double d_mean, double e_o,
                               const GateConfig& cfg, RegionContext ctx = RegionContext::Normal,
                               const Vec2& dv_t = Vec2::Zero());

// Closed region: boundary points are inside.
bool point_in_region(const Vec2& p, const ErrorRegion& r);

// Track history of the current segment, oldest first, plus context.
struct GateHistory {
  std::span<const Vec2> points;  // at least one prior point
  double dt_min = 2.0;           // minutes from the last point to the candidate
  double e_o = 0.0;
  double aspect = 1.0;           // a_e / b_e of the track
  // Mean step of the segment; < 0 derives it from points.
  double d_mean = -1.0;
};

struct GateVerdict {
  std::array<bool, 5> rule{true, true, true, true, true};
  bool pass = true;
};

double r_max_bound(double aspect, double sigma_vbs, double d_mean, double e_o);
double psi_min_bound(double d_k, double d_mean, double sigma_vbs, double e_o);

GateVerdict gate_candidate(const GateHistory& h, const Vec2& candidate, const ErrorRegion& region,
                           const GateConfig& cfg);

}  // namespace samus
