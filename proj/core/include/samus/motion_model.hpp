#pragma once

#include <array>
#include <span>
#include <vector>

#include "samus/astro.hpp"
#include "samus/observer.hpp"

namespace samus {

// Observer quantities that enter the bearing-space model at one epoch.
struct ModelEpoch {
  double f = 0.0;
  double e = 0.0;
  double argp = 0.0;
  double r_over_a = 1.0;

  static ModelEpoch from(const ObserverEpoch& o) { return {o.f, o.el.e, o.el.argp, o.r_over_a}; }
  // Same orbit, evaluated at another true anomaly.
  ModelEpoch at_anomaly(double f_new) const;
};

enum class FrameTag { Raw, Differential };

// Bearing-space motion model. Elevation (x1..x3) and azimuth (x4..x6)
// coefficients; y holds the linear form used by the fit.
struct ParametricModel {
  std::array<double, 6> x{};
  std::array<double, 6> y{};
  FrameTag frame = FrameTag::Raw;
  double fit_residual = 0.0;  // RMS over both axes, rad
  double residual_norm = 0.0; // |A1 y1 - eps| + |A2 y2 - alpha|
  int n_points = 0;

  static ParametricModel from_x(const std::array<double, 6>& x);
  static ParametricModel from_y(const std::array<double, 6>& y);
};

// One differenced or raw sample.
struct TrackPoint {
  double t = 0.0;
  Vec2 p = Vec2::Zero();  // (epsilon, alpha)
};

// Least-squares fit of the bearing-space model. Throws InvalidInput for fewer
// than three points and IllConditionedFit when the design is near rank deficient.
ParametricModel fit_parametric_model(std::span<const Bearing> bearings,
                                     std::span<const ModelEpoch> epochs);
ParametricModel fit_parametric_model(std::span<const Vec2> plane_points,
                                     std::span<const ModelEpoch> epochs);

// Same fit with weight * |y - prior.y|^2 added to the cost. Short arcs leave
// the curvature directions of the design poorly determined; the prior holds
// them at the prior model. fit_residual covers the data rows only.
ParametricModel fit_parametric_model_toward(std::span<const Vec2> plane_points,
                                            std::span<const ModelEpoch> epochs,
                                            const ParametricModel& prior, double weight);

Bearing predict_bearing(const ParametricModel& m, const ModelEpoch& ep);
Vec2 predict_plane(const ParametricModel& m, const ModelEpoch& ep);

// Zero-order or linear extrapolation from one or two previous points.
Bearing fallback_predict(std::span<const Bearing> history);
Vec2 fallback_predict(std::span<const Vec2> history);

// True anomaly whose model prediction is closest to the measurement, by
// golden-section search over f_seed +- pi/4.
double invert_model_for_f(const ParametricModel& m, const Bearing& meas, const ModelEpoch& seed);

struct TrackGeometry {
  std::vector<Vec2> v;         // v[i] = p[i+1] - p[i]
  std::vector<double> d;
  std::vector<double> zeta;
  std::vector<double> psi;     // psi[i] is the angle at p[i+1] between -v[i] and v[i+1]
  std::vector<bool> psi_defined;
  double d_mean = 0.0;
  double psi_mean = 0.0;
};

TrackGeometry track_geometry(std::span<const Vec2> points);
TrackGeometry track_geometry(std::span<const Bearing> bearings);

// Interior angle between steps a then b, in [0, pi]. Returns false when either
// step has zero length.
bool step_angle(const Vec2& a, const Vec2& b, double& psi);

// Ratio of the semi-axes of the closed track traced by the first-order
// model over one orbit; 1 when the track degenerates to a point, capped at cap.
double model_aspect(const ParametricModel& m, double argp, double cap = 1e3);

// Element-wise difference of two tracks sampled at the same epochs.
std::vector<TrackPoint> difference_tracks(std::span<const TrackPoint> track_i,
                                          std::span<const TrackPoint> track_j);

}  // namespace samus
