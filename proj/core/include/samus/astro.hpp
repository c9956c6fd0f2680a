#pragma once

#include <Eigen/Dense>
#include <vector>

#include "samus/constants.hpp"

namespace samus {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct GravityModel {
  double mu = kMuEarth;
  double j2 = kJ2Earth;
  double radius = kRadiusEarth;
};

double wrap_2pi(double x);
// Wrapped to (-pi, pi].
double wrap_pi(double x);

struct KeplerianElements {
  double a = 0.0;     // km
  double e = 0.0;
  double i = 0.0;     // rad
  double raan = 0.0;  // rad
  double argp = 0.0;  // rad
  double M = 0.0;     // rad

  double mean_motion(double mu = kMuEarth) const;
  double period(double mu = kMuEarth) const;
  double true_anomaly() const;
  double radius() const;
  // Mean argument of latitude u = M + omega.
  double mean_arg_lat() const { return wrap_2pi(M + argp); }
  // Throws InvalidInput when a <= 0, e outside [0, 1) or i outside [0, pi].
  void validate() const;
  KeplerianElements wrapped() const;
};

struct InertialState {
  Vec3 r = Vec3::Zero();  // km, PCI
  Vec3 v = Vec3::Zero();  // km/s, PCI
  double epoch = 0.0;     // s
};

struct Bearing {
  double alpha = 0.0;    // azimuth, rad
  double epsilon = 0.0;  // elevation, rad
};

// Bearing-plane coordinates (epsilon, alpha). Elevation lies along x of the
// tracking frame and azimuth along y, so phases in this plane line up with
// tracking-frame velocity directions.
inline Vec2 to_plane(const Bearing& b) { return {b.epsilon, b.alpha}; }
inline Bearing from_plane(const Vec2& p) { return {p.y(), p.x()}; }

Bearing bearing_from_los(const Vec3& los);
Vec3 los_from_bearing(const Bearing& b);

enum class Frame { V, T, W, R, P };

struct RotationChain {
  struct Link {
    Frame to;
    Frame from;
    Mat3 m;  // v_to = m * v_from
  };
  std::vector<Link> links;  // P<-W, W<-T, W<-R, T<-V
  double flight_path_angle = 0.0;
  int boresight_sign = 1;

  // Rotation taking coordinates in `from` to coordinates in `to`.
  Mat3 rotation(Frame to, Frame from) const;
  // Axes of frame f as columns, expressed in P.
  Mat3 axes_in_pci(Frame f) const;
};

RotationChain rotation_chain(const InertialState& observer, int boresight_sign);

Vec3 curvilinear_to_rectilinear(double dr, double theta, double phi, double a);

// Eccentric anomaly from mean anomaly.
double solve_kepler_eccentric(double M, double e);
double solve_kepler(double M, double e);
double mean_from_true(double f, double e);

KeplerianElements propagate_elements(const KeplerianElements& el, double dt, bool j2_flag,
                                     const GravityModel& g = {});

// First-order J2 secular rates (raan, argp, mean anomaly excess over n).
struct J2Rates {
  double raan_dot = 0.0;
  double argp_dot = 0.0;
  double mean_anomaly_dot = 0.0;
};
J2Rates j2_secular_rates(const KeplerianElements& el, const GravityModel& g = {});

InertialState cartesian_from_elements(const KeplerianElements& el, double mu = kMuEarth);
KeplerianElements elements_from_cartesian(const InertialState& s, double mu = kMuEarth);

Vec3 gravity_acceleration(const Vec3& r, bool j2_flag, const GravityModel& g = {});
// One classical fourth-order Runge-Kutta step.
InertialState rk4_step(const InertialState& s, double dt, bool j2_flag, const GravityModel& g = {});

// First-order J2 short-period offset of the osculating semimajor axis from its mean.
double j2_short_period_sma(const KeplerianElements& mean_el, const GravityModel& g = {});

}  // namespace samus
