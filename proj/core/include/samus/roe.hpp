#pragma once

#include <Eigen/Dense>
#include <utility>

#include "samus/astro.hpp"

namespace samus {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

// Quasi-nonsingular relative orbital elements, dimensionless.
struct RoeState {
  double da = 0.0;
  double dl = 0.0;
  double dex = 0.0;
  double dey = 0.0;
  double dix = 0.0;
  double diy = 0.0;

  Vec6 vec() const { return (Vec6() << da, dl, dex, dey, dix, diy).finished(); }
  static RoeState from_vec(const Vec6& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
  double de() const;
  double di() const;
  double phi() const;
  double theta() const;
};

// Eccentric ROE: modified mean longitude and eccentricity vector.
struct EroeState {
  double da = 0.0;
  double dls = 0.0;
  double dexs = 0.0;
  double deys = 0.0;
  double dix = 0.0;
  double diy = 0.0;

  Vec6 vec() const { return (Vec6() << da, dls, dexs, deys, dix, diy).finished(); }
  static EroeState from_vec(const Vec6& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
  double des() const;
  double phis() const;
  double di() const;
  double theta() const;
};

enum class Actor { Observer, UnknownTarget };

struct ManeuverImpulse {
  double epoch = 0.0;          // s
  Vec3 dv = Vec3::Zero();      // m/s, RTN
  Actor actor = Actor::UnknownTarget;
};

RoeState roe_from_oe(const KeplerianElements& observer, const KeplerianElements& target);
// Inverse of roe_from_oe.
KeplerianElements oe_from_roe(const KeplerianElements& observer, const RoeState& roe);

// Xi factor of the eccentric modification.
double eroe_xi(double e);
// Linear ROE -> EROE map about the observer orbit (identity at e = 0).
Mat6 roe_to_eroe_matrix(const KeplerianElements& observer);
EroeState eroe_from_roe(const RoeState& roe, const KeplerianElements& observer);

// Dimensionless RTN position (multiply by a_o for km), evaluated at the observer's
// current true anomaly.
Vec3 eroe_to_rtn(const EroeState& eroe, const KeplerianElements& observer);
Vec3 eroe_to_rtn_at(const EroeState& eroe, double f, double e, double argp, double r_over_a);

struct EllipseGeometry {
  double a_e = 0.0;
  double b_e = 0.0;
  double x_e = 0.0;
  double y_e = 0.0;
  double gamma_e = 0.0;
  bool degenerate = false;  // point track, de = di = 0
  double aspect() const;    // a_e / b_e, 1 for a point
};
EllipseGeometry ellipse_geometry(const RoeState& roe);
EllipseGeometry ellipse_geometry(double de, double phi, double di, double theta, double da = 0.0);

struct ShortPeriodJ2 {
  Vec2 de_sp = Vec2::Zero();
  Vec2 di_sp = Vec2::Zero();
};
ShortPeriodJ2 j2_short_period(const KeplerianElements& observer, const GravityModel& g = {});

RoeState j2_secular(const RoeState& roe, const KeplerianElements& observer, double t,
                    const GravityModel& g = {});

// Maps an observer RTN impulse (km/s) to the ROE change. A target impulse maps through
// the negative of this matrix.
Mat63 control_input_matrix(const KeplerianElements& observer, double mu = kMuEarth);

// Change in ROE caused by an impulse (dv in m/s), with the actor sign applied.
Vec6 roe_change(const ManeuverImpulse& m, const KeplerianElements& observer, double mu = kMuEarth);

EroeState apply_impulse_to_eroe(const EroeState& eroe, const ManeuverImpulse& m,
                                const KeplerianElements& observer, double mu = kMuEarth);

}  // namespace samus
