#include "samus/astro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "samus/errors.hpp"

namespace samus {

double wrap_2pi(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  if (y >= kTwoPi) y = 0.0;
  return y;
}

double wrap_pi(double x) {
  double y = wrap_2pi(x);
  if (y > kPi) y -= kTwoPi;
  return y;
}

double KeplerianElements::mean_motion(double mu) const { return std::sqrt(mu / (a * a * a)); }

double KeplerianElements::period(double mu) const { return kTwoPi / mean_motion(mu); }

double KeplerianElements::true_anomaly() const { return solve_kepler(M, e); }

double KeplerianElements::radius() const {
  const double E = solve_kepler_eccentric(M, e);
  return a * (1.0 - e * std::cos(E));
}

void KeplerianElements::validate() const {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInput("semimajor axis must be positive");
  if (!(e >= 0.0 && e < 1.0)) throw InvalidInput("eccentricity must lie in [0, 1)");
  if (!(i >= 0.0 && i <= kPi)) throw InvalidInput("inclination must lie in [0, pi]");
  if (!std::isfinite(raan) || !std::isfinite(argp) || !std::isfinite(M))
    throw InvalidInput("non-finite angle");
}

KeplerianElements KeplerianElements::wrapped() const {
  KeplerianElements out = *this;
  out.raan = wrap_2pi(raan);
  out.argp = wrap_2pi(argp);
  out.M = wrap_2pi(M);
  return out;
}

Bearing bearing_from_los(const Vec3& los) {
  const double n = los.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("zero-length line of sight");
  if (los.z() <= 0.0) throw NotVisible("line of sight behind the camera");
  return {std::asin(los.y() / n), std::atan(los.x() / los.z())};
}

Vec3 los_from_bearing(const Bearing& b) {
  if (!(std::abs(b.alpha) < kPi / 2) || !(std::abs(b.epsilon) < kPi / 2))
    throw InvalidInput("bearing outside (-pi/2, pi/2)");
  const double ca = std::cos(b.alpha);
  return {ca * std::sin(b.epsilon), std::sin(b.alpha), ca * std::cos(b.epsilon)};
}

Mat3 RotationChain::axes_in_pci(Frame f) const {
  const Mat3& pw = links[0].m;
  switch (f) {
    case Frame::P:
      return Mat3::Identity();
    case Frame::W:
      return pw;
    case Frame::T:
    case Frame::V:
      return pw * links[1].m;
    case Frame::R:
      return pw * links[2].m;
  }
  return Mat3::Identity();
}

Mat3 RotationChain::rotation(Frame to, Frame from) const {
  return axes_in_pci(to).transpose() * axes_in_pci(from);
}

RotationChain rotation_chain(const InertialState& observer, int boresight_sign) {
  const Vec3 h = observer.r.cross(observer.v);
  const double hn = h.norm();
  if (!(hn > 1e-12 * observer.r.norm() * observer.v.norm()) || !std::isfinite(hn))
    throw DegenerateFrame("position and velocity are collinear");
  const int s = boresight_sign >= 0 ? 1 : -1;

  const Vec3 zw = h / hn;
  const Vec3 yw = observer.v.normalized();
  const Vec3 xw = yw.cross(zw);
  Mat3 pw;
  pw.col(0) = xw;
  pw.col(1) = yw;
  pw.col(2) = zw;

  // Tracking frame in W coordinates.
  const Vec3 zt = s * Vec3::UnitY();
  const Vec3 yt = Vec3::UnitZ();
  const Vec3 xt = yt.cross(zt);
  Mat3 wt;
  wt.col(0) = xt;
  wt.col(1) = yt;
  wt.col(2) = zt;

  // RTN axes in W: rotate by the flight-path angle about z.
  const double fpa = std::atan2(observer.r.dot(observer.v), hn);
  const double c = std::cos(fpa), sn = std::sin(fpa);
  Mat3 wr;
  wr << c, -sn, 0.0,
       sn, c, 0.0,
       0.0, 0.0, 1.0;

  RotationChain rc;
  rc.flight_path_angle = fpa;
  rc.boresight_sign = s;
  rc.links = {{Frame::P, Frame::W, pw},
              {Frame::W, Frame::T, wt},
              {Frame::W, Frame::R, wr},
              {Frame::T, Frame::V, Mat3::Identity()}};
  return rc;
}

Vec3 curvilinear_to_rectilinear(double dr, double theta, double phi, double a) {
  if (!(a > 0.0)) throw InvalidInput("reference radius must be positive");
  const double r = a + dr;
  return {r * std::cos(theta) * std::cos(phi) - a, r * std::sin(theta) * std::cos(phi),
          r * std::sin(phi)};
}

double solve_kepler_eccentric(double M, double e) {
  if (!(e >= 0.0 && e < 1.0)) throw UnsupportedOrbit("eccentricity outside [0, 1)");
  const double m = wrap_2pi(M);
  double E = e < 0.8 ? m : kPi;
  for (int it = 0; it < 60; ++it) {
    const double f = E - e * std::sin(E) - m;
    const double fp = 1.0 - e * std::cos(E);
    const double step = f / fp;
    E -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return E;
}

double solve_kepler(double M, double e) {
  const double E = solve_kepler_eccentric(M, e);
  const double f = 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(E / 2.0),
                                    std::sqrt(1.0 - e) * std::cos(E / 2.0));
  return wrap_2pi(f);
}

double mean_from_true(double f, double e) {
  const double E = 2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(f / 2.0),
                                    std::sqrt(1.0 + e) * std::cos(f / 2.0));
  return wrap_2pi(E - e * std::sin(E));
}

J2Rates j2_secular_rates(const KeplerianElements& el, const GravityModel& g) {
  const double n = el.mean_motion(g.mu);
  const double p = el.a * (1.0 - el.e * el.e);
  const double eta = std::sqrt(1.0 - el.e * el.e);
  const double k = 0.75 * n * g.j2 * (g.radius / p) * (g.radius / p);
  const double ci = std::cos(el.i);
  J2Rates r;
  r.raan_dot = -2.0 * k * ci;
  r.argp_dot = k * (5.0 * ci * ci - 1.0);
  r.mean_anomaly_dot = k * eta * (3.0 * ci * ci - 1.0);
  return r;
}

KeplerianElements propagate_elements(const KeplerianElements& el, double dt, bool j2_flag,
                                     const GravityModel& g) {
  KeplerianElements out = el;
  const double n = el.mean_motion(g.mu);
  out.M = el.M + n * dt;
  if (j2_flag) {
    const J2Rates r = j2_secular_rates(el, g);
    out.raan += r.raan_dot * dt;
    out.argp += r.argp_dot * dt;
    out.M += r.mean_anomaly_dot * dt;
  }
  return out.wrapped();
}

InertialState cartesian_from_elements(const KeplerianElements& el, double mu) {
  const double f = solve_kepler(el.M, el.e);
  const double p = el.a * (1.0 - el.e * el.e);
  const double r = p / (1.0 + el.e * std::cos(f));
  const Vec3 rp(r * std::cos(f), r * std::sin(f), 0.0);
  const double vs = std::sqrt(mu / p);
  const Vec3 vp(-vs * std::sin(f), vs * (el.e + std::cos(f)), 0.0);
  const double cO = std::cos(el.raan), sO = std::sin(el.raan);
  const double ci = std::cos(el.i), si = std::sin(el.i);
  const double cw = std::cos(el.argp), sw = std::sin(el.argp);
  Mat3 R;
  R << cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si,
       sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si,
       sw * si, cw * si, ci;
  return {R * rp, R * vp, 0.0};
}

KeplerianElements elements_from_cartesian(const InertialState& s, double mu) {
  const Vec3& r = s.r;
  const Vec3& v = s.v;
  const double rn = r.norm();
  const Vec3 h = r.cross(v);
  const double hn = h.norm();
  const Vec3 ev = v.cross(h) / mu - r / rn;
  KeplerianElements el;
  el.e = ev.norm();
  el.a = 1.0 / (2.0 / rn - v.squaredNorm() / mu);
  el.i = std::acos(std::clamp(h.z() / hn, -1.0, 1.0));
  const Vec3 nv = Vec3::UnitZ().cross(h);
  const double nn = nv.norm();
  const Vec3 hh = h / hn;
  // Equatorial orbits: node taken along x.
  const Vec3 nhat = nn > 1e-12 * hn ? Vec3(nv / nn) : Vec3::UnitX();
  el.raan = nn > 1e-12 * hn ? std::atan2(nv.y(), nv.x()) : 0.0;
  double u = std::atan2(r.dot(hh.cross(nhat)), r.dot(nhat));
  double f;
  if (el.e > 1e-12) {
    const Vec3 ehat = ev / el.e;
    el.argp = std::atan2(ev.dot(hh.cross(nhat)), ev.dot(nhat));
    f = std::atan2(r.dot(hh.cross(ehat)), r.dot(ehat));
  } else {
    el.argp = 0.0;
    f = u;
  }
  el.M = mean_from_true(f, el.e);
  return el.wrapped();
}

Vec3 gravity_acceleration(const Vec3& r, bool j2_flag, const GravityModel& g) {
  const double r2 = r.squaredNorm();
  const double rn = std::sqrt(r2);
  Vec3 acc = -g.mu * r / (r2 * rn);
  if (j2_flag) {
    const double f = 1.5 * g.j2 * g.mu * g.radius * g.radius / (r2 * r2 * rn);
    const double zz = 5.0 * r.z() * r.z() / r2;
    acc += f * Vec3(r.x() * (zz - 1.0), r.y() * (zz - 1.0), r.z() * (zz - 3.0));
  }
  return acc;
}

InertialState rk4_step(const InertialState& s, double dt, bool j2_flag, const GravityModel& g) {
  const Vec3 k1r = s.v;
  const Vec3 k1v = gravity_acceleration(s.r, j2_flag, g);
  const Vec3 k2r = s.v + 0.5 * dt * k1v;
  const Vec3 k2v = gravity_acceleration(s.r + 0.5 * dt * k1r, j2_flag, g);
  const Vec3 k3r = s.v + 0.5 * dt * k2v;
  const Vec3 k3v = gravity_acceleration(s.r + 0.5 * dt * k2r, j2_flag, g);
  const Vec3 k4r = s.v + dt * k3v;
  const Vec3 k4v = gravity_acceleration(s.r + dt * k3r, j2_flag, g);
  InertialState out;
  out.r = s.r + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
  out.v = s.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  out.epoch = s.epoch + dt;
  return out;
}

double j2_short_period_sma(const KeplerianElements& el, const GravityModel& g) {
  const double E = solve_kepler_eccentric(el.M, el.e);
  const double f = solve_kepler(el.M, el.e);
  const double r = el.a * (1.0 - el.e * std::cos(E));
  const double eta = std::sqrt(1.0 - el.e * el.e);
  const double si2 = std::sin(el.i) * std::sin(el.i);
  const double su = std::sin(el.argp + f);
  const double ar3 = std::pow(el.a / r, 3);
  return -g.j2 * g.radius * g.radius / el.a *
         (ar3 * (3.0 * si2 * su * su - 1.0) - (1.5 * si2 - 1.0) / (eta * eta * eta));
}

}  // namespace samus
