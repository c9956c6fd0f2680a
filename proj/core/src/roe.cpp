#include "samus/roe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "samus/errors.hpp"

namespace samus {

double RoeState::de() const { return std::hypot(dex, dey); }
double RoeState::di() const { return std::hypot(dix, diy); }
double RoeState::phi() const { return std::atan2(dey, dex); }
double RoeState::theta() const { return std::atan2(diy, dix); }

double EroeState::des() const { return std::hypot(dexs, deys); }
double EroeState::phis() const { return std::atan2(deys, dexs); }
double EroeState::di() const { return std::hypot(dix, diy); }
double EroeState::theta() const { return std::atan2(diy, dix); }

namespace {

void check_quasi_nonsingular(const KeplerianElements& o) {
  if (std::abs(std::sin(o.i)) < 1e-6)
    throw SingularRepresentation("relative elements are singular for equatorial observers");
}

}  // namespace

RoeState roe_from_oe(const KeplerianElements& o, const KeplerianElements& t) {
  check_quasi_nonsingular(o);
  const double dO = wrap_pi(t.raan - o.raan);
  RoeState r;
  r.da = (t.a - o.a) / o.a;
  r.dl = wrap_pi((t.M + t.argp) - (o.M + o.argp)) + std::cos(o.i) * dO;
  r.dex = t.e * std::cos(t.argp) - o.e * std::cos(o.argp);
  r.dey = t.e * std::sin(t.argp) - o.e * std::sin(o.argp);
  r.dix = t.i - o.i;
  r.diy = std::sin(o.i) * dO;
  return r;
}

KeplerianElements oe_from_roe(const KeplerianElements& o, const RoeState& r) {
  check_quasi_nonsingular(o);
  KeplerianElements t;
  t.a = o.a * (1.0 + r.da);
  t.i = o.i + r.dix;
  const double dO = r.diy / std::sin(o.i);
  t.raan = o.raan + dO;
  const double ex = o.e * std::cos(o.argp) + r.dex;
  const double ey = o.e * std::sin(o.argp) + r.dey;
  t.e = std::hypot(ex, ey);
  t.argp = t.e > 0.0 ? std::atan2(ey, ex) : 0.0;
  const double ut = (o.M + o.argp) + r.dl - std::cos(o.i) * dO;
  t.M = ut - t.argp;
  return t.wrapped();
}

double eroe_xi(double e) {
  const double one_m = 1.0 - e * e;
  return (1.0 + 0.5 * e * e) / (one_m * std::sqrt(one_m));
}

Mat6 roe_to_eroe_matrix(const KeplerianElements& o) {
  Mat6 L = Mat6::Identity();
  const double e = o.e;
  if (e == 0.0) return L;
  const double xi = eroe_xi(e);
  const double sw = std::sin(o.argp), cw = std::cos(o.argp);
  const double cot_i = std::cos(o.i) / std::sin(o.i);
  const double one_m = 1.0 - e * e;
  const double eta3 = one_m * std::sqrt(one_m);
  L.row(1) << 0.0, xi, -(1.0 - xi) * sw / e, (1.0 - xi) * cw / e, 0.0, (1.0 - xi) * cot_i;
  L.row(2) << 0.0, 0.0, cw / one_m, sw / one_m, 0.0, 0.0;
  L.row(3) << 0.0, -e / eta3, -sw / eta3, cw / eta3, 0.0, e * cot_i / eta3;
  return L;
}

EroeState eroe_from_roe(const RoeState& roe, const KeplerianElements& o) {
  if (o.e == 0.0) return EroeState::from_vec(roe.vec());
  return EroeState::from_vec(roe_to_eroe_matrix(o) * roe.vec());
}

Vec3 eroe_to_rtn_at(const EroeState& x, double f, double e, double argp, double r_over_a) {
  const double cf = std::cos(f), sf = std::sin(f);
  const double c2f = std::cos(2.0 * f), s2f = std::sin(2.0 * f);
  // de* cos(f - phi*), de* cos(2f - phi*), de* sin(f - phi*), de* sin(2f - phi*)
  const double c1 = x.dexs * cf + x.deys * sf;
  const double c2 = x.dexs * c2f + x.deys * s2f;
  const double s1 = x.dexs * sf - x.deys * cf;
  const double s2 = x.dexs * s2f - x.deys * c2f;
  const double u = f + argp;
  const Vec3 bracket(x.da - 0.5 * e * x.dexs - (c1 + 0.5 * e * c2),
                     x.dls + 2.0 * s1 + 0.5 * e * s2,
                     x.dix * std::sin(u) - x.diy * std::cos(u));
  return r_over_a * bracket;
}

Vec3 eroe_to_rtn(const EroeState& eroe, const KeplerianElements& o) {
  const double E = solve_kepler_eccentric(o.M, o.e);
  const double f = solve_kepler(o.M, o.e);
  return eroe_to_rtn_at(eroe, f, o.e, o.argp, 1.0 - o.e * std::cos(E));
}

double EllipseGeometry::aspect() const {
  if (degenerate) return 1.0;
  if (b_e <= 0.0) return std::numeric_limits<double>::infinity();
  return a_e / b_e;
}

EllipseGeometry ellipse_geometry(double de, double phi, double di, double theta, double da) {
  EllipseGeometry g;
  g.x_e = da;
  g.y_e = 0.0;
  if (de == 0.0 && di == 0.0) {
    g.degenerate = true;
    return g;
  }
  const double de2 = de * de, di2 = di * di;
  const double disc = std::sqrt(std::max(
      0.0, de2 * de2 + di2 * di2 - 2.0 * de2 * di2 * std::cos(2.0 * (phi - theta))));
  g.a_e = std::sqrt(std::max(0.0, 0.5 * (de2 + di2 + disc)));
  g.b_e = std::sqrt(std::max(0.0, 0.5 * (de2 + di2 - disc)));
  // Quadrant-resolved form so gamma_e always points along the major axis.
  g.gamma_e = 0.5 * std::atan2(-2.0 * de * di * std::sin(phi - theta), de2 - di2);
  return g;
}

EllipseGeometry ellipse_geometry(const RoeState& r) {
  return ellipse_geometry(r.de(), r.phi(), r.di(), r.theta(), r.da);
}

ShortPeriodJ2 j2_short_period(const KeplerianElements& o, const GravityModel& g) {
  const double u = o.M + o.argp;
  const double si = std::sin(o.i), ci = std::cos(o.i);
  const double si2 = si * si;
  const double ke = 1.5 * g.j2 * g.radius * g.radius / (o.a * o.a);
  const double ki = 0.375 * g.j2 * g.radius * g.radius / (o.a * o.a);
  ShortPeriodJ2 out;
  out.de_sp = ke * Vec2((1.0 - 1.25 * si2) * std::cos(u) + (7.0 / 12.0) * si2 * std::cos(3.0 * u),
                        (1.0 - 1.75 * si2) * std::sin(u) + (7.0 / 12.0) * si2 * std::sin(3.0 * u));
  out.di_sp = ki * Vec2(std::sin(2.0 * o.i) * std::cos(2.0 * u), 2.0 * ci * si * std::sin(2.0 * u));
  return out;
}

RoeState j2_secular(const RoeState& roe, const KeplerianElements& o, double t,
                    const GravityModel& g) {
  const double T = o.period(g.mu);
  const double ci = std::cos(o.i), si = std::sin(o.i);
  const double ratio = g.j2 * g.radius * g.radius / (o.a * o.a);
  RoeState out = roe;
  const double de = roe.de();
  const double phase = roe.phi() + 1.5 * kPi * t / T * ratio * (5.0 * ci * ci - 1.0);
  out.dex = de * std::cos(phase);
  out.dey = de * std::sin(phase);
  // Differential nodal regression driven by the inclination offset.
  out.diy = roe.diy + 3.0 * kPi * t / T * ratio * si * si * roe.dix;
  return out;
}

Mat63 control_input_matrix(const KeplerianElements& o, double mu) {
  const double e = o.e;
  const double eta = std::sqrt(1.0 - e * e);
  const double n = o.mean_motion(mu);
  const double f = solve_kepler(o.M, e);
  const double k = 1.0 + e * std::cos(f);
  if (!(k > 0.0)) throw InvalidInput("non-positive k");
  const double sf = std::sin(f), cf = std::cos(f);
  const double u = f + o.argp;
  const double su = std::sin(u), cu = std::cos(u);
  const double ex = e * std::cos(o.argp), ey = e * std::sin(o.argp);
  const double tan_i = std::tan(o.i);
  // (eta - 1) / e written as -e / (1 + eta), which stays finite as e -> 0.
  const double em = e / (1.0 + eta);

  Mat63 B;
  B.row(0) << 2.0 * e / (eta * eta) * sf, 2.0 * k / (eta * eta), 0.0;
  B.row(1) << -em * cf - 2.0 * eta / k, em * (k + 1.0) * sf / k, 0.0;
  B.row(2) << su, ((k + 1.0) * cu + ex) / k, ey * su / (k * tan_i);
  B.row(3) << -cu, ((k + 1.0) * su + ey) / k, -ex * su / (k * tan_i);
  B.row(4) << 0.0, 0.0, cu / k;
  B.row(5) << 0.0, 0.0, su / k;
  return -(eta / (o.a * n)) * B;
}

Vec6 roe_change(const ManeuverImpulse& m, const KeplerianElements& o, double mu) {
  const Vec3 dv_kms = m.dv * 1e-3;
  const Vec6 d = control_input_matrix(o, mu) * dv_kms;
  return m.actor == Actor::Observer ? d : Vec6(-d);
}

EroeState apply_impulse_to_eroe(const EroeState& eroe, const ManeuverImpulse& m,
                                const KeplerianElements& o, double mu) {
  const Vec6 d = roe_to_eroe_matrix(o) * roe_change(m, o, mu);
  return EroeState::from_vec(eroe.vec() + d);
}

}  // namespace samus
