#include "samus/observer.hpp"

#include <cmath>

#include "samus/errors.hpp"

namespace samus {

Mat3 rtn_axes(const InertialState& s) {
  const Vec3 rh = s.r.normalized();
  const Vec3 nh = s.r.cross(s.v).normalized();
  Mat3 m;
  m.col(0) = rh;
  m.col(1) = nh.cross(rh);
  m.col(2) = nh;
  return m;
}

ObserverEstimate::ObserverEstimate(const InertialState& initial, bool j2, const GravityModel& g)
    : j2_(j2), g_(g) {
  KeplerianElements el = elements_from_cartesian(initial, g.mu);
  // Remove the short-period part of a so the secular mean motion is right.
  if (j2) el.a -= j2_short_period_sma(el, g);
  segs_.push_back({initial.epoch, el});
}

ObserverEstimate::ObserverEstimate(const KeplerianElements& initial, double epoch, bool j2,
                                   const GravityModel& g)
    : j2_(j2), g_(g) {
  initial.validate();
  segs_.push_back({epoch, initial.wrapped()});
}

void ObserverEstimate::add_burn(double epoch, const Vec3& dv_rtn) {
  if (segs_.empty()) throw NotReady("observer estimate has no initial state");
  if (epoch < segs_.back().t0) throw SequencingError("observer burns must be added in order");
  ObserverEpoch oe = at(epoch);
  InertialState s = oe.state;
  s.v += rtn_axes(s) * (dv_rtn * 1e-3);
  // The state was built from mean elements, so the result stays a mean orbit.
  segs_.push_back({epoch, elements_from_cartesian(s, g_.mu)});
}

ObserverEpoch ObserverEstimate::at(double t) const {
  if (segs_.empty()) throw NotReady("observer estimate has no initial state");
  std::size_t idx = 0;
  for (std::size_t i = 1; i < segs_.size(); ++i)
    if (segs_[i].t0 <= t) idx = i;
  const Segment& sg = segs_[idx];
  ObserverEpoch out;
  out.t = t;
  out.el = propagate_elements(sg.el, t - sg.t0, j2_, g_);
  const double E = solve_kepler_eccentric(out.el.M, out.el.e);
  out.f = solve_kepler(out.el.M, out.el.e);
  out.r_over_a = 1.0 - out.el.e * std::cos(E);
  out.flight_path_angle =
      std::atan2(out.el.e * std::sin(out.f), 1.0 + out.el.e * std::cos(out.f));
  out.state = cartesian_from_elements(out.el, g_.mu);
  out.state.epoch = t;
  return out;
}

}  // namespace samus
