#include "samus/maneuver.hpp"

#include <algorithm>
#include <cmath>

#include "samus/errors.hpp"

namespace samus {

Coeffs coeff_difference(const Coeffs& post, const Coeffs& pre) {
  Coeffs d{};
  for (std::size_t j = 0; j < 6; ++j) d[j] = post[j] - pre[j];
  d[2] = wrap_pi(d[2]);
  d[5] = wrap_pi(d[5]);
  return d;
}

Coeffs ManeuverHypothesis::dx_meas() const {
  if (!linear) return coeff_difference(x_post, x_pre);
  const auto yp = ParametricModel::from_x(x_post).y;
  const auto y0 = ParametricModel::from_x(x_pre).y;
  Coeffs d{};
  for (std::size_t j = 0; j < 6; ++j) d[j] = yp[j] - y0[j];
  return d;
}

Coeffs linearize_change(const Coeffs& x, const Coeffs& dx) {
  double m = 0.0;
  for (double v : dx) m = std::max(m, std::abs(v));
  Coeffs out{};
  if (m == 0.0) return out;
  // Central difference along dx; y is smooth in x so the step only needs to
  // be small against the phases.
  const double h = 1e-7 / m;
  Coeffs xp = x, xm = x;
  for (std::size_t j = 0; j < 6; ++j) {
    xp[j] += h * dx[j];
    xm[j] -= h * dx[j];
  }
  const auto yp = ParametricModel::from_x(xp).y;
  const auto ym = ParametricModel::from_x(xm).y;
  for (std::size_t j = 0; j < 6; ++j) out[j] = (yp[j] - ym[j]) / (2.0 * h);
  return out;
}

std::vector<BranchSpec> split_on_maneuver(std::span<const int> tracks, Actor actor) {
  std::vector<BranchSpec> out;
  for (int t : tracks) {
    if (actor == Actor::UnknownTarget) out.push_back({t, false});
    out.push_back({t, true});
  }
  return out;
}

Coeffs normalize_change(const Coeffs& dx) {
  double m = 0.0;
  for (double v : dx) m = std::max(m, std::abs(v));
  Coeffs out{};
  if (m == 0.0) return out;
  for (std::size_t j = 0; j < 6; ++j) out[j] = dx[j] / m;
  return out;
}

namespace {

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

std::size_t argmax_abs(const Coeffs& v) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < 6; ++j)
    if (std::abs(v[j]) > std::abs(v[best])) best = j;
  return best;
}

}  // namespace

std::array<double, 6> score_maneuver_assignment(const ManeuverHypothesis& h) {
  if (h.meas.size() < 4 || h.pred_pre.size() < 4)
    throw NotReady("maneuver scoring needs four post-maneuver scans");
  std::array<double, 6> s{};
  const Coeffs dm = h.dx_meas();
  const Coeffs pn = normalize_change(h.dx_pred);
  const Coeffs mn = normalize_change(dm);
  double e2 = 0.0;
  for (std::size_t j = 0; j < 6; ++j) e2 += (pn[j] - mn[j]) * (pn[j] - mn[j]);
  s[0] = std::sqrt(e2);
  s[1] = std::abs(static_cast<double>(argmax_abs(pn)) - static_cast<double>(argmax_abs(mn)));
  for (std::size_t j = 0; j < 6; ++j) s[2] += std::abs(sgn(pn[j]) - sgn(mn[j]));
  const Vec2 dev = h.meas.front() - h.pred_pre.front();
  s[3] = dev.norm() > 0.0 ? std::abs(wrap_pi(h.theta_man - std::atan2(dev.y(), dev.x()))) : kPi;
  double l1 = 0.0;
  for (double v : dm) l1 += std::abs(v);
  s[4] = l1 > 0.0 ? 1.0 / l1 : 1e12;
  const std::size_t n = std::min(h.meas.size(), h.pred_pre.size());
  for (std::size_t m = n - 4; m < n; ++m) {
    const double r = (h.meas[m] - h.pred_pre[m]).norm();
    s[5] += r > 1e-12 ? 1.0 / r : 1e12;
  }
  return s;
}

ManeuverDecision assign_or_reject(const std::vector<std::array<double, 6>>& scores,
                                  std::span<const double> change_norms,
                                  std::span<const double> thresholds) {
  ManeuverDecision d;
  const std::size_t n = scores.size();
  d.totals.assign(n, 0.0);
  if (n == 0) return d;
  for (std::size_t j = 0; j < 6; ++j) {
    double lo = scores[0][j], hi = scores[0][j];
    for (const auto& s : scores) {
      lo = std::min(lo, s[j]);
      hi = std::max(hi, s[j]);
    }
    if (hi > lo)
      for (std::size_t i = 0; i < n; ++i) d.totals[i] += (scores[i][j] - lo) / (hi - lo);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (d.totals[i] < d.totals[best]) best = i;
  if (change_norms[best] >= thresholds[best]) d.winner = best;
  return d;
}

Vec3 relative_dv_tracking(const ManeuverImpulse& m, const ObserverEpoch& obs, int boresight_sign) {
  const Vec3 dv = m.actor == Actor::Observer ? Vec3(-m.dv) : m.dv;
  const RotationChain rc = rotation_chain(obs.state, boresight_sign);
  // RTN of the burning spacecraft is taken equal to the observer's.
  const Vec3 dv_pci = rtn_axes(obs.state) * dv;
  return rc.rotation(Frame::T, Frame::P) * dv_pci;
}

namespace {

// Coefficients of the raw-frame model of a target with the given EROE, in
// units where the target range is |dls|.
Coeffs coeffs_from_eroe(const Vec6& x, double e, int s) {
  const double R = s * x[1];
  std::array<double, 6> y{};
  y[0] = s * x[2] / R;
  y[1] = s * x[3] / R;
  y[2] = -s * (x[0] - 0.5 * e * x[2]) / R;
  y[3] = -x[5] / R;
  y[4] = x[4] / R;
  y[5] = 0.0;
  return ParametricModel::from_y(y).x;
}

}  // namespace

Coeffs predict_model_change(const Coeffs& x_pre, const ManeuverImpulse& m, const ObserverEpoch& obs,
                            int boresight_sign, double mu) {
  const int s = boresight_sign >= 0 ? 1 : -1;
  const double e = obs.el.e;
  // Unit-range element set consistent with x_pre.
  const ParametricModel pm = ParametricModel::from_x(x_pre);
  Vec6 base;
  base[1] = s * 1.0;
  base[2] = s * pm.y[0];
  base[3] = s * pm.y[1];
  base[0] = -s * pm.y[2] + 0.5 * e * base[2];
  base[5] = -pm.y[3];
  base[4] = pm.y[4];
  // Element change in the same units (range scale is common and drops out
  // after normalization).
  const Vec6 droe = roe_change(m, obs.el, mu);
  const Vec6 deroe = roe_to_eroe_matrix(obs.el) * droe;
  const double scale = obs.el.a;  // dimensionless -> km, unit range ~ 1 km
  Coeffs dx{};
  for (int c = 0; c < 6; ++c) {
    const double h = 1e-6;
    Vec6 xp = base, xm = base;
    xp[c] += h;
    xm[c] -= h;
    const Coeffs cp = coeffs_from_eroe(xp, e, s);
    const Coeffs cm = coeffs_from_eroe(xm, e, s);
    const Coeffs dcol = coeff_difference(cp, cm);
    for (std::size_t j = 0; j < 6; ++j) dx[j] += dcol[j] / (2.0 * h) * deroe[c] * scale;
  }
  return dx;
}

}  // namespace samus
