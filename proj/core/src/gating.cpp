#include "samus/gating.hpp"

#include <algorithm>
#include <cmath>

#include "samus/errors.hpp"
#include "samus/motion_model.hpp"

namespace samus {

void GateConfig::validate() const {
  if (!(d_max > 0.0)) throw ConfigError("d_max must be positive");
  if (!(wedge_arc > 0.0 && wedge_arc < kPi)) throw ConfigError("wedge arc must lie in (0, pi)");
  if (sigma_vbs < 0.0) throw ConfigError("sigma_vbs must be non-negative");
  if (j_window < 1) throw ConfigError("j_window must be positive");
}

ErrorRegion build_error_region(const Vec2& prediction, double d_mean, double e_o,
                               const GateConfig& cfg, RegionContext ctx, const Vec2& dv_t) {
  if (!prediction.allFinite()) throw InvalidInput("non-finite prediction");
  ErrorRegion r;
  r.center = prediction;
  r.radius = std::max(10.0 * cfg.sigma_vbs, 2.0 * d_mean) * (1.0 + e_o);
  if (ctx == RegionContext::PostGap) r.radius *= 2.0;
  if (ctx == RegionContext::PostManeuver) {
    if (!(dv_t.norm() > 0.0)) throw DegenerateWedge("maneuver has no component across the boresight");
    r.kind = RegionKind::CircleUnionWedge;
    r.wedge_apex = prediction;
    r.wedge_phase = std::atan2(dv_t.y(), dv_t.x());
    r.wedge_arc = cfg.wedge_arc;
    r.wedge_radius = cfg.wedge_radius();
  }
  return r;
}

bool point_in_region(const Vec2& p, const ErrorRegion& r) {
  if ((p - r.center).norm() <= r.radius) return true;
  if (r.kind != RegionKind::CircleUnionWedge) return false;
  const Vec2 d = p - r.wedge_apex;
  const double dist = d.norm();
  if (dist > r.wedge_radius) return false;
  if (dist == 0.0) return true;
  const double ph = std::atan2(d.y(), d.x());
  // Small tolerance keeps the closed boundary robust to rounding in atan2.
  return std::abs(wrap_pi(ph - r.wedge_phase)) <= 0.5 * r.wedge_arc + 1e-12;
}

double r_max_bound(double aspect, double sigma_vbs, double d_mean, double e_o) {
  const double a = std::isfinite(aspect) && aspect >= 1.0 ? aspect : (aspect < 1.0 ? 1.0 : 1e3);
  const double noise = d_mean > 0.0 ? 10.0 * sigma_vbs / d_mean : 1e6;
  return (1.0 + 0.5 * a + noise) * (1.0 + e_o);
}

double psi_min_bound(double d_k, double d_mean, double sigma_vbs, double e_o) {
  const double base = 5.0 * kPi / 6.0;
  const double denom = std::max(d_mean, 10.0 * sigma_vbs);
  const double scaled = denom > 0.0 ? base * d_k / denom : base;
  return std::min(base, scaled) * (1.0 - e_o);
}

GateVerdict gate_candidate(const GateHistory& h, const Vec2& cand, const ErrorRegion& region,
                           const GateConfig& cfg) {
  if (h.points.empty()) throw InvalidInput("gating needs at least one prior point");
  GateVerdict v;
  const std::size_t n = h.points.size();
  const Vec2 vk = cand - h.points[n - 1];
  const double dk = vk.norm();

  // Rule 1: bounded velocity.
  v.rule[0] = dk < cfg.d_max * h.dt_min;

  // Prior steps of the segment.
  const std::size_t ns = n - 1;
  double d_mean = h.d_mean;
  if (ns >= 1 && d_mean < 0.0) {
    double s = 0.0;
    for (std::size_t i = 1; i < n; ++i) s += (h.points[i] - h.points[i - 1]).norm();
    d_mean = s / static_cast<double>(ns);
  }

  // Rule 2: consistent velocity.
  if (ns >= 1) {
    const double rmax = r_max_bound(h.aspect, cfg.sigma_vbs, d_mean, h.e_o);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(cfg.j_window), ns);
    double avg = 0.0;
    for (std::size_t i = n - j; i < n; ++i) avg += (h.points[i] - h.points[i - 1]).norm();
    avg /= static_cast<double>(j);
    bool ok = avg / rmax < dk && dk < rmax * avg;
    const double dprev = (h.points[n - 1] - h.points[n - 2]).norm();
    if (dprev > 0.0) ok = ok && (1.0 / rmax < dk / dprev) && (dk / dprev < rmax);
    if (avg == 0.0) ok = true;
    v.rule[1] = ok;
  }

  // Rule 3: no acute turns.
  double psi_k = kPi;
  bool psi_ok = false;
  if (ns >= 1) {
    const Vec2 vprev = h.points[n - 1] - h.points[n - 2];
    psi_ok = step_angle(vprev, vk, psi_k);
    // Ties at the regular-polygon cap count as passing; rounding would
    // otherwise decide them.
    if (psi_ok) v.rule[2] = psi_k > psi_min_bound(dk, d_mean, cfg.sigma_vbs, h.e_o) - 1e-9;
  }

  // Rule 4: consistent turning direction.
  if (ns >= 3 && psi_ok && std::abs(kPi - psi_k) > kPi / 10.0 && dk > 10.0 * cfg.sigma_vbs) {
    const Vec2 v1 = h.points[n - 1] - h.points[n - 2];
    const Vec2 v2 = h.points[n - 2] - h.points[n - 3];
    if (v1.norm() > 0.0 && v2.norm() > 0.0) {
      const double zk = std::atan2(vk.y(), vk.x());
      const double z1 = std::atan2(v1.y(), v1.x());
      const double z2 = std::atan2(v2.y(), v2.x());
      const double a = wrap_pi(zk - z1);
      const double b = wrap_pi(z1 - z2);
      if (a != 0.0 && b != 0.0) v.rule[3] = (a > 0.0) == (b > 0.0);
    }
  }

  // Rule 5: inside the error region.
  v.rule[4] = point_in_region(cand, region);

  v.pass = v.rule[0] && v.rule[1] && v.rule[2] && v.rule[3] && v.rule[4];
  return v;
}

}  // namespace samus
